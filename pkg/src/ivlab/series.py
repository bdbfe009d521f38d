"""Truncated power series, univariate and trivariate, and the pipelines
built on them.

Univariate series here are Taylor expansions around an explicit center
with coefficients indexed by power of the offset.  The trivariate kind
expands the implied-volatility function in the three quote coordinates
(spot, strike, price) around the distinguished point (1/2, 1/(2e),
1/2 - 1/(4e)), at which the log-moneyness is exactly one and the strike
equals the synthetic quote family's free parameter.

Two independent pipelines produce the same univariate object: reverting
the series of F and scaling by 1/sqrt(T), or substituting the quote
family's offsets (eX, X, eX + eX^2) into the trivariate expansion.
Their agreement is the series-level form of the two-path identity and
is enforced by the acceptance tests rather than assumed anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from mpmath import mp, mpf

from .black_scholes import VolPoint, _as_real, _positive, bs_price
from .implied import unit_time_value, unit_time_value_inv
from .precision import ConvergenceError, DomainError, PrecisionConfig, norm_cdf, norm_pdf

__all__ = [
    "PowerSeries",
    "TriSeries",
    "identity_series",
    "series_F",
    "series_reverse",
    "series_f_direct",
    "tri_series_I",
    "substitute_specialize",
    "TRI_CENTER_BITS",
]


def _check_partner(a: "PowerSeries", b: "PowerSeries") -> int:
    if a.center != b.center:
        raise DomainError("series centers differ")
    if a.bits != b.bits:
        raise DomainError("series precisions differ")
    return min(a.order, b.order)


@dataclass(frozen=True)
class PowerSeries:
    """Sum of coeffs[i] * (x - center)^i, truncated after coeffs[-1].

    ``bits`` records the working precision the coefficients were built
    at; binary operations demand matching centers and bits and truncate
    to the shorter operand.  ``exact`` optionally carries the same
    coefficients as Fractions for series that genuinely have rational
    coefficients; arithmetic drops it (results are float-only), it is
    metadata for consumers that can exploit exactness.
    """

    center: mpf
    coeffs: Tuple[mpf, ...]
    bits: int
    exact: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise DomainError("a series needs at least its constant coefficient")
        object.__setattr__(self, "center", _as_real(self.center, "center"))
        object.__setattr__(
            self, "coeffs", tuple(_as_real(c, "coefficient") for c in self.coeffs)
        )
        if self.exact is not None:
            if len(self.exact) != len(self.coeffs):
                raise DomainError("exact payload length must match coeffs")
            object.__setattr__(self, "exact", tuple(Fraction(q) for q in self.exact))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def truncate(self, order: int) -> "PowerSeries":
        if order < 0:
            raise DomainError("order must be nonnegative")
        if order >= self.order:
            return self
        ex = self.exact[: order + 1] if self.exact is not None else None
        return PowerSeries(self.center, self.coeffs[: order + 1], self.bits, ex)

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        n = _check_partner(self, other)
        with mp.workprec(self.bits):
            coeffs = tuple(self.coeffs[i] + other.coeffs[i] for i in range(n + 1))
        return PowerSeries(self.center, coeffs, self.bits)

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        return self + other.scale(-1)

    def scale(self, c) -> "PowerSeries":
        with mp.workprec(self.bits):
            c = mpf(c) if not isinstance(c, mpf) else c
            return PowerSeries(self.center, tuple(a * c for a in self.coeffs), self.bits)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        n = _check_partner(self, other)
        with mp.workprec(self.bits):
            out = [mpf(0)] * (n + 1)
            for i, a in enumerate(self.coeffs[: n + 1]):
                if a == 0:
                    continue
                for j in range(0, n + 1 - i):
                    b = other.coeffs[j]
                    if b != 0:
                        out[i + j] += a * b
        return PowerSeries(self.center, tuple(out), self.bits)

    def reciprocal(self) -> "PowerSeries":
        if self.coeffs[0] == 0:
            raise DomainError("reciprocal needs a nonzero constant term")
        with mp.workprec(self.bits):
            inv0 = 1 / self.coeffs[0]
            out = [inv0]
            for m in range(1, self.order + 1):
                acc = mpf(0)
                for k in range(1, m + 1):
                    acc += self.coeffs[k] * out[m - k]
                out.append(-inv0 * acc)
        return PowerSeries(self.center, tuple(out), self.bits)

    def __truediv__(self, other: "PowerSeries") -> "PowerSeries":
        n = _check_partner(self, other)
        if other.coeffs[0] == 0:
            raise DomainError("division needs a nonzero constant term in the divisor")
        with mp.workprec(self.bits):
            inv0 = 1 / other.coeffs[0]
            out = []
            for m in range(n + 1):
                acc = self.coeffs[m]
                for k in range(1, m + 1):
                    acc -= other.coeffs[k] * out[m - k]
                out.append(acc * inv0)
        return PowerSeries(self.center, tuple(out), self.bits)

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """Substitute ``inner`` (constant term zero) for this series'
        offset variable; the result lives on ``inner``'s center."""
        if inner.coeffs[0] != 0:
            raise DomainError("composition needs zero constant term in the inner series")
        if self.bits != inner.bits:
            raise DomainError("series precisions differ")
        n = min(self.order, inner.order)
        with mp.workprec(self.bits):
            acc = PowerSeries(inner.center, (self.coeffs[n],) + (mpf(0),) * n, self.bits)
            for i in range(n - 1, -1, -1):
                acc = acc * inner.truncate(n)
                acc = acc + PowerSeries(
                    inner.center, (self.coeffs[i],) + (mpf(0),) * n, self.bits
                )
        return acc

    def exp(self) -> "PowerSeries":
        with mp.workprec(self.bits):
            out = [mp.exp(self.coeffs[0])]
            for m in range(1, self.order + 1):
                acc = mpf(0)
                for k in range(1, m + 1):
                    acc += k * self.coeffs[k] * out[m - k]
                out.append(acc / m)
        return PowerSeries(self.center, tuple(out), self.bits)

    def log(self) -> "PowerSeries":
        if self.coeffs[0] <= 0:
            raise DomainError("log needs a positive constant term")
        with mp.workprec(self.bits):
            out = [mp.log(self.coeffs[0])]
            for m in range(1, self.order + 1):
                acc = m * self.coeffs[m]
                for k in range(1, m):
                    acc -= k * out[k] * self.coeffs[m - k]
                out.append(acc / (m * self.coeffs[0]))
        return PowerSeries(self.center, tuple(out), self.bits)

    def derivative(self) -> "PowerSeries":
        if self.order == 0:
            raise DomainError("cannot differentiate a constant-only series")
        with mp.workprec(self.bits):
            coeffs = tuple((i + 1) * c for i, c in enumerate(self.coeffs[1:]))
        return PowerSeries(self.center, coeffs, self.bits)

    def antiderivative(self, constant=0) -> "PowerSeries":
        with mp.workprec(self.bits):
            constant = mpf(constant) if not isinstance(constant, mpf) else constant
            coeffs = (constant,) + tuple(c / (i + 1) for i, c in enumerate(self.coeffs))
        return PowerSeries(self.center, coeffs, self.bits)

    def evaluate(self, x) -> mpf:
        """Horner evaluation at the point ``x`` (not the offset)."""
        with mp.workprec(self.bits):
            u = _as_real(x, "x") - self.center
            acc = self.coeffs[-1]
            for c in reversed(self.coeffs[:-1]):
                acc = acc * u + c
            return acc


def identity_series(center, order: int, bits: int) -> PowerSeries:
    """The function x around ``center``: coeffs (center, 1, 0, ...)."""
    if order < 1:
        raise DomainError("identity series needs order >= 1")
    with mp.workprec(bits):
        center = _as_real(center, "center")
        coeffs = (center, mpf(1)) + (mpf(0),) * (order - 1)
    return PowerSeries(center, coeffs, bits)


def series_F(x0, order: int, cfg: PrecisionConfig = PrecisionConfig()) -> PowerSeries:
    """Taylor series of F at x0 > 0.

    Built from the derivative: F'(x) = N'(1/x + x/2) is the exp of a
    rational series in the offset, so every coefficient past the first
    comes from series arithmetic alone; the constant of integration is
    the one quadrature value F(x0).
    """
    if order < 1:
        raise DomainError("series_F needs order >= 1")
    wb = cfg.working_bits
    with mp.workprec(wb):
        x0 = _positive(x0, "x0")
        xs = identity_series(x0, order - 1, wb) if order > 1 else identity_series(x0, 1, wb).truncate(1)
        g = xs.reciprocal() + xs.scale(mpf(1) / 2)
        fprime = (g * g).scale(mpf(-1) / 2).exp().scale(1 / mp.sqrt(2 * mp.pi))
        fprime = fprime.truncate(order - 1)
        const = unit_time_value(x0, cfg)
        return fprime.antiderivative(const)


def series_reverse(s: PowerSeries) -> PowerSeries:
    """Compositional inverse: a series r around s(center) with r(s(x)) = x.

    Newton iteration with order doubling on the zero-constant parts;
    each refinement step works at the truncation it can actually
    resolve, which keeps the composition costs near the final one.
    """
    if s.order < 1 or s.coeffs[1] == 0:
        raise DomainError("series is not invertible: linear coefficient is zero")
    n = s.order
    wb = s.bits
    with mp.workprec(wb):
        shifted = PowerSeries(mpf(0), (mpf(0),) + s.coeffs[1:], wb)
        ident = identity_series(mpf(0), n, wb)
        r = PowerSeries(mpf(0), (mpf(0), 1 / s.coeffs[1]), wb)
        k = 1
        while k < n:
            k = min(2 * k, n)
            sh = shifted.truncate(k)
            r = r.truncate(k)
            # pad r to order k so compositions resolve every new term
            if r.order < k:
                r = PowerSeries(mpf(0), r.coeffs + (mpf(0),) * (k - r.order), wb)
            err = sh.compose(r) - ident.truncate(k)
            slope = sh.derivative()
            if slope.order < k:
                slope = PowerSeries(
                    mpf(0), slope.coeffs + (mpf(0),) * (k - slope.order), wb
                )
            r = r - (err / slope.compose(r))
        coeffs = (s.center,) + r.coeffs[1:]
        return PowerSeries(s.coeffs[0], coeffs, wb)


def series_f_direct(
    order: int, T=1, cfg: PrecisionConfig = PrecisionConfig()
) -> PowerSeries:
    """Series of the probe implied volatility in K at center 1/(2e).

    Reverts series_F at x0 = F_inverse(1/(2e)) and scales by 1/sqrt(T).
    The reversal's natural center is the quadrature value F(x0), equal
    to 1/(2e) up to solver tolerance; the returned series is stamped
    with the exact working-precision 1/(2e), absorbing that residual
    into coefficient noise far below the working tolerance.
    """
    wb = cfg.working_bits
    with mp.workprec(wb):
        T = _positive(T, "T")
        K0 = mp.exp(-1) / 2
        x0 = unit_time_value_inv(K0, cfg)
        rev = series_reverse(series_F(x0, order, cfg))
        scaled = rev.scale(1 / mp.sqrt(T))
        return PowerSeries(K0, scaled.coeffs, wb)


# ---------------------------------------------------------------------------
# trivariate expansion


def TRI_CENTER_BITS(bits: int) -> Tuple[mpf, mpf, mpf]:
    """The distinguished center (1/2, 1/(2e), 1/2 - 1/(4e)) at ``bits``."""
    with mp.workprec(bits):
        S0 = mpf(1) / 2
        K0 = mp.exp(-1) / 2
        c0 = mpf(1) / 2 - mp.exp(-1) / 4
        return S0, K0, c0


class TriSeries:
    """Truncated Taylor series in three offsets with total-degree cap.

    Coefficients are a sparse map from exponent triples (i, j, k) with
    i + j + k <= total_degree; the three indices follow the quote
    coordinates (spot, strike, price).  Instances are immutable by
    convention: operations return new objects and never mutate.
    """

    __slots__ = ("center", "data", "total_degree", "bits")

    def __init__(self, center, data: Dict[Tuple[int, int, int], mpf], total_degree: int, bits: int):
        if total_degree < 0:
            raise DomainError("total_degree must be nonnegative")
        self.center = tuple(_as_real(c, "center") for c in center)
        if len(self.center) != 3:
            raise DomainError("TriSeries center must be a triple")
        self.total_degree = total_degree
        self.bits = bits
        clean: Dict[Tuple[int, int, int], mpf] = {}
        for (i, j, k), v in data.items():
            if i < 0 or j < 0 or k < 0 or i + j + k > total_degree:
                raise DomainError("exponent triple outside the truncation")
            v = _as_real(v, "coefficient")
            if v != 0:
                clean[(i, j, k)] = v
        self.data = clean

    def __eq__(self, other):
        return (
            isinstance(other, TriSeries)
            and self.center == other.center
            and self.total_degree == other.total_degree
            and self.bits == other.bits
            and self.data == other.data
        )

    def coefficient(self, i: int, j: int, k: int) -> mpf:
        return self.data.get((i, j, k), mpf(0))

    def _like(self, data) -> "TriSeries":
        return TriSeries(self.center, data, self.total_degree, self.bits)

    def __add__(self, other: "TriSeries") -> "TriSeries":
        self._check(other)
        with mp.workprec(self.bits):
            out = dict(self.data)
            for key, v in other.data.items():
                out[key] = out.get(key, mpf(0)) + v
        return self._like(out)

    def __sub__(self, other: "TriSeries") -> "TriSeries":
        return self + other.scale(-1)

    def scale(self, c) -> "TriSeries":
        with mp.workprec(self.bits):
            c = mpf(c) if not isinstance(c, mpf) else c
            return self._like({k: v * c for k, v in self.data.items()})

    def shift(self, c) -> "TriSeries":
        with mp.workprec(self.bits):
            c = mpf(c) if not isinstance(c, mpf) else c
            out = dict(self.data)
            out[(0, 0, 0)] = out.get((0, 0, 0), mpf(0)) + c
        return self._like(out)

    def __mul__(self, other: "TriSeries") -> "TriSeries":
        self._check(other)
        D = self.total_degree
        with mp.workprec(self.bits):
            out: Dict[Tuple[int, int, int], mpf] = {}
            for (i1, j1, k1), a in self.data.items():
                d1 = i1 + j1 + k1
                for (i2, j2, k2), b in other.data.items():
                    if d1 + i2 + j2 + k2 > D:
                        continue
                    key = (i1 + i2, j1 + j2, k1 + k2)
                    prod = a * b
                    if key in out:
                        out[key] += prod
                    else:
                        out[key] = prod
        return self._like(out)

    def _check(self, other: "TriSeries"):
        if not isinstance(other, TriSeries):
            raise DomainError("expected a TriSeries operand")
        if (
            self.center != other.center
            or self.total_degree != other.total_degree
            or self.bits != other.bits
        ):
            raise DomainError("TriSeries operands are not compatible")

    def valuation(self, floor_value) -> int:
        """Lowest total degree with a coefficient above ``floor_value``;
        total_degree + 1 when everything is below it."""
        best = self.total_degree + 1
        for (i, j, k), v in self.data.items():
            if abs(v) > floor_value:
                best = min(best, i + j + k)
        return best

    def reciprocal(self) -> "TriSeries":
        c0 = self.coefficient(0, 0, 0)
        if c0 == 0:
            raise DomainError("reciprocal needs a nonzero constant term")
        with mp.workprec(self.bits):
            neg_hat = self.shift(-c0).scale(-1 / c0)
            # geometric series: 1/(c0 (1 + hat)) = (1/c0) sum (-hat)^k
            acc = _tri_const(self, 1 / c0)
            term = _tri_const(self, 1 / c0)
            for _ in range(self.total_degree):
                term = term * neg_hat
                acc = acc + term
        return acc


def _tri_const(model: TriSeries, value) -> TriSeries:
    return TriSeries(model.center, {(0, 0, 0): value}, model.total_degree, model.bits)


def _tri_variable(model_center, index: int, D: int, bits: int) -> TriSeries:
    key = tuple(1 if t == index else 0 for t in range(3))
    with mp.workprec(bits):
        return TriSeries(model_center, {key: mpf(1)}, D, bits)


def _apply_taylor(derivs: Sequence[mpf], hat: TriSeries) -> TriSeries:
    """Horner sum of derivs[k]/k! * hat^k for a zero-constant hat."""
    if hat.coefficient(0, 0, 0) != 0:
        raise DomainError("Taylor application needs a zero-constant series")
    with mp.workprec(hat.bits):
        terms = []
        fact = mpf(1)
        for k, d in enumerate(derivs):
            if k > 0:
                fact *= k
            terms.append(d / fact)
        acc = _tri_const(hat, terms[-1])
        for c in reversed(terms[:-1]):
            acc = acc * hat
            acc = acc.shift(c)
        return acc


def _npdf_derivs(x0: mpf, count: int) -> list:
    """The normal density and its derivatives at x0 through ``count``.

    The k-th derivative of the density is (-1)^k He_k(x0) times the
    density, with He the probabilists' Hermite polynomials.
    """
    phi = norm_pdf(x0)
    out = [phi]
    he_prev, he = mpf(0), mpf(1)
    for k in range(1, count + 1):
        he, he_prev = x0 * he - (k - 1) * he_prev, he
        sign = -1 if (k % 2) else 1
        out.append(sign * he * phi)
    return out


def _ncdf_derivs(x0: mpf, count: int) -> list:
    """N(x0) followed by the density derivatives, ``count + 1`` entries."""
    return [norm_cdf(x0)] + _npdf_derivs(x0, count - 1)


def _log_tri(base: mpf, hat: TriSeries) -> TriSeries:
    """log(base + hat) for base > 0 and zero-constant hat."""
    D = hat.total_degree
    with mp.workprec(hat.bits):
        derivs = [mp.log(base)]
        for k in range(1, D + 1):
            sign = 1 if (k % 2) else -1
            derivs.append(sign * mp.factorial(k - 1) / base**k)
        return _apply_taylor(derivs, hat)


def tri_series_I(
    total_degree: int, cfg: PrecisionConfig = PrecisionConfig()
) -> TriSeries:
    """Expansion of implied volatility in (spot, strike, price) offsets.

    Newton iteration at the series level: sigma is corrected by the
    residual of the closed-form price over the vega series, both built
    from series primitives (log, reciprocal, Taylor application of the
    normal distribution), never from hand-derived partials.  The
    residual's valuation must climb strictly each sweep until it clears
    total_degree; stalling raises ConvergenceError.
    """
    if total_degree < 1:
        raise DomainError("total_degree must be >= 1")
    wb = cfg.working_bits
    D = total_degree
    with mp.workprec(wb):
        S0, K0, c0 = TRI_CENTER_BITS(wb)
        center = (S0, K0, c0)
        sigma0 = unit_time_value_inv(K0, cfg)
        # polish the center volatility against the closed form so the
        # constant residual starts quadratically below the noise floor
        lam0 = mp.log(S0 / K0)
        for _ in range(2):
            pt = VolPoint(S0, K0, mpf(1), sigma0)
            vega0 = S0 * norm_pdf(lam0 / sigma0 + sigma0 / 2)
            sigma0 = sigma0 - (bs_price(pt, cfg) - c0) / vega0
        X = _tri_variable(center, 0, D, wb)
        Y = _tri_variable(center, 1, D, wb)
        Z = _tri_variable(center, 2, D, wb)
        log_ratio = _log_tri(S0, X) - _log_tri(K0, Y)
        price_target = Z.shift(c0)
        noise = mpf(2) ** (-(wb // 2) - 8)

        sigma = _tri_const(X, sigma0)
        resolved = 0
        sweeps = int(mp.ceil(mp.log(D + 1, 2))) + 1
        for _ in range(sweeps):
            recip_sigma = sigma.reciprocal()
            half_sigma = sigma.scale(mpf(1) / 2)
            d1 = log_ratio * recip_sigma + half_sigma
            d2 = d1 - sigma
            d1c = d1.coefficient(0, 0, 0)
            d2c = d2.coefficient(0, 0, 0)
            n1 = _apply_taylor(_ncdf_derivs(d1c, D), d1.shift(-d1c))
            n2 = _apply_taylor(_ncdf_derivs(d2c, D), d2.shift(-d2c))
            price = X.shift(S0) * n1 - Y.shift(K0) * n2
            residual = price - price_target
            val = residual.valuation(noise)
            if val > D:
                return TriSeries(center, sigma.data, D, wb)
            if val <= resolved:
                raise ConvergenceError(
                    "series Newton stalled at total degree %d" % val
                )
            resolved = val
            phi1 = _apply_taylor(_npdf_derivs(d1c, D), d1.shift(-d1c))
            vega_series = X.shift(S0) * phi1
            sigma = sigma - residual * vega_series.reciprocal()
        # one final residual check after the last sweep
        recip_sigma = sigma.reciprocal()
        d1 = log_ratio * recip_sigma + sigma.scale(mpf(1) / 2)
        d2 = d1 - sigma
        d1c = d1.coefficient(0, 0, 0)
        d2c = d2.coefficient(0, 0, 0)
        n1 = _apply_taylor(_ncdf_derivs(d1c, D), d1.shift(-d1c))
        n2 = _apply_taylor(_ncdf_derivs(d2c, D), d2.shift(-d2c))
        residual = X.shift(S0) * n1 - Y.shift(K0) * n2 - price_target
        if residual.valuation(noise) <= D:
            raise ConvergenceError(
                "series Newton did not clear total degree %d" % D
            )
        return TriSeries(center, sigma.data, D, wb)


def substitute_specialize(t: TriSeries, order: int) -> PowerSeries:
    """Collapse the trivariate expansion onto the probe quote family.

    Substitutes (eX, X, eX + eX^2) for the three offsets and collects a
    univariate series in the strike offset X around 1/(2e).  Exponent
    triples of total degree g contribute only to powers >= g, so an
    expansion of total degree D determines the univariate coefficients
    through order D completely.
    """
    if order < 0:
        raise DomainError("order must be nonnegative")
    if order > t.total_degree:
        raise DomainError(
            "order %d exceeds the available total degree %d" % (order, t.total_degree)
        )
    wb = t.bits
    with mp.workprec(wb):
        e = mp.e
        # powers of w = eX + eX^2 as coefficient lists starting at degree 0
        w = [mpf(0), e, e]
        wpow = [[mpf(1)]]
        for _ in range(t.total_degree):
            prev = wpow[-1]
            nxt = [mpf(0)] * min(len(prev) + 2, order + 1)
            for i, a in enumerate(prev):
                if a == 0:
                    continue
                for j, b in enumerate(w):
                    if b == 0 or i + j >= len(nxt):
                        continue
                    nxt[i + j] += a * b
            wpow.append(nxt)
        epow = [mpf(1)]
        for _ in range(t.total_degree):
            epow.append(epow[-1] * e)
        out = [mpf(0)] * (order + 1)
        for (i, j, k), v in sorted(t.data.items()):
            base = i + j
            if base > order:
                continue
            contrib = v * epow[i]
            for deg, wc in enumerate(wpow[k]):
                m = base + deg
                if m > order:
                    break
                if wc != 0:
                    out[m] += contrib * wc
        return PowerSeries(t.center[1], tuple(out), wb)
