"""Implied volatility and the unit log-moneyness time-value map.

The central object is the function F sending total volatility x to the
time value of a call quoted at log-moneyness one, normalised so that

    F(x) = integral_0^x N'(1/v + v/2) dv,

an increasing bijection from (0, inf) onto (0, 1/e).  Composed with the
synthetic quote family c(K) = (e-1)K + e K^2 at spot S = eK, it yields
the identity sqrt(T) * sigma_implied(K, T) = F_inverse(K) on (0, 1/e),
which this module exposes from both ends: once through the generic
price inversion and once through direct quadrature of F.

F is always computed by quadrature here.  The closed form in terms of
the normal distribution function exists and is used by the tests as an
independent oracle; folding it into this module would leave the two
routes checking each other against themselves.
"""

from __future__ import annotations

from mpmath import mp, mpf

from .black_scholes import (
    Quote,
    VolPoint,
    _as_real,
    _core_integral,
    _positive,
    bs_price,
    vega,
)
from .precision import (
    DomainError,
    PrecisionConfig,
    norm_cdf,
    norm_pdf,
    solve_monotone,
)

__all__ = [
    "unit_time_value",
    "unit_time_value_inv",
    "probe_price",
    "probe_quote",
    "probe_implied_vol",
    "implied_vol",
]


def _tail_crossover(bits: int) -> int:
    # beyond this the tail of F is below 2**-(bits+16) and quadrature is
    # pointless; 40 keeps the branch out of every moderate-precision path
    return max(40, int(mp.ceil(mp.sqrt(8 * mp.log(2) * (bits + 16)))))


def unit_time_value(x, cfg: PrecisionConfig = PrecisionConfig()) -> mpf:
    """F(x): normalised time value at log-moneyness one, by quadrature.

    Strictly increasing on (0, inf) with range (0, 1/e).  Beyond a
    precision-dependent crossover the integral to infinity is complete
    to working accuracy and the value is returned as 1/e minus the tail
    estimate (2/sqrt(e)) * N(-x/2), whose own error is below
    representation noise there.  Computed values saturate at the
    working-precision rounding of 1/e once the true gap drops under an
    ulp; that is a property of the precision, not of the method.
    """
    with mp.workprec(cfg.working_bits):
        x = _positive(x, "total volatility")
        if x >= _tail_crossover(cfg.working_bits):
            tail = 2 * mp.exp(mpf(-1) / 2) * norm_cdf(-x / 2)
            return mp.exp(-1) - tail
        core = _core_integral(mpf(1), x, cfg)
        return mp.exp(mpf(-1) / 2) * core / mp.sqrt(2 * mp.pi)


def _inv_seed(y: mpf) -> mpf:
    """Rough F_inverse(y) for small y from the tail expansion of -log F."""
    L = mp.log(1 / y)
    x = 1 / mp.sqrt(2 * L)
    refined = L + 3 * mp.log(x) - mp.log(2 * mp.pi * mp.e) / 2
    if refined > L / 2:
        x = 1 / mp.sqrt(2 * refined)
    return x


def unit_time_value_inv(y, cfg: PrecisionConfig = PrecisionConfig()) -> mpf:
    """F_inverse(y) on the open interval (0, 1/e).

    Bracketed Newton on the quadrature route, with the exact derivative
    F'(x) = N'(1/x + x/2).  The bracket is grown geometrically from an
    asymptotic seed.  Targets closer to 1/e than the quadrature noise
    floor are rejected: F is flat to working tolerance there, so any
    returned preimage would be arbitrary within a huge interval.  The
    left end needs no such guard because F keeps full relative accuracy
    however small it gets.
    """
    with mp.workprec(cfg.working_bits):
        y = _as_real(y, "y")
        one_over_e = mp.exp(-1)
        if not (0 < y < one_over_e):
            raise DomainError(
                "unit_time_value_inv needs y in (0, 1/e); got %s" % mp.nstr(y, 8)
            )
        margin = 16 * cfg.quad_rel_tol * one_over_e
        if one_over_e - y <= margin:
            raise DomainError(
                "target is within %s of the limit 1/e; its preimage is not "
                "resolvable at quad_rel_tol=%s"
                % (mp.nstr(margin, 3), mp.nstr(cfg.quad_rel_tol, 3))
            )
        seed = _inv_seed(y)
        lo = seed / 2
        hi = max(2 * seed, mpf(4))
        f = lambda t: unit_time_value(t, cfg)
        for _ in range(cfg.working_bits):
            if f(lo) < y:
                break
            lo /= 2
        else:
            raise DomainError("could not bracket %s from below" % mp.nstr(y, 8))
        for _ in range(cfg.working_bits):
            if f(hi) > y:
                break
            hi *= 2
        else:
            raise DomainError("could not bracket %s from above" % mp.nstr(y, 8))

        def dF(t):
            return norm_pdf(1 / t + t / 2)

        x0 = seed if lo < seed < hi else None
        return solve_monotone(f, y, lo, hi, cfg, dg=dF, x0=x0)


def probe_price(K, cfg: PrecisionConfig = PrecisionConfig()) -> mpf:
    """The synthetic quote (e-1)K + e K^2 for the spot-e*K call family.

    Defined for K in (0, 1/e); at the right endpoint the quote touches
    the upper arbitrage bound S = eK, so the domain is open.
    """
    with mp.workprec(cfg.working_bits):
        K = _positive(K, "K")
        if K >= mp.exp(-1):
            raise DomainError(
                "probe strike must lie in (0, 1/e); got %s" % mp.nstr(K, 8)
            )
        return (mp.e - 1) * K + mp.e * K * K


def probe_quote(K, T=1, cfg: PrecisionConfig = PrecisionConfig()) -> Quote:
    """The full quote for the probe family: spot e*K, strike K, price c(K)."""
    with mp.workprec(cfg.working_bits):
        K = _positive(K, "K")
        return Quote(mp.e * K, K, T, probe_price(K, cfg))


def probe_implied_vol(K, T=1, cfg: PrecisionConfig = PrecisionConfig()) -> mpf:
    """Implied volatility of the probe quote, via the generic inversion.

    Satisfies sqrt(T) * probe_implied_vol(K, T) = unit_time_value_inv(K)
    identically on (0, 1/e); the two sides share no code path past the
    quote itself, which is what makes the identity a meaningful check.
    """
    return implied_vol(probe_quote(K, T, cfg), cfg)


def implied_vol(q: Quote, cfg: PrecisionConfig = PrecisionConfig()) -> mpf:
    """The volatility at which the closed-form price matches the quote.

    Quotes closer than 2**-(working_bits/2) * S to either arbitrage
    bound are rejected: past that point the inversion's conditioning
    has absorbed the entire tolerance budget and any returned number
    would be noise.  Inside the admissible band the solve is a
    bracketed Newton in total volatility with the closed-form vega.
    """
    with mp.workprec(cfg.working_bits):
        margin = mpf(2) ** (-(cfg.working_bits // 2)) * q.S
        time_value = q.c - q.intrinsic
        if time_value <= margin:
            raise DomainError(
                "quote is within %s of the intrinsic bound; implied volatility "
                "is not resolvable at working_bits=%d"
                % (mp.nstr(margin, 3), cfg.working_bits)
            )
        if q.S - q.c <= margin:
            raise DomainError(
                "quote is within %s of the upper bound S; implied volatility "
                "is not resolvable at working_bits=%d"
                % (mp.nstr(margin, 3), cfg.working_bits)
            )
        sqrtT = mp.sqrt(q.T)

        def price_at(s):
            return bs_price(VolPoint(q.S, q.K, q.T, s / sqrtT), cfg)

        def dprice(s):
            return vega(VolPoint(q.S, q.K, q.T, s / sqrtT), cfg) / sqrtT

        lo = mpf(2) ** -40
        hi = mpf(2) ** 12
        floor = mpf(2) ** (-(cfg.working_bits + 64))
        while price_at(lo) > q.c:
            lo /= 16
            if lo < floor:
                raise DomainError("no bracket below total volatility %s" % mp.nstr(floor, 3))
        while price_at(hi) < q.c:
            hi *= 4
            if hi > mpf(2) ** 40:
                raise DomainError("no bracket above total volatility 2^40")
        # Brenner-style seed: exact in the ATM small-vol limit, and the
        # bracketed solve forgives it everywhere else
        seed = mp.sqrt(2 * mp.pi) * time_value / q.S
        x0 = seed if lo < seed < hi else None
        s = solve_monotone(price_at, q.c, lo, hi, cfg, dg=dprice, x0=x0)
        return s / sqrtT
