"""Precision plumbing shared by every numeric module.

All real arithmetic in this package runs on mpmath floats under an explicit
binary precision carried by a :class:`PrecisionConfig`.  mpmath exponents are
plain integers, so magnitudes like exp(-20000) are ordinary values here; the
failure modes we guard against are therefore not overflow but silent
non-convergence (quadrature, root finding) and non-finite intermediates, all
of which surface as typed exceptions.

Conventions:

* functions that take a ``cfg`` set the working precision themselves;
* leaf evaluators (:func:`norm_pdf`, :func:`norm_cdf`) run at the caller's
  ambient mpmath precision so they can sit inside quadrature loops;
* quadrature runs internally at a precision derived from ``quad_rel_tol``
  (plus guard bits), independent of ``working_bits``, because the contract is
  a relative tolerance, not a bit count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from mpmath import mp, mpf, isfinite, isnan

__all__ = [
    "NumericsError",
    "DomainError",
    "ConvergenceError",
    "PrecisionError",
    "PrecisionConfig",
    "DEFAULT_BITS",
    "real",
    "ensure_finite",
    "norm_pdf",
    "norm_cdf",
    "integrate",
    "solve_monotone",
]

DEFAULT_BITS = 256

# Tolerances tighter than this have no meaning at any supported precision.
_MIN_TOL_EXP = -32


class NumericsError(Exception):
    """Base class for every failure this package raises on purpose."""


class DomainError(NumericsError):
    """Input outside the documented domain of an operation."""


class ConvergenceError(NumericsError):
    """An iterative scheme exhausted its budget without meeting tolerance."""

    def __init__(self, message: str, achieved: Optional[mpf] = None):
        super().__init__(message)
        self.achieved = achieved


class PrecisionError(ConvergenceError):
    """Escalation exhausted; carries the precision that might succeed."""

    def __init__(self, message: str, required_bits: int):
        super().__init__(message)
        self.required_bits = required_bits


def _default_tol(bits: int) -> mpf:
    return mpf(2) ** (-(bits // 2))


@dataclass(frozen=True)
class PrecisionConfig:
    """Working precision and the tolerances derived from it.

    ``quad_rel_tol`` and ``root_rel_tol`` default to 2**-(working_bits/2),
    which keeps quadrature and root residuals far below representation
    noise while leaving half the mantissa as guard digits.
    """

    working_bits: int = DEFAULT_BITS
    quad_rel_tol: Optional[mpf] = None
    root_rel_tol: Optional[mpf] = None

    def __post_init__(self):
        if not isinstance(self.working_bits, int) or self.working_bits < 64:
            raise DomainError("working_bits must be an integer >= 64")
        for name in ("quad_rel_tol", "root_rel_tol"):
            value = getattr(self, name)
            if value is None:
                value = _default_tol(self.working_bits)
            else:
                value = mpf(value)
                if not (0 < value <= mpf(2) ** _MIN_TOL_EXP):
                    raise DomainError(
                        "%s must lie in (0, 2^%d]" % (name, _MIN_TOL_EXP)
                    )
            object.__setattr__(self, name, value)

    def with_bits(self, bits: int) -> "PrecisionConfig":
        """New precision with tolerances re-derived from it.

        Used by escalation paths, which want the defaults of the higher
        precision rather than the tolerances frozen into this config.
        """
        return PrecisionConfig(bits)


def real(x, bits: Optional[int] = None) -> mpf:
    """Convert ``x`` (str, int, float, Fraction, mpf) to a finite mpf.

    Strings round correctly at the requested precision, so decimal inputs
    like "0.1" carry no double-rounding artifacts.
    """
    prec = bits if bits is not None else mp.prec
    with mp.workprec(prec):
        if isinstance(x, Fraction):
            value = mpf(x.numerator) / x.denominator
        else:
            value = mpf(x)
    return ensure_finite(value)


def ensure_finite(x: mpf, what: str = "value") -> mpf:
    if isnan(x) or not isfinite(x):
        raise DomainError("%s is not finite: %r" % (what, x))
    return x


_SQRT_TWO_PI_CACHE: dict[int, mpf] = {}


def _sqrt_two_pi() -> mpf:
    prec = mp.prec
    cached = _SQRT_TWO_PI_CACHE.get(prec)
    if cached is None:
        cached = mp.sqrt(2 * mp.pi)
        _SQRT_TWO_PI_CACHE[prec] = cached
    return cached


def norm_pdf(x) -> mpf:
    """Standard normal density at the ambient mpmath precision."""
    x = mpf(x)
    ensure_finite(x, "norm_pdf argument")
    return mp.exp(-x * x / 2) / _sqrt_two_pi()


def norm_cdf(x) -> mpf:
    """Standard normal distribution function via erfc.

    erfc keeps full relative accuracy in both tails, so norm_cdf(-40)
    is exact to the ambient precision rather than rounding to zero.
    """
    x = mpf(x)
    ensure_finite(x, "norm_cdf argument")
    return mp.erfc(-x / mp.sqrt(2)) / 2


def _tol_bits(tol: mpf) -> int:
    return int(math.ceil(-mp.log(tol, 2)))


def integrate(
    f: Callable[[mpf], mpf],
    lo,
    hi,
    cfg: PrecisionConfig,
    points: Optional[Sequence] = None,
) -> mpf:
    """Definite integral of ``f`` over [lo, hi] with tanh-sinh quadrature.

    Meets ``cfg.quad_rel_tol`` relatively, falling back to an absolute
    test at the 2**-(working_bits/2) scale when the integral itself is
    smaller than that (relative accuracy of a zero-ish value is
    meaningless).  Interior ``points`` split the interval, which is how
    callers with boundary-layered or peaked integrands keep the
    node distribution honest.  Infinite endpoints are allowed.

    Raises :class:`ConvergenceError` carrying the achieved error estimate
    when the level budget runs out.
    """
    lo = mpf(lo)
    hi = mpf(hi)
    if isnan(lo) or isnan(hi) or not lo < hi:
        raise DomainError("integration interval needs lo < hi")
    interval = [lo]
    if points:
        for p in points:
            p = mpf(p)
            if not (interval[-1] < p < hi):
                raise DomainError("split points must increase strictly inside (lo, hi)")
            interval.append(p)
    interval.append(hi)

    internal_bits = max(64, _tol_bits(cfg.quad_rel_tol) + 48)
    last_err = None
    for maxdegree in (8, 12):
        with mp.workprec(internal_bits):
            value, err = mp.quad(f, interval, error=True, maxdegree=maxdegree)
        # round down to the caller's precision only here; converting at
        # ambient precision would quietly truncate to whatever the caller
        # happened to have set globally
        with mp.workprec(cfg.working_bits):
            floor = mpf(2) ** (-(cfg.working_bits // 2))
            value = mpf(value)
            err = mpf(err)
            ensure_finite(value, "integral")
            if err <= cfg.quad_rel_tol * max(abs(value), floor):
                return value
        last_err = err
    raise ConvergenceError(
        "quadrature did not reach tolerance %s (achieved error estimate %s)"
        % (mp.nstr(cfg.quad_rel_tol, 3), mp.nstr(last_err, 3)),
        achieved=last_err,
    )


def solve_monotone(
    g: Callable[[mpf], mpf],
    target,
    lo,
    hi,
    cfg: PrecisionConfig,
    dg: Optional[Callable[[mpf], mpf]] = None,
    x0=None,
) -> mpf:
    """Root of ``g(x) = target`` for monotone ``g`` on [lo, hi].

    Newton steps (when ``dg`` is given) are accepted only inside the
    current sign-change bracket; anything else falls back to bisection,
    so a wild derivative can slow the solve but never lose the root.
    Converges when |dx| <= root_rel_tol * max(1, |x|).
    """
    with mp.workprec(cfg.working_bits):
        target = mpf(target)
        lo = mpf(lo)
        hi = mpf(hi)
        if not lo < hi:
            raise DomainError("solve_monotone needs lo < hi")
        glo = ensure_finite(mpf(g(lo)), "g(lo)") - target
        ghi = ensure_finite(mpf(g(hi)), "g(hi)") - target
        if glo == 0:
            return lo
        if ghi == 0:
            return hi
        if glo * ghi > 0:
            raise DomainError(
                "target %s is not bracketed by [g(lo), g(hi)] = [%s, %s]"
                % (mp.nstr(target, 8), mp.nstr(glo + target, 8), mp.nstr(ghi + target, 8))
            )
        sign = 1 if ghi > 0 else -1
        if sign < 0:
            glo, ghi = ghi, glo

        rtol = cfg.root_rel_tol
        x = mpf(x0) if x0 is not None else (lo + hi) / 2
        if not lo < x < hi:
            x = (lo + hi) / 2
        max_iter = cfg.working_bits + 96
        for _ in range(max_iter):
            gx = sign * (ensure_finite(mpf(g(x)), "g(x)") - target)
            if gx == 0:
                return x
            if gx < 0:
                lo = x
            else:
                hi = x
            step = None
            if dg is not None:
                d = mpf(dg(x))
                if isfinite(d) and d != 0:
                    candidate = x - gx / (sign * d)
                    if lo < candidate < hi:
                        step = candidate
            if step is None:
                step = (lo + hi) / 2
            dx = abs(step - x)
            x = step
            if dx <= rtol * max(1, abs(x)):
                return x
        raise ConvergenceError(
            "root iteration exhausted %d steps (last bracket width %s)"
            % (max_iter, mp.nstr(hi - lo, 3)),
            achieved=hi - lo,
        )
