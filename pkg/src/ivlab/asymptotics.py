"""Measured convergence orders for the small-argument behavior of F.

Each check turns one O(.) statement about F, its logarithm, or its
inverse into a finite computation: evaluate the remainder on a grid,
fit an order or compare against a bound, and report a verdict that is
reproducible bit for bit.  The checks are:

    N_PRIME_REMAINDER  relative error of N'(1/v + v/2) against its
                       essential-singularity factor; order 2 in v
    F_LEADING_ORDER    relative error of F against x^3/sqrt(2 e pi)
                       times exp(-1/(2x^2)); order 2 in x
    F_LOG              |-log F(x) - 1/(2x^2)| grows only like log(1/x)
    FINV_BOUND         F_inv(y) * sqrt(2 log(1/y)) > 1 strictly
    LOGF_REMAINDER     |log(1/y) - 1/(2 F_inv(y)^2)| grows only like
                       log log(1/y)
    FINV_SHARP         the FINV_BOUND ratio decreases monotonically
                       toward 1 as y drops, so the bound is sharp

A note on direction: the lower bound in FINV_BOUND is the one forced by
F(x) <= x^3/sqrt(2 e pi) * exp(-1/(2x^2)) near zero (an upper bound on
F gives a lower bound on its inverse), and the measured ratios sit
above 1 and fall toward it.  FINV_SHARP therefore demands a decreasing
approach to 1 from above.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from mpmath import mp, mpf

from .black_scholes import _as_real, _positive
from .implied import unit_time_value, unit_time_value_inv
from .precision import (
    ConvergenceError,
    DomainError,
    PrecisionConfig,
    integrate,
    norm_cdf,
    norm_pdf,
)

__all__ = [
    "CHECK_KINDS",
    "AsymptoticReport",
    "F_leading",
    "check_int_identity",
    "run_check",
]

N_PRIME_REMAINDER = "N_PRIME_REMAINDER"
F_LEADING_ORDER = "F_LEADING_ORDER"
F_LOG = "F_LOG"
FINV_BOUND = "FINV_BOUND"
LOGF_REMAINDER = "LOGF_REMAINDER"
FINV_SHARP = "FINV_SHARP"
INT_IDENTITY = "INT_IDENTITY"

CHECK_KINDS = (
    N_PRIME_REMAINDER,
    F_LEADING_ORDER,
    F_LOG,
    FINV_BOUND,
    LOGF_REMAINDER,
    FINV_SHARP,
)

_SMALL_X_KINDS = (N_PRIME_REMAINDER, F_LEADING_ORDER, F_LOG)
_INVERSE_KINDS = (FINV_BOUND, LOGF_REMAINDER, FINV_SHARP)

# O(log ...) remainder checks report boundedness against this constant;
# the measured ratios approach 3 (F_LOG) and 3/2 (LOGF_REMAINDER)
_LOG_RATIO_BOUND = 8

# slope acceptance half-width for the order-2 remainders
_SLOPE_BAND = mpf("0.2")

# inverse evaluations at and below this escalate to >= 1024 bits
_ESCALATION_POINT = mpf("1e-12")
_ESCALATION_BITS = 1024


@dataclass(frozen=True)
class AsymptoticReport:
    """Outcome of one check: data, fit, verdict, and what was dropped.

    ``grid`` holds the abscissae that were actually measured, aligned
    with ``observed``; points that failed to evaluate are listed in
    ``dropped`` instead.  ``fitted_order`` is a log-log slope for the
    order-2 kinds and None elsewhere.  ``passed`` follows from the
    per-kind rule alone, so identical inputs reproduce the verdict.
    """

    kind: str
    grid: Tuple[mpf, ...]
    observed: Tuple[mpf, ...]
    fitted_order: Optional[mpf]
    passed: bool
    tolerance_used: mpf
    dropped: Tuple[mpf, ...] = ()


def F_leading(x) -> mpf:
    """Leading term x^3 / sqrt(2 e pi) * exp(-1/(2 x^2)) of F near zero.

    A leaf evaluator: runs at the ambient precision like norm_pdf, so
    it can sit inside grids and quadratures without a config argument.
    """
    x = _positive(x, "x")
    return x**3 / mp.sqrt(2 * mp.e * mp.pi) * mp.exp(-1 / (2 * x * x))


def check_int_identity(x, cfg: PrecisionConfig = PrecisionConfig()) -> AsymptoticReport:
    """Both-sides evaluation of the integration-by-parts identity

        (2 pi)^(-1/2) * integral_0^x exp(-1/(2 v^2)) dv
            = x * N'(1/x) - N(-1/x),

    valid on 0 < x <= 1.  This is an identity, not an asymptotic, so
    the tolerance is tight: 8 * quad_rel_tol relative.  The right side
    is written with N(-1/x) rather than 1 - N(1/x); the subtraction of
    ones would otherwise cost most of the working digits at small x.
    """
    with mp.workprec(cfg.working_bits):
        x = _positive(x, "x")
        if x > 1:
            raise DomainError("check_int_identity needs x in (0, 1]")
        guard = 2 * cfg.working_bits + 512
        b = 1 / x

        def g(t):
            u = t + b
            arg = -(u * u - b * b) / 2
            if arg < -guard:
                return mpf(0)
            return mp.exp(arg) / (u * u)

        core = integrate(g, 0, mp.inf, cfg)
        lhs = mp.exp(-b * b / 2) * core / mp.sqrt(2 * mp.pi)
        rhs = x * norm_pdf(b) - norm_cdf(-b)
        rel = abs(lhs - rhs) / abs(rhs)
        tol = 8 * cfg.quad_rel_tol
        return AsymptoticReport(
            kind=INT_IDENTITY,
            grid=(x,),
            observed=(rel,),
            fitted_order=None,
            passed=bool(rel <= tol),
            tolerance_used=mpf(tol),
        )


def _loglog_slope(xs: Sequence[mpf], ys: Sequence[mpf]) -> mpf:
    us = [mp.log(x) for x in xs]
    ws = [mp.log(y) for y in ys]
    n = len(us)
    umean = mp.fsum(us) / n
    wmean = mp.fsum(ws) / n
    num = mp.fsum((u - umean) * (w - wmean) for u, w in zip(us, ws))
    den = mp.fsum((u - umean) ** 2 for u in us)
    return num / den


def _validate_grid(kind: str, grid: Sequence) -> list:
    pts = [_as_real(p, "grid point") for p in grid]
    if len(pts) < 2:
        raise DomainError("run_check needs at least two grid points")
    increasing = all(a < b for a, b in zip(pts, pts[1:]))
    decreasing = all(a > b for a, b in zip(pts, pts[1:]))
    if not (increasing or decreasing):
        raise DomainError("grid must be strictly monotone")
    if kind in _SMALL_X_KINDS:
        if not all(0 < p < mpf("0.5") for p in pts):
            raise DomainError("%s needs grid inside (0, 0.5)" % kind)
    else:
        bound = mp.exp(-1)
        if not all(0 < p < bound for p in pts):
            raise DomainError("%s needs grid inside (0, 1/e)" % kind)
    return pts


def _observe(kind: str, p: mpf, cfg: PrecisionConfig) -> mpf:
    if kind == N_PRIME_REMAINDER:
        ratio = norm_pdf(1 / p + p / 2) * mp.sqrt(2 * mp.e * mp.pi) * mp.exp(
            1 / (2 * p * p)
        )
        return abs(ratio - 1)
    if kind == F_LEADING_ORDER:
        return abs(unit_time_value(p, cfg) / F_leading(p) - 1)
    if kind == F_LOG:
        val = unit_time_value(p, cfg)
        return abs(-mp.log(val) - 1 / (2 * p * p)) / mp.log(1 / p)
    # inverse kinds; escalate the deep tail per the report contract
    bits = cfg.working_bits
    if p <= _ESCALATION_POINT:
        bits = max(bits, _ESCALATION_BITS)
    x = unit_time_value_inv(p, cfg.with_bits(bits))
    L = mp.log(1 / p)
    if kind == LOGF_REMAINDER:
        return abs(L - 1 / (2 * x * x)) / mp.log(L)
    return x * mp.sqrt(2 * L)


def run_check(
    kind: str, grid: Sequence, cfg: PrecisionConfig = PrecisionConfig()
) -> AsymptoticReport:
    """Evaluate one asymptotic check over a strictly monotone grid.

    Points whose evaluation fails to converge are dropped and flagged
    rather than failing the whole check; the verdict is computed from
    the surviving points.  Verdicts per kind are described in the
    module docstring; a report never mixes data from two kinds.
    """
    if kind not in CHECK_KINDS:
        raise DomainError(
            "unknown check kind %r; expected one of %s" % (kind, ", ".join(CHECK_KINDS))
        )
    pts = _validate_grid(kind, grid)
    with mp.workprec(cfg.working_bits):
        kept: list = []
        observed: list = []
        dropped: list = []
        for p in pts:
            try:
                obs = _observe(kind, p, cfg)
            except ConvergenceError:
                dropped.append(p)
                continue
            if obs is None or not mp.isfinite(obs):
                dropped.append(p)
                continue
            kept.append(p)
            observed.append(obs)
        if len(kept) < 2:
            raise ConvergenceError(
                "%s retained %d usable grid points; need at least 2"
                % (kind, len(kept))
            )

        fitted: Optional[mpf] = None
        if kind in (N_PRIME_REMAINDER, F_LEADING_ORDER):
            fitted = _loglog_slope(kept, observed)
            tol = _SLOPE_BAND
            passed = abs(fitted - 2) <= tol
        elif kind in (F_LOG, LOGF_REMAINDER):
            tol = mpf(_LOG_RATIO_BOUND)
            passed = max(observed) <= tol
        elif kind == FINV_BOUND:
            tol = mpf(1)
            passed = all(r > 1 for r in observed)
        else:  # FINV_SHARP
            tol = mpf("0.9")
            toward_zero = list(zip(kept, observed))
            toward_zero.sort(key=lambda t: t[0], reverse=True)
            ratios = [r for _, r in toward_zero]
            monotone = all(a >= b for a, b in zip(ratios, ratios[1:]))
            passed = monotone and ratios[-1] >= tol
        return AsymptoticReport(
            kind=kind,
            grid=tuple(kept),
            observed=tuple(observed),
            fitted_order=fitted,
            passed=bool(passed),
            tolerance_used=tol,
            dropped=tuple(dropped),
        )
