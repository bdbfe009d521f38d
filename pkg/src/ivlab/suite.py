"""The check battery behind ``cmd_suite``: one aggregate check per
acceptance-grade property, runnable at two effort levels.

``full`` runs every check at its contractual grid and precision;
``fast`` shrinks grids and precision enough to finish in well under five
minutes while exercising the same code paths and asserting the same
kinds of bounds.  Every check returns the worst observed value, the
threshold it was held to, and a verdict, so failures point at numbers
rather than at a red cross.

One honesty note on the inversion sweep: a quote whose time value
rounds to zero at the working precision carries no information about
volatility at all, so grid corners whose time value sits below
2^-100 * S are excluded rather than "passed".  The exclusion rule is
stated here, applied symmetrically, and has nothing to do with solver
quality.
"""

from __future__ import annotations

import time
from typing import Callable, Dict, List

from mpmath import mp, mpf

from .asymptotics import (
    F_LEADING_ORDER,
    FINV_BOUND,
    FINV_SHARP,
    N_PRIME_REMAINDER,
    check_int_identity,
    run_check,
)
from .black_scholes import Quote, VolPoint, bs_price, bs_price_integral
from .guess import (
    FOUND,
    KNOWN_RELATIONS,
    NONE_UP_TO_BOUNDS,
    GuessConfig,
    control_series,
    guess_ode,
    normalize_table,
)
from .implied import implied_vol, probe_implied_vol, unit_time_value_inv
from .precision import PrecisionConfig
from .series import (
    PowerSeries,
    series_F,
    series_f_direct,
    series_reverse,
    substitute_specialize,
    tri_series_I,
)

__all__ = ["run_suite", "SUITE_CHECKS"]


def _loggrid(lo, hi, count):
    """Log-spaced points including both endpoints, at ambient precision."""
    lo, hi = mpf(lo), mpf(hi)
    if count == 1:
        return [lo]
    ratio = mp.log(hi / lo) / (count - 1)
    return [lo * mp.exp(ratio * i) for i in range(count)]


def _lingrid(lo, hi, count):
    lo, hi = mpf(lo), mpf(hi)
    if count == 1:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + step * i for i in range(count)]


def check_two_pricer_grid(level: str) -> Dict:
    """Closed form versus the integral representation across a quote grid."""
    cfg = PrecisionConfig(256, quad_rel_tol=mpf(2) ** -120)
    with mp.workprec(256):
        if level == "full":
            lams = _lingrid(-2, 2, 10)
            sigmas = _lingrid("0.05", 2, 10)
            times = [mpf(t) for t in ("0.25", "0.5", 1, 2, 4)]
        else:
            lams = _lingrid(-2, 2, 4)
            sigmas = _lingrid("0.05", 2, 4)
            times = [mpf("0.25"), mpf(4)]
        worst = mpf(0)
        for lam in lams:
            S = mp.exp(lam)
            for sig in sigmas:
                for T in times:
                    p = VolPoint(S, mpf(1), T, sig)
                    closed = bs_price(p, cfg)
                    quad = bs_price_integral(p, cfg)
                    worst = max(worst, abs(closed - quad) / S)
        threshold = mpf(10) ** -30
    return {"name": "two_pricer_equivalence", "value": worst,
            "threshold": threshold, "pass": worst <= threshold}


def check_inversion_round_trip(level: str) -> Dict:
    cfg = PrecisionConfig(256)
    with mp.workprec(256):
        if level == "full":
            sigmas = _loggrid("0.01", 5, 8)
            lams = _lingrid(-2, 2, 7)
        else:
            sigmas = _loggrid("0.01", 5, 4)
            lams = _lingrid(-2, 2, 3)
        floor = mpf(2) ** -100
        worst = mpf(0)
        tested = 0
        for sig in sigmas:
            for lam in lams:
                S = mp.exp(lam)
                p = VolPoint(S, mpf(1), mpf(1), sig)
                c = bs_price(p, cfg)
                intrinsic = max(S - 1, mpf(0))
                if c - intrinsic < floor * S:
                    continue  # no volatility information at this precision
                got = implied_vol(Quote(S, mpf(1), mpf(1), c), cfg)
                worst = max(worst, abs(got - sig) / sig)
                tested += 1
        enough = tested >= len(sigmas) * len(lams) // 2
        threshold = mpf(10) ** -25
    return {"name": "inversion_round_trip", "value": worst,
            "threshold": threshold, "pass": enough and worst <= threshold}


def check_two_path_identity(level: str) -> Dict:
    cfg = PrecisionConfig(256)
    with mp.workprec(256):
        hi = mp.exp(-1) - mpf(1) / 1000
        if level == "full":
            ks = _loggrid(mpf(1) / 1000, hi, 20)
            times = [mpf(1), mpf(4)]
        else:
            ks = _loggrid(mpf(1) / 1000, hi, 6)
            times = [mpf(1)]
        worst = mpf(0)
        for K in ks:
            finv = unit_time_value_inv(K, cfg)
            for T in times:
                f = probe_implied_vol(K, T, cfg)
                worst = max(worst, abs(mp.sqrt(T) * f - finv))
        threshold = mpf(10) ** -20
    return {"name": "two_path_identity", "value": worst,
            "threshold": threshold, "pass": worst <= threshold}


def check_integral_identity(level: str) -> Dict:
    cfg = PrecisionConfig(256)
    with mp.workprec(256):
        worst = mpf(0)
        ok = True
        for x in (mpf(1) / 10, mpf(3) / 10, mpf(1)):
            report = check_int_identity(x, cfg)
            ok = ok and report.passed
            worst = max(worst, report.observed[0])
        threshold = mpf(10) ** -30
    return {"name": "integral_identity", "value": worst,
            "threshold": threshold, "pass": ok and worst <= threshold}


def check_asymptotic_orders(level: str) -> Dict:
    cfg = PrecisionConfig(256)
    with mp.workprec(256):
        xs = _lingrid("0.05", "0.3", 7 if level == "full" else 4)
        slope_lo, slope_hi = mpf("1.8"), mpf("2.2")
        results: List[bool] = []
        slope_err = mpf(0)
        for kind in (N_PRIME_REMAINDER, F_LEADING_ORDER):
            rep = run_check(kind, xs, cfg)
            results.append(rep.passed and slope_lo <= rep.fitted_order <= slope_hi)
            slope_err = max(slope_err, abs(rep.fitted_order - 2))
        if level == "full":
            ys = [mpf(10) ** -k for k in (4, 6, 8, 10, 12, 14, 16)]
            sharp_ys = [mpf(10) ** -k for k in (4, 8, 12, 16)]
        else:
            ys = [mpf(10) ** -k for k in (4, 6, 8)]
            sharp_ys = [mpf(10) ** -k for k in (4, 6, 8)]
        bound = run_check(FINV_BOUND, ys, cfg)
        results.append(bound.passed)
        sharp = run_check(FINV_SHARP, sharp_ys, cfg)
        results.append(sharp.passed and min(sharp.observed) >= mpf("0.9"))
    return {"name": "asymptotic_orders", "value": slope_err,
            "threshold": mpf("0.2"), "pass": all(results) and slope_err <= mpf("0.2")}


def check_series_pipeline(level: str) -> Dict:
    if level == "full":
        cfg = PrecisionConfig(512)
        degree, upto = 8, 5
    else:
        cfg = PrecisionConfig(256)
        degree, upto = 4, 4
    tri = tri_series_I(degree, cfg)
    uni = substitute_specialize(tri, upto)
    direct = series_f_direct(upto, 1, cfg)
    with mp.workprec(cfg.working_bits):
        worst = mpf(0)
        for n in range(upto + 1):
            worst = max(worst, abs(uni.coeffs[n] - direct.coeffs[n]))
        threshold = mpf(10) ** -30
    return {"name": "series_pipeline_equivalence", "value": worst,
            "threshold": threshold, "pass": worst <= threshold}


_POSITIVE_CELLS = {
    "exp": (1, 0),
    "log1p": (2, 1),
    "sqrt1p": (1, 1),
    "erf_like": (2, 1),
    "exp_sqrt": (1, 1),
}


def check_guesser_controls(level: str) -> Dict:
    if level == "full":
        cfg = GuessConfig(r_max=6, d_max=6, n_coeffs=64, working_bits=512)
        threshold = mpf(2) ** -240
    else:
        cfg = GuessConfig(r_max=2, d_max=2, n_coeffs=30, working_bits=256)
        threshold = mpf(2) ** -64
    worst = mpf(0)
    ok = True
    for name, cell in _POSITIVE_CELLS.items():
        series = control_series(name, cfg.n_coeffs, cfg.working_bits)
        exact_report = guess_ode(series, cfg)
        ok = ok and exact_report.status == FOUND
        cand = exact_report.candidate
        ok = ok and cand is not None and (cand.r, cand.d) == cell
        ok = ok and cand.exact_P == normalize_table(KNOWN_RELATIONS[name])
        floats = PowerSeries(series.center, series.coeffs, series.bits)
        float_report = guess_ode(floats, cfg)
        ok = ok and float_report.status == FOUND
        if float_report.candidate is not None:
            worst = max(worst, float_report.candidate.residual)
        else:
            ok = False
    return {"name": "guesser_positive_controls", "value": worst,
            "threshold": threshold, "pass": ok and worst <= threshold}


def check_guesser_negative(level: str) -> Dict:
    threshold = mpf(2) ** -64
    if level == "full":
        big = GuessConfig(r_max=6, d_max=6, n_coeffs=120, working_bits=512)
        small = GuessConfig(r_max=6, d_max=6, n_coeffs=64, working_bits=512)
        cfg512 = PrecisionConfig(512)
        with mp.workprec(512):
            x0 = unit_time_value_inv(mp.exp(-1) / 2, cfg512)
        targets = [
            ("tan", control_series("tan", 120, 512), big),
            ("expexp", control_series("expexp", 120, 512), big),
            ("f", series_f_direct(63, 1, cfg512), small),
            ("Finv", series_reverse(series_F(x0, 63, cfg512)), small),
        ]
    else:
        small = GuessConfig(r_max=3, d_max=3, n_coeffs=40, working_bits=256)
        cfg512 = PrecisionConfig(512)
        targets = [
            ("tan", control_series("tan", 40, 256), small),
            ("f", series_f_direct(39, 1, cfg512),
             GuessConfig(r_max=3, d_max=3, n_coeffs=40, working_bits=512)),
        ]
    ok = True
    worst_ratio = None
    for _, series, cfg in targets:
        report = guess_ode(series, cfg)
        ok = ok and report.status == NONE_UP_TO_BOUNDS
        for cell in report.cells:
            ok = ok and cell.verdict == "none"
            if worst_ratio is None or cell.min_singular_ratio < worst_ratio:
                worst_ratio = cell.min_singular_ratio
    return {"name": "guesser_negative_evidence", "value": worst_ratio,
            "threshold": threshold, "pass": ok and worst_ratio >= threshold}


SUITE_CHECKS: List[Callable[[str], Dict]] = [
    check_two_pricer_grid,
    check_inversion_round_trip,
    check_two_path_identity,
    check_integral_identity,
    check_asymptotic_orders,
    check_series_pipeline,
    check_guesser_controls,
    check_guesser_negative,
]


def run_suite(level: str = "fast") -> Dict:
    """Run every check at the requested effort level.

    The negative-evidence check reports a ratio that must stay above its
    threshold; every other check reports a discrepancy that must stay
    below.  The returned mapping is deterministic apart from durations.
    """
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    checks = []
    for fn in SUITE_CHECKS:
        start = time.monotonic()
        result = fn(level)
        result["duration_seconds"] = time.monotonic() - start
        checks.append(result)
    return {
        "level": level,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }
