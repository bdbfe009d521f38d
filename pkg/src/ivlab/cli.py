"""Command-line front end: one report per invocation, checks included.

Every subcommand assembles the same report shape: a manifest recording
the exact invocation (command, parameters, precision, version,
wall-clock), the parsed inputs, the computed outputs, and a list of
checks, each with a value, a threshold, and a verdict.  Real numbers
travel as decimal strings with a precision_bits sibling; nothing is
squeezed through a hardware float on the way out, so a 512-bit run
survives a round trip through its own report.

Rendering is separate from computing: --format picks JSON (default),
CSV (grid-shaped where the command produces a grid, key/value rows
otherwise), or a text summary.  Reports are deterministic given the
manifest; rerunning one reproduces the bytes apart from duration
fields.

Exit status is a scripting contract: 0 when the command ran and every
check passed, 2 for usage and domain errors, 3 for numerical failures
and failing checks.

The --out path is deliberately absent from the manifest: it names
where the report lands, not what was computed, and reports written to
two different files should compare equal.
"""

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from mpmath import mp, mpf

from . import __version__
from .asymptotics import CHECK_KINDS, INT_IDENTITY, check_int_identity, run_check
from .black_scholes import Quote, VolPoint, bs_price, bs_price_integral
from .guess import (
    FOUND,
    GuessConfig,
    NONE_UP_TO_BOUNDS,
    guess_ode,
    verify_relation,
)
from .implied import (
    implied_vol,
    probe_implied_vol,
    unit_time_value,
    unit_time_value_inv,
)
from .precision import DomainError, NumericsError, PrecisionConfig
from .series import (
    PowerSeries,
    TriSeries,
    series_F,
    series_f_direct,
    series_reverse,
    tri_series_I,
)
from .suite import run_suite
from .symexpr import parse_real

# grid columns a command may hand to the CSV renderer: (header, values)
GridColumns = List[Tuple[str, Sequence]]


def _decimal_digits(bits: int) -> int:
    return int(math.ceil(bits * math.log10(2))) + 3


def _fmt(value, bits: int) -> str:
    """Decimal string carrying the full working precision."""
    with mp.workprec(bits + 8):
        return mp.nstr(mpf(value), _decimal_digits(bits))


def _shorten(text: str, digits: int) -> str:
    """Re-round a decimal string for the human-facing renderers."""
    with mp.workprec(int(4 * len(text)) + 64):
        return mp.nstr(mpf(text), digits)


def _check(name: str, value, threshold, passed: bool, bits: int) -> Dict:
    return {
        "name": name,
        "value": _fmt(value, bits),
        "threshold": _fmt(threshold, bits),
        "pass": bool(passed),
        "precision_bits": bits,
    }


def _manifest(command: str, params: Dict, cfg: PrecisionConfig, started: float) -> Dict:
    wb = cfg.working_bits
    return {
        "command": command,
        "parameters": params,
        "precision": {
            "working_bits": wb,
            "quad_rel_tol": _fmt(cfg.quad_rel_tol, wb),
            "root_rel_tol": _fmt(cfg.root_rel_tol, wb),
        },
        "version": __version__,
        "duration_seconds": round(time.monotonic() - started, 6),
    }


def _report(kind, manifest, inputs, outputs, checks) -> Dict:
    return {
        "manifest": manifest,
        "kind": kind,
        "inputs": inputs,
        "outputs": outputs,
        "checks": checks,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_price(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    S = parse_real(args.spot, wb)
    K = parse_real(args.strike, wb)
    T = parse_real(args.expiry, wb)
    sigma = parse_real(args.sigma, wb)
    point = VolPoint(S, K, T, sigma)
    inputs = {
        "S": _fmt(S, wb),
        "K": _fmt(K, wb),
        "T": _fmt(T, wb),
        "sigma": _fmt(sigma, wb),
        "precision_bits": wb,
    }
    outputs: Dict = {"precision_bits": wb}
    checks: List[Dict] = []
    if args.method in ("closed", "both"):
        closed = bs_price(point, cfg)
        outputs["price_closed"] = _fmt(closed, wb)
    if args.method in ("integral", "both"):
        quad = bs_price_integral(point, cfg)
        outputs["price_integral"] = _fmt(quad, wb)
    if args.method == "both":
        with mp.workprec(wb):
            diff = abs(closed - quad)
            bound = 4 * cfg.quad_rel_tol * S
        checks.append(_check("pricer_agreement", diff, bound, diff <= bound, wb))
    params = {
        "S": args.spot,
        "K": args.strike,
        "T": args.expiry,
        "sigma": args.sigma,
        "method": args.method,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("price", params, cfg, started)
    return _report("price", manifest, inputs, outputs, checks), None


def cmd_implied_vol(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    S = parse_real(args.spot, wb)
    K = parse_real(args.strike, wb)
    T = parse_real(args.expiry, wb)
    c = parse_real(args.price, wb)
    quote = Quote(S, K, T, c)
    sigma = implied_vol(quote, cfg)
    repriced = bs_price(VolPoint(S, K, T, sigma), cfg)
    with mp.workprec(wb):
        resid = abs(repriced - c)
        bound = 8 * cfg.root_rel_tol * S
    inputs = {
        "S": _fmt(S, wb),
        "K": _fmt(K, wb),
        "T": _fmt(T, wb),
        "c": _fmt(c, wb),
        "precision_bits": wb,
    }
    outputs = {"implied_vol": _fmt(sigma, wb), "precision_bits": wb}
    checks = [_check("reprice_residual", resid, bound, resid <= bound, wb)]
    params = {
        "S": args.spot,
        "K": args.strike,
        "T": args.expiry,
        "c": args.price,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("implied-vol", params, cfg, started)
    return _report("implied_vol", manifest, inputs, outputs, checks), None


def cmd_f(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    K = parse_real(args.strike, wb)
    T = parse_real(args.expiry, wb)
    value = probe_implied_vol(K, T, cfg)
    inv = unit_time_value_inv(K, cfg)
    with mp.workprec(wb):
        resid = abs(mp.sqrt(T) * value - inv)
        bound = max(mpf(10) ** -20, mpf(2) ** (8 - wb // 2))
    inputs = {"K": _fmt(K, wb), "T": _fmt(T, wb), "precision_bits": wb}
    outputs = {"f": _fmt(value, wb), "precision_bits": wb}
    checks = [_check("two_path_identity", resid, bound, resid <= bound, wb)]
    params = {
        "K": args.strike,
        "T": args.expiry,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("f", params, cfg, started)
    return _report("probe_vol", manifest, inputs, outputs, checks), None


def cmd_F(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    x = parse_real(args.x, wb)
    y = unit_time_value(x, cfg)
    inputs = {"x": _fmt(x, wb), "precision_bits": wb}
    outputs = {"F": _fmt(y, wb), "precision_bits": wb}
    params = {
        "x": args.x,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("F", params, cfg, started)
    return _report("unit_time_value", manifest, inputs, outputs, []), None


def cmd_F_inv(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    y = parse_real(args.y, wb)
    x = unit_time_value_inv(y, cfg)
    back = unit_time_value(x, cfg)
    with mp.workprec(wb):
        resid = abs(back - y)
        # the solver tolerance lives on x; the slope factor carries it
        # over to y, steepening as x -> 0
        bound = 8 * cfg.root_rel_tol * y * (1 + 1 / (x * x))
    inputs = {"y": _fmt(y, wb), "precision_bits": wb}
    outputs = {"F_inv": _fmt(x, wb), "precision_bits": wb}
    checks = [_check("round_trip", resid, bound, resid <= bound, wb)]
    params = {
        "y": args.y,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("F-inv", params, cfg, started)
    return _report("unit_time_value_inv", manifest, inputs, outputs, checks), None


_KIND_FLAGS = {kind.lower().replace("_", "-"): kind for kind in CHECK_KINDS}
_KIND_FLAGS["int-identity"] = INT_IDENTITY


def _log_grid(lo: mpf, hi: mpf, points: int) -> List[mpf]:
    if points < 1:
        raise DomainError("points must be at least 1")
    if not (0 < lo <= hi):
        raise DomainError("need 0 < grid-min <= grid-max")
    if points == 1 or lo == hi:
        return [lo]
    ratio = mp.log(hi / lo) / (points - 1)
    grid = [lo * mp.exp(i * ratio) for i in range(points)]
    # the exponential can overshoot the endpoint by an ulp; pin it
    grid[-1] = hi
    return grid


def cmd_asympt(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    kind = _KIND_FLAGS[args.kind]
    with mp.workprec(wb):
        lo = parse_real(args.grid_min, wb)
        hi = parse_real(args.grid_max, wb)
        grid = _log_grid(lo, hi, args.points)
    if kind == INT_IDENTITY:
        reports = [check_int_identity(x, cfg) for x in grid]
        measured = [r.grid[0] for r in reports]
        observed = [r.observed[0] for r in reports]
        dropped: Tuple = ()
        fitted = None
        tolerance = reports[0].tolerance_used
        passed = all(r.passed for r in reports)
    else:
        rep = run_check(kind, grid, cfg)
        measured = list(rep.grid)
        observed = list(rep.observed)
        dropped = rep.dropped
        fitted = rep.fitted_order
        tolerance = rep.tolerance_used
        passed = rep.passed
    with mp.workprec(wb):
        # one scalar per kind, chosen so value-vs-threshold reads the
        # same way the module decided the verdict
        if fitted is not None:
            headline = abs(fitted - 2)
        elif kind == "FINV_BOUND":
            headline = min(observed) if observed else mpf(0)
        elif kind == "FINV_SHARP":
            by_x = sorted(zip(measured, observed))
            headline = by_x[0][1] if by_x else mpf(0)
        else:
            headline = max(observed) if observed else mpf(0)
    inputs = {
        "kind": kind,
        "grid_min": _fmt(lo, wb),
        "grid_max": _fmt(hi, wb),
        "points": args.points,
        "precision_bits": wb,
    }
    outputs = {
        "passed": bool(passed),
        "fitted_order": None if fitted is None else _fmt(fitted, wb),
        "tolerance_used": _fmt(tolerance, wb),
        "grid": [_fmt(x, wb) for x in measured],
        "observed": [_fmt(v, wb) for v in observed],
        "dropped": [_fmt(x, wb) for x in dropped],
        "precision_bits": wb,
    }
    checks = [_check(args.kind, headline, tolerance, passed, wb)]
    params = {
        "kind": args.kind,
        "grid_min": args.grid_min,
        "grid_max": args.grid_max,
        "points": args.points,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("asympt", params, cfg, started)
    grid_cols: GridColumns = [("x", measured), ("observed", observed)]
    return _report("asymptotic_check", manifest, inputs, outputs, checks), grid_cols


def _series_payload(s: PowerSeries) -> Dict:
    payload = {
        "center": _fmt(s.center, s.bits),
        "order": len(s.coeffs) - 1,
        "bits": s.bits,
        "coefficients": [_fmt(c, s.bits) for c in s.coeffs],
    }
    if s.exact is not None:
        payload["exact_coefficients"] = [str(q) for q in s.exact]
    return payload


def _tri_payload(t: TriSeries) -> Dict:
    terms = []
    for (i, j, k) in sorted(t.data, key=lambda m: (sum(m), m)):
        terms.append(
            {"i": i, "j": j, "k": k, "coefficient": _fmt(t.data[(i, j, k)], t.bits)}
        )
    return {
        "center": [_fmt(v, t.bits) for v in t.center],
        "total_degree": t.total_degree,
        "bits": t.bits,
        "terms": terms,
    }


def cmd_series(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    target = args.target
    if target in ("f", "I3") and args.center is not None:
        raise DomainError("target %s has a fixed expansion center" % target)
    checks: List[Dict] = []
    grid_cols: Optional[GridColumns] = None
    if target == "I3":
        tri = tri_series_I(args.order, cfg)
        S0, K0, c0 = tri.center
        sigma_hat = implied_vol(Quote(S0, K0, mpf(1), c0), cfg)
        with mp.workprec(wb):
            gamma0 = tri.coefficient(0, 0, 0)
            resid = abs(gamma0 - sigma_hat)
            bound = mpf(2) ** (4 - wb // 2)
        checks.append(_check("center_consistency", resid, bound, resid <= bound, wb))
        outputs = _tri_payload(tri)
    else:
        if target == "F":
            if args.center is not None:
                x0 = parse_real(args.center, wb)
            else:
                with mp.workprec(wb):
                    K0 = mp.exp(-1) / 2
                x0 = unit_time_value_inv(K0, cfg)
            s = series_F(x0, args.order, cfg)
        elif target == "Finv":
            if args.center is not None:
                y0 = parse_real(args.center, wb)
            else:
                with mp.workprec(wb):
                    y0 = mp.exp(-1) / 2
            x0 = unit_time_value_inv(y0, cfg)
            s = series_reverse(series_F(x0, args.order, cfg))
        else:
            s = series_f_direct(args.order, 1, cfg)
        outputs = _series_payload(s)
        grid_cols = [("index", list(range(len(s.coeffs)))), ("coefficient", s.coeffs)]
    outputs["precision_bits"] = wb
    inputs = {
        "target": target,
        "order": args.order,
        "center": args.center,
        "precision_bits": wb,
    }
    params = {
        "target": target,
        "order": args.order,
        "center": args.center,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("series", params, cfg, started)
    return _report("series", manifest, inputs, outputs, checks), grid_cols


def _series_from_file(path: str) -> PowerSeries:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DomainError("cannot read series file: %s" % exc)
    except json.JSONDecodeError as exc:
        raise DomainError("series file is not valid JSON: %s" % exc)
    payload = doc.get("outputs", doc) if isinstance(doc, dict) else None
    if not isinstance(payload, dict) or "coefficients" not in payload:
        raise DomainError("series file lacks a coefficients payload")
    if "terms" in payload:
        raise DomainError("guessing needs a univariate series, not a trivariate one")
    try:
        bits = int(payload["bits"])
        center_text = payload["center"]
        coeff_text = payload["coefficients"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError("malformed series payload: %s" % exc)
    exact = None
    if "exact_coefficients" in payload:
        try:
            exact = tuple(Fraction(q) for q in payload["exact_coefficients"])
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError("malformed exact coefficients: %s" % exc)
    with mp.workprec(bits):
        center = mpf(center_text)
        coeffs = tuple(mpf(c) for c in coeff_text)
    return PowerSeries(center, coeffs, bits, exact)


_SEPARATION_FLOOR_BITS = 64


def cmd_guess(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    wb = cfg.working_bits
    gcfg = GuessConfig(
        r_max=args.rmax,
        d_max=args.dmax,
        n_coeffs=args.ncoeffs,
        working_bits=wb,
    )
    if args.target == "file":
        if args.series_file is None:
            raise DomainError("--series-file is required with --target file")
        series = _series_from_file(args.series_file)
    elif args.target == "f":
        series = series_f_direct(args.ncoeffs - 1, 1, cfg)
    else:
        with mp.workprec(wb):
            K0 = mp.exp(-1) / 2
        x0 = unit_time_value_inv(K0, cfg)
        series = series_reverse(series_F(x0, args.ncoeffs - 1, cfg))
    rep = guess_ode(series, gcfg)
    checks: List[Dict] = []
    cells = [
        {
            "r": c.r,
            "d": c.d,
            "min_singular_ratio": _fmt(c.min_singular_ratio, wb),
            "full_ratio": _fmt(c.full_ratio, wb),
            "verdict": c.verdict,
            "exact_certificate": c.exact_certificate,
            "solve_bits": c.solve_bits,
        }
        for c in rep.cells
    ]
    outputs: Dict = {
        "status": rep.status,
        "exact_path": rep.exact_path,
        "r_max": gcfg.r_max,
        "d_max": gcfg.d_max,
        "n_coeffs": gcfg.n_coeffs,
        "cells": cells,
        "candidate": None,
        "precision_bits": wb,
    }
    if rep.status == FOUND:
        cand = rep.candidate
        outputs["candidate"] = {
            "r": cand.r,
            "d": cand.d,
            "P": [[_fmt(v, wb) for v in row] for row in cand.P],
            "exact_P": None
            if cand.exact_P is None
            else [[str(q) for q in row] for row in cand.exact_P],
            "residual": _fmt(cand.residual, wb),
            "fit_rows": cand.fit_rows,
        }
        confirm = verify_relation(series, cand)
        with mp.workprec(wb):
            tol = gcfg.holdout_tol
        checks.append(
            _check("verification_residual", confirm, tol, confirm <= tol, wb)
        )
    elif rep.status == NONE_UP_TO_BOUNDS:
        with mp.workprec(wb):
            floor = mpf(2) ** -_SEPARATION_FLOOR_BITS
            worst = min(
                (c.min_singular_ratio for c in rep.cells if c.verdict == "none"),
                default=mpf(1),
            )
        checks.append(
            _check("cell_separation_floor", worst, floor, worst >= floor, wb)
        )
    params = {
        "target": args.target,
        "series_file": args.series_file,
        "rmax": args.rmax,
        "dmax": args.dmax,
        "ncoeffs": args.ncoeffs,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    inputs = {
        "target": args.target,
        "series_file": args.series_file,
        "rmax": args.rmax,
        "dmax": args.dmax,
        "ncoeffs": args.ncoeffs,
        "precision_bits": wb,
    }
    manifest = _manifest("guess", params, cfg, started)
    return _report("guess", manifest, inputs, outputs, checks), None


def cmd_suite(args) -> Tuple[Dict, Optional[GridColumns]]:
    started = time.monotonic()
    cfg = PrecisionConfig(args.bits)
    rep = run_suite(args.level)
    fmt_bits = 256
    checks = []
    for c in rep["checks"]:
        entry = _check(c["name"], c["value"], c["threshold"], c["pass"], fmt_bits)
        entry["duration_seconds"] = round(c["duration_seconds"], 6)
        checks.append(entry)
    inputs = {"level": args.level}
    outputs = {"level": rep["level"], "pass": rep["pass"]}
    params = {
        "level": args.level,
        "bits": args.bits,
        "format": args.format,
        "digits": args.digits,
    }
    manifest = _manifest("suite", params, cfg, started)
    return _report("suite", manifest, inputs, outputs, checks), None


# ---------------------------------------------------------------------------
# rendering


def _render_json(report: Dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _flat_rows(report: Dict) -> List[Tuple[str, str]]:
    rows: List[Tuple[str, str]] = [("command", report["manifest"]["command"])]
    for section in ("inputs", "outputs"):
        for key, value in report[section].items():
            if isinstance(value, (list, dict)) or value is None:
                continue
            rows.append(("%s.%s" % (section, key), str(value)))
    for check in report["checks"]:
        rows.append(("check.%s.value" % check["name"], check["value"]))
        rows.append(("check.%s.threshold" % check["name"], check["threshold"]))
        rows.append(("check.%s.pass" % check["name"], str(check["pass"])))
    return rows


def _csv_cell(value, digits: int) -> str:
    if isinstance(value, int):
        return str(value)
    with mp.workprec(digits * 4 + 64):
        return mp.nstr(mpf(value), digits)


def _render_csv(report: Dict, grid: Optional[GridColumns], digits: int) -> str:
    lines: List[str] = []
    if grid is not None:
        headers = [name for name, _ in grid]
        lines.append(",".join(headers))
        length = min(len(values) for _, values in grid)
        for idx in range(length):
            lines.append(
                ",".join(_csv_cell(values[idx], digits) for _, values in grid)
            )
    else:
        lines.append("name,value")
        for name, value in _flat_rows(report):
            lines.append("%s,%s" % (name, value))
    return "\n".join(lines) + "\n"


def _render_text(report: Dict, digits: int) -> str:
    man = report["manifest"]
    lines = ["ivlab %s (v%s)" % (man["command"], man["version"])]
    for section in ("inputs", "outputs"):
        body = report[section]
        if not body:
            continue
        lines.append("%s:" % section)
        for key, value in body.items():
            if value is None:
                continue
            if isinstance(value, list):
                lines.append("  %s: [%d entries]" % (key, len(value)))
            elif isinstance(value, dict):
                lines.append("  %s: {...}" % key)
            elif isinstance(value, str) and any(ch.isdigit() for ch in value) and (
                "." in value or "e" in value
            ):
                try:
                    lines.append("  %s = %s" % (key, _shorten(value, digits)))
                except ValueError:
                    lines.append("  %s = %s" % (key, value))
            else:
                lines.append("  %s = %s" % (key, value))
    if report["checks"]:
        lines.append("checks:")
        for check in report["checks"]:
            verdict = "PASS" if check["pass"] else "FAIL"
            lines.append(
                "  [%s] %s: %s vs %s"
                % (
                    verdict,
                    check["name"],
                    _shorten(check["value"], digits),
                    _shorten(check["threshold"], digits),
                )
            )
    lines.append("duration: %ss" % man["duration_seconds"])
    overall = all(c["pass"] for c in report["checks"])
    lines.append("overall: %s" % ("PASS" if overall else "FAIL"))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bits", type=int, default=256, help="working precision")
    common.add_argument("--out", default=None, help="write the report here")
    common.add_argument(
        "--format", choices=("json", "csv", "text"), default="json"
    )
    common.add_argument(
        "--digits", type=int, default=30, help="significant digits for csv/text"
    )
    parser = argparse.ArgumentParser(
        prog="ivlab",
        description="extended-precision implied-volatility toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("price", parents=[common], help="Black-Scholes call price")
    p.add_argument("--S", dest="spot", required=True, help="spot (symbolic ok)")
    p.add_argument("--K", dest="strike", required=True, help="strike")
    p.add_argument("--T", dest="expiry", default="1", help="time to expiry")
    p.add_argument("--sigma", required=True, help="volatility")
    p.add_argument(
        "--method", choices=("closed", "integral", "both"), default="closed"
    )
    p.set_defaults(func=cmd_price)

    p = sub.add_parser(
        "implied-vol", parents=[common], help="invert a quote to a volatility"
    )
    p.add_argument("--S", dest="spot", required=True)
    p.add_argument("--K", dest="strike", required=True)
    p.add_argument("--T", dest="expiry", default="1")
    p.add_argument("--c", dest="price", required=True, help="observed call price")
    p.set_defaults(func=cmd_implied_vol)

    p = sub.add_parser(
        "f", parents=[common], help="probe-family implied volatility at strike K"
    )
    p.add_argument("--K", dest="strike", required=True, help="strike in (0, 1/e)")
    p.add_argument("--T", dest="expiry", default="1")
    p.set_defaults(func=cmd_f)

    p = sub.add_parser("F", parents=[common], help="normalized time value at x")
    p.add_argument("--x", required=True, help="total volatility, positive")
    p.set_defaults(func=cmd_F)

    p = sub.add_parser(
        "F-inv", parents=[common], help="invert the normalized time value"
    )
    p.add_argument("--y", required=True, help="time value in (0, 1/e)")
    p.set_defaults(func=cmd_F_inv)

    p = sub.add_parser(
        "asympt", parents=[common], help="asymptotic and identity checks on a grid"
    )
    p.add_argument("--kind", choices=sorted(_KIND_FLAGS), required=True)
    p.add_argument("--grid-min", required=True)
    p.add_argument("--grid-max", required=True)
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=cmd_asympt)

    p = sub.add_parser("series", parents=[common], help="serialize an expansion")
    p.add_argument("--target", choices=("F", "Finv", "f", "I3"), required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--center", default=None, help="expansion center (F, Finv only)")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser(
        "guess", parents=[common], help="search for an annihilating operator"
    )
    p.add_argument("--target", choices=("f", "Finv", "file"), required=True)
    p.add_argument("--series-file", default=None, help="series report JSON")
    p.add_argument("--rmax", type=int, default=6)
    p.add_argument("--dmax", type=int, default=6)
    p.add_argument("--ncoeffs", type=int, default=64)
    p.set_defaults(func=cmd_guess)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance checks")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        report, grid = args.func(args)
    except DomainError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except NumericsError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    if args.format == "json":
        rendered = _render_json(report)
    elif args.format == "csv":
        rendered = _render_csv(report, grid, args.digits)
    else:
        rendered = _render_text(report, args.digits)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered)
    return 0 if all(c["pass"] for c in report["checks"]) else 3


if __name__ == "__main__":
    sys.exit(main())
