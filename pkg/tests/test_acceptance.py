"""Acceptance gate: one test per contractual criterion.

Each test runs the corresponding check at its full grid, precision,
and tolerance, enforces the stated wall-clock budget where one exists,
and prints a single verdict line so a log scan shows all nine
outcomes at a glance.
"""

import json
import time

from mpmath import mp, mpf

from ivlab import cli
from ivlab.suite import (
    check_asymptotic_orders,
    check_guesser_controls,
    check_guesser_negative,
    check_integral_identity,
    check_inversion_round_trip,
    check_series_pipeline,
    check_two_path_identity,
    check_two_pricer_grid,
)


def _run(number: int, check, budget_seconds=None):
    started = time.monotonic()
    result = check("full")
    elapsed = time.monotonic() - started
    in_budget = budget_seconds is None or elapsed <= budget_seconds
    verdict = "PASS" if (result["pass"] and in_budget) else "FAIL"
    with mp.workprec(64):
        line = "criterion %d %s: %s  value=%s threshold=%s  %.1fs" % (
            number,
            result["name"],
            verdict,
            mp.nstr(mpf(result["value"]), 8),
            mp.nstr(mpf(result["threshold"]), 8),
            elapsed,
        )
    print(line)
    assert result["pass"], line
    assert in_budget, line


def test_criterion_1_two_pricer_equivalence():
    _run(1, check_two_pricer_grid, budget_seconds=120)


def test_criterion_2_inversion_round_trip():
    _run(2, check_inversion_round_trip, budget_seconds=60)


def test_criterion_3_two_path_identity():
    _run(3, check_two_path_identity, budget_seconds=120)


def test_criterion_4_integral_identity():
    _run(4, check_integral_identity)


def test_criterion_5_asymptotic_orders():
    _run(5, check_asymptotic_orders, budget_seconds=180)


def test_criterion_6_series_pipeline_equivalence():
    _run(6, check_series_pipeline, budget_seconds=300)


def test_criterion_7_guesser_positive_controls():
    _run(7, check_guesser_controls)


def test_criterion_8_guesser_negative_evidence():
    _run(8, check_guesser_negative, budget_seconds=600)


def _strip_durations(obj):
    if isinstance(obj, dict):
        return {
            k: _strip_durations(v) for k, v in obj.items() if "duration" not in k
        }
    if isinstance(obj, list):
        return [_strip_durations(v) for v in obj]
    return obj


def test_criterion_9_suite_determinism(tmp_path):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert cli.main(["suite", "--level", "full", "--out", str(first)]) == 0
    assert cli.main(["suite", "--level", "full", "--out", str(second)]) == 0
    a = json.dumps(_strip_durations(json.loads(first.read_text())), sort_keys=True)
    b = json.dumps(_strip_durations(json.loads(second.read_text())), sort_keys=True)
    same = a == b
    print("criterion 9 suite_determinism: %s" % ("PASS" if same else "FAIL"))
    assert same
