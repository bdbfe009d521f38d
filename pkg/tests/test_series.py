"""Series arithmetic, the Taylor pipeline for F and its inverse, and the
trivariate implied-volatility expansion.

Oracle strategy: classical coefficient identities (factorials, the
Fibonacci generating function, the reversion of x + x^2) pin down the
arithmetic; the closed form for F pins down series_F beyond its own
quadrature; central differences of the implied-vol solver at escalated
precision pin down the trivariate first-order coefficients; evaluation
against the nonlinear solvers pins down everything jointly.
"""

import pytest
from mpmath import mp, mpf

from ivlab.black_scholes import Quote, VolPoint, bs_price, vega
from ivlab.implied import probe_implied_vol, implied_vol, unit_time_value, unit_time_value_inv
from ivlab.precision import ConvergenceError, DomainError, PrecisionConfig, norm_cdf, norm_pdf, real
from ivlab.series import (
    PowerSeries,
    TRI_CENTER_BITS,
    TriSeries,
    identity_series,
    series_F,
    series_f_direct,
    series_reverse,
    substitute_specialize,
    tri_series_I,
)

CFG = PrecisionConfig(256)
BITS = 256


def _closed_F(x):
    """Independent closed form for F, for oracle use only."""
    with mp.workprec(700):
        x = mpf(x)
        return mp.exp(-1) * norm_cdf(x / 2 - 1 / x) - norm_cdf(-(1 / x + x / 2))


def _zero_centered(coeffs):
    with mp.workprec(BITS):
        return PowerSeries(mpf(0), tuple(mpf(c) for c in coeffs), BITS)


# ---------------------------------------------------------------------------
# arithmetic


def test_exp_series_matches_factorials():
    s = _zero_centered([0, 1] + [0] * 8).exp()
    with mp.workprec(BITS):
        for n in range(10):
            assert abs(s.coeffs[n] - 1 / mp.factorial(n)) < mpf(2) ** -240


def test_log_series_alternating_harmonic():
    s = _zero_centered([1, 1] + [0] * 6).log()
    with mp.workprec(BITS):
        assert s.coeffs[0] == 0
        for n in range(1, 8):
            expected = mpf(-1) ** (n + 1) / n
            assert abs(s.coeffs[n] - expected) < mpf(2) ** -240


def test_compose_fibonacci_oracle():
    # 1/(1-u) with u = x + x^2 generates the Fibonacci numbers
    geo = _zero_centered([1] * 9)
    inner = _zero_centered([0, 1, 1] + [0] * 6)
    fib = geo.compose(inner)
    expected = [1, 1, 2, 3, 5, 8, 13, 21, 34]
    for n, want in enumerate(expected):
        assert abs(fib.coeffs[n] - want) < mpf(2) ** -240


def test_mul_reciprocal_round_trip():
    s = _zero_centered(["1.5", "-0.25", "0.125", "2", "-3"])
    prod = s * s.reciprocal()
    assert abs(prod.coeffs[0] - 1) < mpf(2) ** -246
    for c in prod.coeffs[1:]:
        assert abs(c) < mpf(2) ** -246


def test_divide_matches_mul_reciprocal():
    a = _zero_centered(["0.5", 3, "-1", 7, "0.03"])
    b = _zero_centered([2, "-1", "0.5", 1, 4])
    q1 = a / b
    q2 = a * b.reciprocal()
    for c1, c2 in zip(q1.coeffs, q2.coeffs):
        assert abs(c1 - c2) < mpf(2) ** -240


def test_derivative_antiderivative_round_trip():
    s = _zero_centered([7, 1, "0.5", "-2", 9])
    back = s.derivative().antiderivative(s.coeffs[0])
    assert back.coeffs == s.coeffs


def test_binary_ops_truncate_to_shorter_operand():
    a = _zero_centered([1, 2, 3, 4, 5])
    b = _zero_centered([1, 1])
    assert (a + b).order == 1
    assert (a * b).order == 1
    assert (a / b).order == 1


def test_evaluate_uses_horner_from_center():
    with mp.workprec(BITS):
        s = PowerSeries(mpf(2), tuple(mpf(1) for _ in range(40)), BITS)
        x = mpf(2) + mpf(1) / 4
        expected = (1 - (mpf(1) / 4) ** 40) / (1 - mpf(1) / 4)
        assert abs(s.evaluate(x) - expected) < mpf(2) ** -240


def test_incompatible_series_rejected():
    a = _zero_centered([1, 2])
    with mp.workprec(BITS):
        b = PowerSeries(mpf(1), (mpf(1), mpf(2)), BITS)
        c = PowerSeries(mpf(0), (mpf(1), mpf(2)), 128)
    with pytest.raises(DomainError):
        a + b
    with pytest.raises(DomainError):
        a * c


def test_degenerate_inputs_rejected():
    a = _zero_centered([0, 1, 2])
    with pytest.raises(DomainError):
        a.reciprocal()
    with pytest.raises(DomainError):
        _zero_centered([1, 1]) / a
    nonzero = _zero_centered([1, 1, 1])
    with pytest.raises(DomainError):
        _zero_centered([1, 1, 1]).compose(nonzero)
    with pytest.raises(DomainError):
        _zero_centered([-1, 1]).log()
    with pytest.raises(DomainError):
        _zero_centered([5]).derivative()
    with pytest.raises(DomainError):
        PowerSeries(mpf(0), (), BITS)


# ---------------------------------------------------------------------------
# series of F


def test_series_F_linear_coefficient_is_the_density():
    with mp.workprec(BITS):
        for x0 in (mpf(1), mpf(1) / 2):
            s = series_F(x0, 6, CFG)
            want = norm_pdf(1 / x0 + x0 / 2)
            assert abs(s.coeffs[1] - want) <= 2 * abs(mp.eps * want)


def test_series_F_constant_matches_closed_form():
    with mp.workprec(BITS):
        s = series_F(mpf(1), 4, CFG)
        assert abs(s.coeffs[0] - _closed_F(1)) <= 8 * CFG.quad_rel_tol


def test_series_F_predicts_nearby_values():
    with mp.workprec(BITS):
        x0 = mpf(1)
        s = series_F(x0, 8, CFG)
        for h in (mpf(1) / 1000, mpf(-1) / 1000):
            err = abs(s.evaluate(x0 + h) - _closed_F(x0 + h))
            assert err < mpf(10) ** -24


def test_series_F_domain():
    with pytest.raises(DomainError):
        series_F(0, 4, CFG)
    with pytest.raises(DomainError):
        series_F(1, 0, CFG)


# ---------------------------------------------------------------------------
# reversion


def test_reversion_matches_lagrange_oracle():
    # inverse of x + x^2 begins x - x^2 + 2x^3 - 5x^4
    s = _zero_centered([0, 1, 1, 0, 0])
    r = series_reverse(s)
    expected = [0, 1, -1, 2, -5]
    for got, want in zip(r.coeffs, expected):
        assert abs(got - want) < mpf(2) ** -240
    assert r.center == 0


def test_reversion_composes_to_identity():
    s = _zero_centered(["0.7", 2, "-1", "0.5", "0.25", 3, "-0.125", 1])
    r = series_reverse(s)
    with mp.workprec(BITS):
        shifted_s = PowerSeries(mpf(0), (mpf(0),) + s.coeffs[1:], BITS)
        shifted_r = PowerSeries(mpf(0), (mpf(0),) + r.coeffs[1:], BITS)
        both = shifted_s.compose(shifted_r)
        assert abs(both.coeffs[1] - 1) < mpf(2) ** -230
        for c in both.coeffs[2:]:
            assert abs(c) < mpf(2) ** -230


def test_reversion_is_an_involution():
    s = _zero_centered(["0.3", "1.5", "0.25", "-2", 1, "0.5"])
    back = series_reverse(series_reverse(s))
    assert abs(back.center - s.center) < mpf(2) ** -240
    for got, want in zip(back.coeffs, s.coeffs):
        assert abs(got - want) < mpf(2) ** -230


def test_reversion_rejects_zero_slope():
    with pytest.raises(DomainError):
        series_reverse(_zero_centered([1, 0, 1]))


# ---------------------------------------------------------------------------
# the probe volatility series


def test_probe_vol_series_constant_term():
    with mp.workprec(BITS):
        K0 = mp.exp(-1) / 2
        x0 = unit_time_value_inv(K0, CFG)
        s = series_f_direct(5, 1, CFG)
        assert s.center == K0
        assert abs(s.coeffs[0] - x0) < mpf(2) ** -120


def test_time_scaling_halves_coefficients_exactly():
    s1 = series_f_direct(5, 1, CFG)
    s4 = series_f_direct(5, 4, CFG)
    with mp.workprec(BITS):
        for c1, c4 in zip(s1.coeffs, s4.coeffs):
            assert c4 == c1 / 2


def test_probe_vol_series_predicts_the_solver():
    s = series_f_direct(6, 1, CFG)
    with mp.workprec(BITS):
        for h in (mpf(1) / 10**4, mpf(-1) / 10**4):
            K = s.center + h
            want = probe_implied_vol(K, 1, CFG)
            assert abs(s.evaluate(K) - want) < mpf(10) ** -20


# ---------------------------------------------------------------------------
# trivariate series


def _small_tri(data, D=3):
    with mp.workprec(BITS):
        center = (mpf(0), mpf(0), mpf(0))
        return TriSeries(center, {k: mpf(v) for k, v in data.items()}, D, BITS)


def test_tri_multiplication_respects_the_cap():
    s = _small_tri({(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1}, D=2)
    sq = s * s
    assert sq.coefficient(2, 0, 0) == 1
    assert sq.coefficient(1, 1, 0) == 2
    assert sq.coefficient(1, 0, 1) == 2
    cube = sq * s  # degree-3 terms all fall outside the cap
    assert cube.data == {}


def test_tri_reciprocal_round_trip():
    s = _small_tri({(0, 0, 0): 2, (1, 0, 0): "0.5", (0, 1, 1): "-1", (0, 0, 1): 3})
    prod = s * s.reciprocal()
    assert abs(prod.coefficient(0, 0, 0) - 1) < mpf(2) ** -246
    for key, v in prod.data.items():
        if key != (0, 0, 0):
            assert abs(v) < mpf(2) ** -244


def test_tri_validation():
    with pytest.raises(DomainError):
        _small_tri({(1, 0, 0): 1}, D=0) * 1  # noqa: B018
    with pytest.raises(DomainError):
        _small_tri({(2, 2, 0): 1}, D=3)
    with pytest.raises(DomainError):
        _small_tri({(0, 0, 0): 0}).reciprocal()
    a = _small_tri({(0, 0, 0): 1}, D=2)
    b = _small_tri({(0, 0, 0): 1}, D=3)
    with pytest.raises(DomainError):
        a + b


def test_tri_center_reprices_the_closed_form():
    with mp.workprec(BITS):
        S0, K0, c0 = TRI_CENTER_BITS(BITS)
        assert S0 == mpf(1) / 2
        assert abs(K0 - mp.exp(-1) / 2) == 0
        sig = unit_time_value_inv(K0, CFG)
        price = bs_price(VolPoint(S0, K0, mpf(1), sig), CFG)
        assert abs(price - c0) < mpf(2) ** -120


def test_expansion_constant_is_the_implied_vol():
    tri = tri_series_I(3, CFG)
    with mp.workprec(BITS):
        S0, K0, c0 = TRI_CENTER_BITS(BITS)
        iv = implied_vol(Quote(S0, K0, mpf(1), c0), CFG)
        assert abs(tri.coefficient(0, 0, 0) - iv) < mpf(2) ** -128


def test_price_sensitivity_is_reciprocal_vega():
    tri = tri_series_I(3, CFG)
    hi = PrecisionConfig(512)
    with mp.workprec(512):
        S0, K0, c0 = TRI_CENTER_BITS(512)
        h = mpf(2) ** -40
        up = implied_vol(Quote(S0, K0, mpf(1), c0 + h), hi)
        dn = implied_vol(Quote(S0, K0, mpf(1), c0 - h), hi)
        fd = (up - dn) / (2 * h)
        assert abs(tri.coefficient(0, 0, 1) - fd) < mpf(2) ** -70
        v = vega(VolPoint(S0, K0, mpf(1), tri.coefficient(0, 0, 0)), hi)
        assert abs(tri.coefficient(0, 0, 1) - 1 / v) < mpf(2) ** -120


def test_spot_and_strike_sensitivities_match_finite_differences():
    tri = tri_series_I(3, CFG)
    hi = PrecisionConfig(512)
    with mp.workprec(512):
        S0, K0, c0 = TRI_CENTER_BITS(512)
        h = mpf(2) ** -40
        dS = (
            implied_vol(Quote(S0 + h, K0, mpf(1), c0), hi)
            - implied_vol(Quote(S0 - h, K0, mpf(1), c0), hi)
        ) / (2 * h)
        dK = (
            implied_vol(Quote(S0, K0 + h, mpf(1), c0), hi)
            - implied_vol(Quote(S0, K0 - h, mpf(1), c0), hi)
        ) / (2 * h)
        assert abs(tri.coefficient(1, 0, 0) - dS) < mpf(2) ** -70
        assert abs(tri.coefficient(0, 1, 0) - dK) < mpf(2) ** -70


def test_expansion_reprices_perturbed_quotes():
    # evaluating the series at small offsets must invert the price map
    # with a residual of one order beyond the truncation: shrinking the
    # offsets tenfold must shrink the worst residual by about 10^(D+1)
    tri = tri_series_I(4, CFG)
    with mp.workprec(BITS):
        S0, K0, c0 = TRI_CENTER_BITS(BITS)

        def worst(h):
            top = mpf(0)
            for x, y, z in [(h, -h, h), (-h, h, 2 * h), (2 * h, h, -h)]:
                sig = mpf(0)
                for (i, j, k), v in tri.data.items():
                    sig += v * x**i * y**j * z**k
                price = bs_price(VolPoint(S0 + x, K0 + y, mpf(1), sig), CFG)
                top = max(top, abs(price - (c0 + z)))
            return top

        coarse = worst(mpf(1) / 10**4)
        fine = worst(mpf(1) / 10**5)
        assert fine < mpf(10) ** -18
        assert coarse / fine > mpf(10) ** mpf("4.5")


def test_expansion_is_deterministic():
    a = tri_series_I(2, CFG)
    b = tri_series_I(2, CFG)
    assert a == b


def test_expansion_domain():
    with pytest.raises(DomainError):
        tri_series_I(0, CFG)


# ---------------------------------------------------------------------------
# substitution onto the quote family


def test_single_monomial_substitutions():
    with mp.workprec(BITS):
        S0, K0, c0 = TRI_CENTER_BITS(BITS)
        center = (S0, K0, c0)
        e = mp.e
        spot = TriSeries(center, {(1, 0, 0): mpf(1)}, 2, BITS)
        out = substitute_specialize(spot, 2)
        assert abs(out.coeffs[1] - e) < mpf(2) ** -250 and out.coeffs[2] == 0
        strike = TriSeries(center, {(0, 1, 0): mpf(1)}, 2, BITS)
        out = substitute_specialize(strike, 2)
        assert out.coeffs[1] == 1 and out.coeffs[2] == 0
        price = TriSeries(center, {(0, 0, 1): mpf(1)}, 2, BITS)
        out = substitute_specialize(price, 2)
        assert abs(out.coeffs[1] - e) < mpf(2) ** -250
        assert abs(out.coeffs[2] - e) < mpf(2) ** -250
        assert out.center == K0


def test_substitution_rejects_excess_order():
    tri = _small_tri({(0, 0, 0): 1}, D=2)
    with pytest.raises(DomainError):
        substitute_specialize(tri, 3)


def test_pipelines_agree_on_low_coefficients():
    tri = tri_series_I(4, CFG)
    uni = substitute_specialize(tri, 4)
    direct = series_f_direct(4, 1, CFG)
    with mp.workprec(BITS):
        assert uni.center == direct.center
        for got, want in zip(uni.coeffs, direct.coeffs):
            assert abs(got - want) < mpf(2) ** -(BITS // 2)
