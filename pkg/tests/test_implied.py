"""Tests for the time-value map F, its inverse, and price inversion.

The oracle for F is its closed form in terms of the normal distribution
function, F(x) = e^-1 * N(-(1/x - x/2)) - N(-(1/x + x/2)), evaluated at
escalated precision.  The package itself never uses this form; it
integrates the density instead, so oracle and implementation share
nothing past the normal distribution.
"""

import pytest
from mpmath import mp, mpf

from ivlab.black_scholes import Quote, VolPoint, bs_price
from ivlab.implied import (
    implied_vol,
    probe_implied_vol,
    probe_price,
    probe_quote,
    unit_time_value,
    unit_time_value_inv,
)
from ivlab.precision import DomainError, PrecisionConfig, real

CFG = PrecisionConfig(working_bits=256)


def closed_form_F(x, bits=700):
    with mp.workprec(bits):
        x = mpf(x)
        d1 = 1 / x + x / 2
        d2 = 1 / x - x / 2
        return mp.exp(-1) * mp.ncdf(-d2) - mp.ncdf(-d1)


@pytest.mark.parametrize(
    "xs", ["0.01", "0.05", "0.3", "1", "1.41421356", "3", "10", "39.5", "41", "250"]
)
def test_unit_time_value_against_closed_form(xs):
    x = real(xs, 256)
    got = unit_time_value(x, CFG)
    want = closed_form_F(x)
    with mp.workprec(256):
        assert abs(got - want) <= 8 * CFG.quad_rel_tol * want


def test_unit_time_value_rejects_nonpositive():
    with pytest.raises(DomainError):
        unit_time_value(0, CFG)
    with pytest.raises(DomainError):
        unit_time_value(-1, CFG)


def test_unit_time_value_monotone_and_in_range():
    # strictly increasing while the gap to 1/e is representable; once the
    # true gap drops below an ulp the computed values saturate at the
    # working-precision rounding of 1/e and may only tie
    with mp.workprec(256):
        bound = mp.exp(-1)
        prev = mpf(0)
        for xs in ("0.2", "0.9", "1.5", "4", "12", "20"):
            val = unit_time_value(mpf(xs), CFG)
            assert prev < val < bound
            prev = val
        for xs in ("39", "40", "41", "60"):
            val = unit_time_value(mpf(xs), CFG)
            assert prev <= val <= bound
            prev = val


@pytest.mark.parametrize(
    "ys", ["1e-30", "1e-8", "0.001", "0.1", "0.25", "0.36", "0.36787944117144"]
)
def test_unit_time_value_inv_round_trip(ys):
    y = real(ys, 256)
    x = unit_time_value_inv(y, CFG)
    back = unit_time_value(x, CFG)
    with mp.workprec(256):
        assert abs(back - y) <= 32 * CFG.quad_rel_tol * y


def test_unit_time_value_inv_domain():
    with pytest.raises(DomainError):
        unit_time_value_inv(0, CFG)
    with pytest.raises(DomainError):
        unit_time_value_inv(mpf("0.4"), CFG)  # above 1/e
    with mp.workprec(256):
        boundary = mp.exp(-1)
        flat = boundary * (1 - mpf(2) ** -200)  # inside (0, 1/e), but F is
    with pytest.raises(DomainError):            # flat to tolerance there
        unit_time_value_inv(boundary, CFG)
    with pytest.raises(DomainError):
        unit_time_value_inv(flat, CFG)


def test_probe_price_and_quote_shape():
    with mp.workprec(256):
        K = mpf(1) / 4
        c = probe_price(K, CFG)
        want = (mp.e - 1) * K + mp.e * K * K
        assert abs(c - want) <= mpf(2) ** -248
        q = probe_quote(K, 2, CFG)
        assert abs(q.S - mp.e * K) <= mpf(2) ** -248
        assert q.K == K and q.T == 2


def test_probe_price_domain():
    with pytest.raises(DomainError):
        probe_price(0, CFG)
    with mp.workprec(256):
        edge = mp.exp(-1)
    with pytest.raises(DomainError):
        probe_price(edge, CFG)


def test_probe_vol_reprices_to_the_quote():
    with mp.workprec(256):
        K = real("0.31", 256)
        sig = probe_implied_vol(K, 4, CFG)
        repriced = bs_price(VolPoint(mp.e * K, K, 4, sig), CFG)
        assert abs(repriced - probe_price(K, CFG)) <= mpf("1e-60")


@pytest.mark.parametrize("Ks,Ts", [("0.05", "1"), ("0.2", "4"), ("0.35", "0.25")])
def test_two_path_identity(Ks, Ts):
    # generic inversion of the probe quote against direct inversion of F;
    # the two sides share only the quote arithmetic
    K = real(Ks, 256)
    T = real(Ts, 256)
    with mp.workprec(256):
        lhs = mp.sqrt(T) * probe_implied_vol(K, T, CFG)
        rhs = unit_time_value_inv(K, CFG)
        assert abs(lhs - rhs) <= mpf("1e-35") * rhs


def test_implied_vol_atm_against_erfinv_oracle():
    # at S = K = T = 1 the price is erf(sigma/(2*sqrt(2))), so the oracle
    # inverts with erfinv and never prices an option
    c = real("0.52", 256)
    sig = implied_vol(Quote(1, 1, 1, c), CFG)
    with mp.workprec(512):
        want = 2 * mp.sqrt(2) * mp.erfinv(c)
    with mp.workprec(256):
        assert abs(sig - want) <= abs(want) * mpf("1e-40")


@pytest.mark.parametrize(
    "Ss,Ks,Ts,sigs",
    [
        ("1", "1", "1", "0.2"),
        ("100", "90", "2.5", "0.6"),
        ("1", "3", "0.5", "1.7"),
        ("5", "1", "10", "0.2"),
        ("1", "1", "1", "1e-6"),
        ("2", "1", "1", "7"),
    ],
)
def test_implied_vol_round_trip(Ss, Ks, Ts, sigs):
    S, K, T, sig = (real(v, 256) for v in (Ss, Ks, Ts, sigs))
    price = bs_price(VolPoint(S, K, T, sig), CFG)
    got = implied_vol(Quote(S, K, T, price), CFG)
    with mp.workprec(256):
        assert abs(got - sig) <= sig * mpf("1e-33")


def test_implied_vol_rejects_unresolvable_quotes():
    with mp.workprec(256):
        tiny = mpf(2) ** -200
        with pytest.raises(DomainError):
            implied_vol(Quote(1, 2, 1, tiny), CFG)  # time value ~ 0
        with pytest.raises(DomainError):
            implied_vol(Quote(1, 2, 1, 1 - tiny), CFG)  # touching c = S
