"""Tests for the symbolic real-number micro-parser."""

import pytest
from mpmath import mp, mpf

from ivlab.precision import DomainError
from ivlab.symexpr import parse_real

BITS = 256


def ref(builder):
    # mirror the parser's contract: evaluate with guard bits, round once
    with mp.workprec(BITS + 32):
        value = builder()
    with mp.workprec(BITS):
        return +value


def test_plain_numbers():
    assert parse_real("3", BITS) == 3
    assert parse_real("0.25", BITS) == mpf("0.25")
    assert parse_real("-7", BITS) == -7
    assert parse_real("+2.5", BITS) == mpf("2.5")


def test_scientific_notation_is_one_token():
    assert parse_real("1e-8", BITS) == ref(lambda: mpf("1e-8"))
    assert parse_real("2e5", BITS) == 200000
    assert parse_real("2.5e+3", BITS) == 2500


def test_bare_e_is_the_constant():
    assert parse_real("e", BITS) == ref(lambda: mp.e)
    # with spacing this is arithmetic on the constant, not a float literal
    assert parse_real("2e - 8", BITS) == ref(lambda: 2 * mp.e - 8)
    assert parse_real("2e", BITS) == ref(lambda: 2 * mp.e)


def test_pi_constant():
    assert parse_real("pi", BITS) == ref(lambda: mp.pi)
    assert parse_real("2*pi", BITS) == ref(lambda: 2 * mp.pi)


def test_arithmetic_and_precedence():
    assert parse_real("1 + 2*3", BITS) == 7
    assert parse_real("(1 + 2)*3", BITS) == 9
    assert parse_real("1/(2*e)", BITS) == ref(lambda: 1 / (2 * mp.e))
    assert parse_real("1/e - 1/2^250", BITS) == ref(
        lambda: 1 / mp.e - mpf(2) ** -250
    )


def test_power_binds_tighter_than_implicit_multiplication():
    # 2e^3 reads as 2*(e^3)
    assert parse_real("2e^3", BITS) == ref(lambda: 2 * mp.e**3)
    assert parse_real("2^3^2", BITS) == 512  # right associative
    assert parse_real("-2^2", BITS) == -4  # sign applies to the power


def test_implicit_multiplication_with_parentheses():
    assert parse_real("2(3+4)", BITS) == 14
    assert parse_real("(1+1)(2+2)", BITS) == 8
    assert parse_real("3pi", BITS) == ref(lambda: 3 * mp.pi)


def test_unary_signs_stack():
    assert parse_real("--3", BITS) == 3
    assert parse_real("-(2+3)", BITS) == -5


def test_value_is_rounded_once_to_requested_bits():
    third = parse_real("1/3", BITS)
    with mp.workprec(BITS):
        assert third == mpf(1) / 3


def test_rejects_empty_and_garbage():
    for bad in ("", "   ", "2 +", "(1", "1)", "* 3", "2..5", "2.", "foo"):
        with pytest.raises(DomainError):
            parse_real(bad, BITS)


def test_rejects_unknown_symbol():
    with pytest.raises(DomainError, match="unknown symbol"):
        parse_real("2x", BITS)


def test_rejects_division_by_zero():
    with pytest.raises(DomainError, match="division by zero"):
        parse_real("1/(2-2)", BITS)


def test_rejects_bad_powers():
    with pytest.raises(DomainError):
        parse_real("0^(-1)", BITS)
    with pytest.raises(DomainError):
        parse_real("(-2)^0.5", BITS)


def test_integer_powers_of_negative_base_allowed():
    assert parse_real("(-2)^3", BITS) == -8
