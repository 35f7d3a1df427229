"""
Tests for exact scalar arithmetic
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lubin_tate.scalars import (
    INFINITY,
    ExtensionField,
    ScalarError,
    balanced,
    binom,
    binom_p_over_p,
    check_prime,
    format_scalar,
    p_valuation,
    parse_scalar,
    phi,
    rat_div,
    rat_pow,
    reduce_mod_p,
)


F27 = ExtensionField(3, [1, 2, 0, 1])

f27_elements = st.lists(st.integers(0, 2), min_size=3, max_size=3).map(F27.element)
three_integral = st.builds(
    Fraction, st.integers(-60, 60), st.integers(1, 60).filter(lambda d: d % 3)
)


class TestRationals:
    def test_division(self):
        """Test exact division"""
        assert rat_div(3, 6) == Fraction(1, 2)
        assert rat_pow(Fraction(2, 3), -2) == Fraction(9, 4)

    def test_division_by_zero(self):
        """Test division by zero is rejected with a code"""
        with pytest.raises(ScalarError) as exc_info:
            rat_div(1, 0)

        assert exc_info.value.error_code == "DIVISION_BY_ZERO"

        with pytest.raises(ScalarError) as exc_info:
            rat_pow(0, -1)

        assert exc_info.value.error_code == "DIVISION_BY_ZERO"

    def test_format_and_parse(self):
        """Test the num/den text form"""
        assert format_scalar(Fraction(-3, 4)) == "-3/4"
        assert format_scalar(Fraction(8, 4)) == "2"
        assert parse_scalar(" -3/4 ") == Fraction(-3, 4)

    def test_parse_garbage(self):
        """Test unparsable scalars"""
        with pytest.raises(ScalarError) as exc_info:
            parse_scalar("three")

        assert exc_info.value.error_code == "BAD_ELEMENT"


class TestValuations:
    def test_valuation_of_rationals(self):
        """Test numerator and denominator contributions"""
        assert p_valuation(Fraction(9, 2), 3) == 2
        assert p_valuation(Fraction(2, 27), 3) == -3
        assert p_valuation(5, 3) == 0

    def test_valuation_of_zero(self):
        """Test zero has infinite valuation, above every integer"""
        assert p_valuation(0, 5) is INFINITY
        assert INFINITY > 10**9
        assert not INFINITY < 0
        assert INFINITY >= INFINITY

    def test_not_prime(self):
        """Test a composite modulus is rejected"""
        with pytest.raises(ScalarError) as exc_info:
            check_prime(4)

        assert exc_info.value.error_code == "NOT_PRIME"

    def test_reduce_mod_p(self):
        """Test reduction of p-integral rationals"""
        assert reduce_mod_p(Fraction(1, 2), 3) == 2
        assert reduce_mod_p(-1, 5) == 4
        assert reduce_mod_p(Fraction(-1, 80), 3) == reduce_mod_p(Fraction(-1, 2), 3)

    def test_reduce_non_integral(self):
        """Test a p in the denominator is an error"""
        with pytest.raises(ScalarError) as exc_info:
            reduce_mod_p(Fraction(1, 3), 3)

        assert exc_info.value.error_code == "NOT_P_INTEGRAL"

    def test_balanced(self):
        """Test balanced representatives"""
        assert balanced(2, 3) == -1
        assert balanced(1, 3) == 1
        assert balanced(4, 5) == -1
        assert balanced(2, 5) == 2


class TestCombinatorics:
    def test_binom_outside_range(self):
        """Test the zero convention"""
        assert binom(5, 7) == 0
        assert binom(5, -1) == 0
        assert binom(6, 3) == 20

    def test_binom_over_p(self):
        """Test binom(p, j) / p"""
        assert binom_p_over_p(5, 2) == 2
        assert binom_p_over_p(3, 1) == 1

        with pytest.raises(ScalarError) as exc_info:
            binom_p_over_p(5, 0)

        assert exc_info.value.error_code == "OUT_OF_RANGE"

    def test_phi(self):
        """Test p^{h-1} + ... + 1"""
        assert phi(3, 3) == 13
        assert phi(5, 3) == 31
        assert phi(2, 1) == 1


class TestExtensionField:
    def test_f9_arithmetic(self):
        """Test F_9 = F_3[a]/(a^2 + 1)"""
        field_ = ExtensionField(3, [1, 0, 1])
        a = field_.element([0, 1])

        assert field_.order == 9
        assert field_.mul(a, a) == field_.scalar(-1)
        assert field_.frobenius(a) == field_.element([0, 2])
        assert field_.is_teichmuller(a)
        assert field_.pow(a, 4) == field_.one()

    def test_parse_and_format(self):
        """Test element text round trip"""
        field_ = ExtensionField(3, [1, 0, 1])
        value = field_.parse_element("a + 1")

        assert value == (1, 1)
        assert field_.format_element(value) == "a + 1"
        assert field_.parse_element("a^2") == field_.scalar(-1)

    def test_reducible_modulus(self):
        """Test a reducible modulus is rejected"""
        with pytest.raises(ScalarError) as exc_info:
            ExtensionField(3, [2, 0, 1])

        assert exc_info.value.error_code == "NOT_IRREDUCIBLE"

    def test_non_monic_modulus(self):
        """Test the modulus must be monic"""
        with pytest.raises(ScalarError) as exc_info:
            ExtensionField(3, [1, 0, 2])

        assert exc_info.value.error_code == "NOT_IRREDUCIBLE"


class TestFieldProperties:
    @given(a=f27_elements, b=f27_elements, c=f27_elements)
    @settings(max_examples=200, derandomize=True, deadline=None)
    def test_field_axioms(self, a, b, c):
        """Test F_27 addition and multiplication satisfy the field axioms"""
        zero, one = F27.zero(), F27.one()

        assert F27.add(a, b) == F27.add(b, a)
        assert F27.mul(a, b) == F27.mul(b, a)
        assert F27.add(F27.add(a, b), c) == F27.add(a, F27.add(b, c))
        assert F27.mul(F27.mul(a, b), c) == F27.mul(a, F27.mul(b, c))
        assert F27.mul(a, F27.add(b, c)) == F27.add(F27.mul(a, b), F27.mul(a, c))
        assert F27.add(a, zero) == a
        assert F27.mul(a, one) == a
        assert F27.add(a, F27.sub(zero, a)) == zero
        if a != zero:
            assert F27.mul(a, F27.pow(a, F27.order - 2)) == one

    @given(a=f27_elements, b=f27_elements)
    @settings(max_examples=200, derandomize=True, deadline=None)
    def test_frobenius_is_a_field_automorphism(self, a, b):
        """Test a -> a^p respects both operations and has order h"""
        assert F27.frobenius(F27.add(a, b)) == F27.add(F27.frobenius(a), F27.frobenius(b))
        assert F27.frobenius(F27.mul(a, b)) == F27.mul(F27.frobenius(a), F27.frobenius(b))

        image = a
        for _ in range(F27.degree):
            image = F27.frobenius(image)
        assert image == a

    @given(a=three_integral, b=three_integral)
    @settings(max_examples=200, derandomize=True, deadline=None)
    def test_reduction_is_a_ring_map(self, a, b):
        """Test reduction of 3-integral rationals respects sums and products"""
        assert reduce_mod_p(a + b, 3) == (reduce_mod_p(a, 3) + reduce_mod_p(b, 3)) % 3
        assert reduce_mod_p(a * b, 3) == reduce_mod_p(a, 3) * reduce_mod_p(b, 3) % 3
        assert reduce_mod_p(-a, 3) == -reduce_mod_p(a, 3) % 3
        if reduce_mod_p(b, 3):
            assert reduce_mod_p(rat_div(a, b), 3) == (
                reduce_mod_p(a, 3) * pow(reduce_mod_p(b, 3), -1, 3) % 3
            )
