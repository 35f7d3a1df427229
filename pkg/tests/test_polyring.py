"""
Tests for sparse polynomials in u and Teichmüller symbols
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lubin_tate.models import CoefficientDomain
from lubin_tate.polyring import Poly, PolyError, RingContext, g_reduce
from lubin_tate.properties import random_poly
from lubin_tate.scalars import ExtensionField


@pytest.fixture
def ring():
    return RingContext(3, 3, CoefficientDomain.MOD_P, 10)


@pytest.fixture
def rational():
    return RingContext(3, 3, CoefficientDomain.RATIONAL, 10)


class TestRingContext:
    def test_default_symbols(self, ring):
        """Test g_0, ..., g_h are available by default"""
        assert ring.n_symbols == 4
        assert ring.top == 27
        assert ring.with_u_order(5).u_order == 5
        assert ring.with_u_order(10) == ring

    def test_pack_unpack(self, ring):
        """Test monomial keys"""
        key = ring.pack(7, [0, 3, 26, 1])
        assert ring.unpack(key) == (7, [0, 3, 26, 1])

    def test_json(self, ring):
        """Test ring description and reload"""
        data = ring.to_json()
        assert data["domain"] == "mod_p"
        assert RingContext.from_json(data) == ring

    def test_malformed_json(self):
        """Test missing fields are reported"""
        with pytest.raises(PolyError) as exc_info:
            RingContext.from_json({"p": 3})

        assert exc_info.value.error_code == "BAD_JSON"


class TestArithmetic:
    def test_teichmuller_reduction(self, ring):
        """Test g^{p^h} = g"""
        assert g_reduce(27, 3, 3) == 1
        assert g_reduce(28, 3, 3) == 2
        assert g_reduce(26, 3, 3) == 26
        assert Poly.g(ring, 1, 20) * Poly.g(ring, 1, 10) == Poly.g(ring, 1, 4)
        assert Poly.g(ring, 2) ** 27 == Poly.g(ring, 2)

    def test_freshman_dream(self, ring):
        """Test (a + b)^p = a^p + b^p in characteristic p"""
        g1, u = Poly.g(ring, 1), Poly.u(ring)
        assert (g1 + u) ** 3 == Poly.g(ring, 1, 3) + Poly.u(ring, 3)
        assert (g1 + u) ** 9 == (g1 + u).pow_p(2)

    def test_binary_and_digit_powers_agree(self, ring):
        """Test powers with several base-p digits"""
        a = Poly.one(ring) + Poly.u(ring) * Poly.g(ring, 1) + Poly.u(ring, 2)
        expected = Poly.one(ring)
        for _ in range(14):
            expected = expected * a
        assert a**14 == expected

    def test_u_truncation(self, ring):
        """Test products beyond u^M vanish"""
        assert (Poly.u(ring, 6) * Poly.u(ring, 5)).is_zero()
        assert Poly.u(ring, 8).shift_u(3).is_zero()
        assert Poly.u(ring, 10).is_zero()

    def test_coefficients_mod_p(self, ring):
        """Test scalars live in F_p"""
        assert (Poly.constant(ring, 2) + 1).is_zero()
        assert Poly.constant(ring, Fraction(1, 2)) == Poly.constant(ring, 2)
        assert -Poly.one(ring) == Poly.constant(ring, 2)

    def test_ring_mismatch(self, ring, rational):
        """Test mixing rings is an error"""
        with pytest.raises(PolyError) as exc_info:
            Poly.one(ring) + Poly.one(rational)

        assert exc_info.value.error_code == "RING_MISMATCH"

    def test_negative_exponent(self, ring):
        """Test negative powers are rejected"""
        with pytest.raises(PolyError) as exc_info:
            Poly.u(ring) ** -1

        assert exc_info.value.error_code == "BAD_EXPONENT"

    def test_inverse(self, ring):
        """Test inverses of 1 + (u-divisible)"""
        a = Poly.constant(ring, 2) + Poly.u(ring) * Poly.g(ring, 1)
        assert a * a.inverse() == Poly.one(ring)

    def test_not_invertible(self, ring):
        """Test a polynomial without unit constant term"""
        with pytest.raises(PolyError) as exc_info:
            Poly.u(ring).inverse()

        assert exc_info.value.error_code == "NOT_INVERTIBLE"

        with pytest.raises(PolyError) as exc_info:
            (Poly.one(ring) + Poly.g(ring, 1)).inverse()

        assert exc_info.value.error_code == "NOT_INVERTIBLE"


class TestFrobenius:
    def test_frobenius_twists_symbols_only(self, ring):
        """Test sigma raises g exponents and leaves u"""
        a = Poly.u(ring) * Poly.g(ring, 1)
        assert a.frobenius() == Poly.u(ring) * Poly.g(ring, 1, 3)
        assert a.frobenius(3) == a
        assert a.frobenius(4) == a.frobenius(1)

    def test_pow_p_matches_power(self, ring):
        """Test absolute Frobenius equals the p-th power"""
        a = Poly.one(ring) + Poly.u(ring) * Poly.g(ring, 2) - Poly.g(ring, 1)
        assert a.pow_p(1) == a * a * a

    def test_rational_frobenius(self, rational):
        """Test Frobenius is only modeled over F_p"""
        with pytest.raises(PolyError) as exc_info:
            Poly.g(rational, 1).frobenius()

        assert exc_info.value.error_code == "RATIONAL_FROBENIUS"

        with pytest.raises(PolyError) as exc_info:
            Poly.g(rational, 1).pow_p()

        assert exc_info.value.error_code == "RATIONAL_FROBENIUS"


class TestCoefficientsAndSubstitution:
    def test_u_coefficients(self, ring):
        """Test u-graded access"""
        g1 = Poly.g(ring, 1)
        a = Poly.one(ring) + Poly.u(ring) * g1.scale(2) + Poly.u(ring, 2)
        assert a.coefficient_of_u(1) == g1.scale(2)
        assert a.coefficient_of_u(2) == Poly.one(ring)
        assert sorted(a.u_coefficients()) == [0, 1, 2]
        assert (Poly.u(ring, 2) + Poly.u(ring, 3)).u_valuation() == 2
        assert Poly.zero(ring).u_valuation() == 10
        assert a.truncate_u(1) == Poly.one(ring)

    def test_substitute_u(self, ring):
        """Test replacing u by a u-divisible polynomial"""
        u = Poly.u(ring)
        a = Poly.one(ring) + u + Poly.u(ring, 2)
        w = u * Poly.g(ring, 1)
        assert a.substitute_u(w) == Poly.one(ring) + w + w * w

    def test_substitute_g(self, ring):
        """Test normalizing g_0 to 1"""
        a = Poly.g(ring, 0, 2) * Poly.g(ring, 1) + Poly.u(ring)
        assert a.substitute_g({0: Poly.one(ring)}) == Poly.g(ring, 1) + Poly.u(ring)

    def test_rename_symbols(self, ring):
        """Test moving symbols into a wider ring"""
        wide = ring.with_symbols(8)
        a = Poly.u(ring) * Poly.g(ring, 1, 2)
        assert a.rename_symbols({1: 5}, wide) == Poly.u(wide) * Poly.g(wide, 5, 2)

    def test_to_ring_reduces(self, ring, rational):
        """Test Q -> F_p reduction and u truncation"""
        a = Poly.constant(rational, Fraction(1, 2)) + Poly.u(rational, 9)
        assert a.to_ring(ring.with_u_order(5)) == Poly.constant(ring.with_u_order(5), 2)
        assert a.reduce_mod_p(ring) == Poly.constant(ring, 2) + Poly.u(ring, 9)

    def test_to_ring_refuses_lift(self, ring, rational):
        """Test F_p -> Q is not a ring map"""
        with pytest.raises(PolyError) as exc_info:
            Poly.one(ring).to_ring(rational)

        assert exc_info.value.error_code == "RING_MISMATCH"

    def test_evaluate(self, ring):
        """Test concrete evaluation in F_27"""
        field_ = ExtensionField(3, [1, 2, 0, 1])
        a_value = field_.element([0, 1])
        values = [field_.one(), a_value, field_.zero(), field_.zero()]
        poly = Poly.one(ring) + Poly.u(ring) * Poly.g(ring, 1, 2)
        evaluated = poly.evaluate(field_, values)
        assert evaluated[0] == field_.one()
        assert evaluated[1] == field_.mul(a_value, a_value)


class TestPresentation:
    def test_balanced_text(self, ring):
        """Test text output uses balanced residues"""
        a = Poly.one(ring) + Poly.u(ring) * Poly.g(ring, 1).scale(2)
        assert str(a) == "1 - u*g1"
        assert str(Poly.constant(ring, 2)) == "-1"
        assert str(Poly.zero(ring)) == "0"

    def test_json_reload(self, ring):
        """Test JSON output reloads to the same polynomial"""
        a = Poly.one(ring) + Poly.u(ring, 3) * Poly.g(ring, 2, 5).scale(2)
        assert Poly.from_json(ring, a.to_json()) == a
        assert a.to_json()[1] == {"monomial": [["u", 3], ["g2", 5]], "coeff": "2"}

    def test_malformed_json(self, ring):
        """Test bad polynomial JSON"""
        with pytest.raises(PolyError) as exc_info:
            Poly.from_json(ring, [{"monomial": [["z", 1]], "coeff": "1"}])

        assert exc_info.value.error_code == "BAD_JSON"


SMALL_MOD_P = RingContext(3, 3, CoefficientDomain.MOD_P, 5, n_symbols=2)
SMALL_RATIONAL = RingContext(3, 3, CoefficientDomain.RATIONAL, 5, n_symbols=2)


def draw_polys(rng, ring, count):
    return [random_poly(rng, ring, rng.randint(1, 4), symbols=2) for _ in range(count)]


class TestAlgebraicProperties:
    @given(rng=st.randoms(use_true_random=False))
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_multiplication_commutes_and_associates(self, rng):
        """Test products of random polynomials are commutative and associative"""
        for ring in (SMALL_MOD_P, SMALL_RATIONAL):
            a, b, c = draw_polys(rng, ring, 3)
            assert a * b == b * a
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c

    @given(rng=st.randoms(use_true_random=False))
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_reduction_is_a_ring_map(self, rng):
        """Test Q -> F_p reduction respects sums and products"""
        a, b = (
            poly.scale(Fraction(1, rng.choice([1, 2, 4, 5])))
            for poly in draw_polys(rng, SMALL_RATIONAL, 2)
        )

        assert (a + b).reduce_mod_p() == a.reduce_mod_p() + b.reduce_mod_p()
        assert (a * b).reduce_mod_p() == a.reduce_mod_p() * b.reduce_mod_p()
        assert (a * b).reduce_mod_p().ring == SMALL_MOD_P

    @given(rng=st.randoms(use_true_random=False))
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_frobenius_is_a_ring_map(self, rng):
        """Test sigma respects sums and products and sigma^h is the identity"""
        a, b = draw_polys(rng, SMALL_MOD_P, 2)

        assert (a + b).frobenius() == a.frobenius() + b.frobenius()
        assert (a * b).frobenius() == a.frobenius() * b.frobenius()

        image = a
        for _ in range(SMALL_MOD_P.h):
            image = image.frobenius()
        assert image == a

    @pytest.mark.parametrize("p,h", [(2, 4), (3, 3), (5, 2)])
    @given(e=st.integers(0, 10**5))
    @settings(max_examples=200, derandomize=True, deadline=None)
    def test_g_reduce(self, p, h, e):
        """Test exponent reduction is idempotent and preserves g^e"""
        top = p**h
        reduced = g_reduce(e, p, h)

        assert g_reduce(reduced, p, h) == reduced
        assert reduced < top
        if e:
            assert reduced >= 1
            assert (reduced - e) % (top - 1) == 0
        else:
            assert reduced == 0
