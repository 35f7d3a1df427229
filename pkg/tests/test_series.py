"""
Tests for truncated power series
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lubin_tate.models import CoefficientDomain
from lubin_tate.polyring import Poly, RingContext
from lubin_tate.properties import random_series
from lubin_tate.series import (
    MultiSeries,
    SeriesError,
    XSeries,
    XYSeries,
    compose,
    compose_multi,
    compose_sum,
    fgl_sum,
    lagrange_b_n,
    revert,
    substitute,
)


@pytest.fixture
def qring():
    return RingContext(3, 3, CoefficientDomain.RATIONAL, 6)


@pytest.fixture
def fring():
    return RingContext(3, 3, CoefficientDomain.MOD_P, 10)


def xs(ring, coeffs, order):
    return XSeries.from_coefficients(ring, coeffs, order)


class TestXSeries:
    def test_geometric_inverse(self, qring):
        """Test 1/(1 - x)"""
        s = xs(qring, {0: 1, 1: -1}, 6)
        assert s.inverse() == xs(qring, {n: 1 for n in range(6)}, 6)

    def test_not_invertible(self, qring):
        """Test a series without constant term has no inverse"""
        with pytest.raises(SeriesError) as exc_info:
            XSeries.x(qring, 4).inverse()

        assert exc_info.value.error_code == "NOT_INVERTIBLE"

    def test_valuation_and_derivative(self, qring):
        """Test valuation and formal derivative"""
        s = xs(qring, {1: 1, 3: 1}, 6)
        assert s.valuation() == 1
        assert XSeries.zero(qring, 6).valuation() == 6
        assert s.derivative() == xs(qring, {0: 1, 2: 3}, 5)

    def test_truncate_cannot_extend(self, qring):
        """Test truncation only goes down"""
        s = XSeries.x(qring, 4)
        assert s.truncate(2).order == 2

        with pytest.raises(SeriesError) as exc_info:
            s.truncate(5)

        assert exc_info.value.error_code == "CANNOT_EXTEND"

    def test_orders_must_match(self, qring):
        """Test two-argument operations need one truncation"""
        with pytest.raises(SeriesError) as exc_info:
            XSeries.x(qring, 4) + XSeries.x(qring, 5)

        assert exc_info.value.error_code == "CONTEXT_MISMATCH"

    def test_product_truncates(self, qring):
        """Test products drop degrees at or above the order"""
        s = xs(qring, {2: 1, 3: 1}, 5)
        assert s * s == xs(qring, {4: 1}, 5)

    def test_polynomial_scaling(self, fring):
        """Test scaling by a coefficient polynomial"""
        u = Poly.u(fring)
        s = XSeries.x(fring, 4).scale(u)
        assert s.coefficient(1) == u
        assert (s * u).coefficient(1) == Poly.u(fring, 2)


class TestFrobeniusPower:
    def test_matches_cube(self, fring):
        """Test s^p by Frobenius equals the repeated product"""
        s = xs(fring, {1: Poly.g(fring, 1), 2: Poly.u(fring)}, 8)
        cube = s.frobenius_power(1)
        assert cube.order == 24
        assert cube.truncate(8) == s * s * s

    def test_power_uses_digits(self, fring):
        """Test s^n for n with several base-p digits"""
        s = xs(fring, {1: 1, 2: Poly.u(fring)}, 12)
        expected = s.one_like()
        for _ in range(5):
            expected = expected * s
        assert s**5 == expected

    def test_rational_frobenius(self, qring):
        """Test Frobenius powers need F_p coefficients"""
        with pytest.raises(SeriesError) as exc_info:
            XSeries.x(qring, 4).frobenius_power(1)

        assert exc_info.value.error_code == "RATIONAL_FROBENIUS"


class TestComposition:
    def test_compose(self, qring):
        """Test (x + x^2) o (2x)"""
        f = xs(qring, {1: 1, 2: 1}, 6)
        g = xs(qring, {1: 2}, 6)
        assert compose(f, g) == xs(qring, {1: 2, 2: 4}, 6)

    def test_revert_catalan(self, qring):
        """Test the inverse of x + x^2 has Catalan coefficients"""
        f = xs(qring, {1: 1, 2: 1}, 6)
        g = revert(f)
        assert g == xs(qring, {1: 1, 2: -1, 3: 2, 4: -5, 5: 14}, 6)
        assert compose(f, g) == XSeries.x(qring, 6)

    def test_revert_errors(self, qring):
        """Test reversion preconditions"""
        with pytest.raises(SeriesError) as exc_info:
            revert(xs(qring, {0: 1, 1: 1}, 4))

        assert exc_info.value.error_code == "NONZERO_CONSTANT"

        with pytest.raises(SeriesError) as exc_info:
            revert(xs(qring, {2: 1}, 4))

        assert exc_info.value.error_code == "NOT_INVERTIBLE"

    @pytest.mark.parametrize(
        "ring",
        [
            RingContext(3, 3, CoefficientDomain.RATIONAL, 3, n_symbols=1),
            RingContext(3, 3, CoefficientDomain.MOD_P, 5, n_symbols=1),
        ],
        ids=["rational", "mod_p"],
    )
    @given(rng=st.randoms(use_true_random=False), order=st.integers(2, 8))
    @settings(max_examples=50, derandomize=True, deadline=None)
    def test_revert_random_series(self, ring, rng, order):
        """Test f(revert(f)) = x and revert(revert(f)) = f for random f"""
        f = random_series(rng, ring, order, 1)
        g = revert(f)

        assert compose(f, g) == XSeries.x(ring, order)
        assert compose(g, f) == XSeries.x(ring, order)
        assert revert(g) == f

    def test_compose_multi(self, qring):
        """Test f(x + y) as a bivariate series"""
        f = xs(qring, {1: 1, 2: 1}, 4)
        s = MultiSeries.variable(qring, 0, 2, 4) + MultiSeries.variable(qring, 1, 2, 4)
        expected = MultiSeries.from_coefficients(
            qring, {(1, 0): 1, (0, 1): 1, (2, 0): 1, (1, 1): 2, (0, 2): 1}, 4, 2
        )
        assert compose_multi(f, s) == expected

    def test_compose_sum(self, qring):
        """Test f(a(x) + b(y)) by binomial expansion"""
        f = xs(qring, {1: 1, 2: 1}, 4)
        x = XSeries.x(qring, 4)
        expected = XYSeries.from_terms(
            qring, {(1, 0): 1, (0, 1): 1, (2, 0): 1, (1, 1): 2, (0, 2): 1}, 4
        )
        assert compose_sum(f, x, x, 4) == expected


class TestBivariate:
    def test_substitute_multiplicative_law(self, qring):
        """Test F(x, x) for F = x + y + xy"""
        F = XYSeries.from_terms(qring, {(1, 0): 1, (0, 1): 1, (1, 1): 1}, 3)
        x = XSeries.x(qring, 6)
        assert substitute(F, x, x) == xs(qring, {1: 2, 2: 1}, 3)

    def test_substitute_nonzero_constant(self, qring):
        """Test arguments must vanish at 0"""
        F = XYSeries.from_terms(qring, {(1, 0): 1, (0, 1): 1}, 3)
        with pytest.raises(SeriesError) as exc_info:
            substitute(F, xs(qring, {0: 1}, 3), XSeries.x(qring, 3))

        assert exc_info.value.error_code == "NONZERO_CONSTANT"

    def test_fgl_sum(self, qring):
        """Test folding the additive law"""
        F = XYSeries.from_terms(qring, {(1, 0): 1, (0, 1): 1}, 6)
        terms = [XSeries.monomial(qring, 1, n, 6) for n in (1, 2, 3)]
        assert fgl_sum(F, terms) == xs(qring, {1: 1, 2: 1, 3: 1}, 6)

        with pytest.raises(SeriesError) as exc_info:
            fgl_sum(F, [])

        assert exc_info.value.error_code == "EMPTY_SUM"

    def test_swap_and_restrict(self, qring):
        """Test F(y, x) and F(x, 0)"""
        F = XYSeries.from_terms(qring, {(1, 0): 1, (0, 1): 2, (1, 1): 3}, 4)
        assert F.swapped() == XYSeries.from_terms(qring, {(0, 1): 1, (1, 0): 2, (1, 1): 3}, 4)
        assert F.restrict_y0() == XSeries.x(qring, 4)

    def test_lift(self, qring):
        """Test embedding an x-series as the second of three variables"""
        lifted = MultiSeries.lift(xs(qring, {2: 5}, 4), [1], 3)
        assert lifted.coefficient((0, 2, 0)) == Poly.constant(qring, 5)
        assert lifted.nvars == 3

    def test_json(self, qring):
        """Test bivariate JSON carries the arity"""
        F = XYSeries.from_terms(qring, {(1, 0): 1, (1, 1): Fraction(1, 2)}, 3)
        data = F.to_json()
        assert data["nvars"] == 2
        assert MultiSeries.from_json(qring, data) == MultiSeries.from_coefficients(
            qring, {(1, 0): 1, (1, 1): Fraction(1, 2)}, 3, 2
        )

    def test_malformed_json(self, qring):
        """Test broken series JSON"""
        with pytest.raises(SeriesError) as exc_info:
            XSeries.from_json(qring, {"terms": []})

        assert exc_info.value.error_code == "BAD_JSON"


class TestClosedFormExponential:
    def test_shape_errors(self, qring):
        """Test the closed form refuses unsupported logarithms"""
        one, zero = Poly.one(qring), Poly.zero(qring)
        with pytest.raises(SeriesError) as exc_info:
            lagrange_b_n([one, zero, zero], 2, 3, 2)

        assert exc_info.value.error_code == "UNSUPPORTED_HEIGHT"

        with pytest.raises(SeriesError) as exc_info:
            lagrange_b_n([one, one, zero, zero], 2, 3, 3)

        assert exc_info.value.error_code == "UNSUPPORTED_LOG_SHAPE"

        with pytest.raises(SeriesError) as exc_info:
            lagrange_b_n([one, zero, one, one], 0, 3, 3)

        assert exc_info.value.error_code == "OUT_OF_RANGE"

    def test_leading_coefficients(self, qring):
        """Test b_1 = 1, b_{p^{h-1}} = -L_{h-1} and b_{p^h} = -L_h"""
        L2, L3 = Poly.u(qring).scale(Fraction(1, 6)), Poly.constant(qring, Fraction(1, 24))
        log = [Poly.one(qring), Poly.zero(qring), L2, L3]
        assert lagrange_b_n(log, 1, 3, 3) == Poly.one(qring)
        assert lagrange_b_n(log, 9, 3, 3) == -L2
        assert lagrange_b_n(log, 27, 3, 3) == -L3
        assert lagrange_b_n(log, 2, 3, 3).is_zero()
