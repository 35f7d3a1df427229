"""
Tests for the functional-equation oracle
"""

import pytest

from lubin_tate.models import DeformationParams
from lubin_tate.oracle import (
    ActionError,
    cocycle_probe,
    functional_equation_sides,
    probe_lemma_moduli,
    reduced_law,
    residual,
    solve_action,
    tracked_limit,
    tracked_violations,
)
from lubin_tate.polyring import Poly
from lubin_tate.scalars import ExtensionField
from lubin_tate.stabilizer import ActionData, GroupElement, stabilizer_ring


class TestTrackedLimit:
    def test_strata(self, params33):
        """Test x^n is tracked to acc_k for p^{h+k-1} < n <= p^{h+k}"""
        acc = [22, 19, 10, 1]
        assert tracked_limit(9, acc, params33) == 22
        assert tracked_limit(27, acc, params33) == 22
        assert tracked_limit(28, acc, params33) == 19
        assert tracked_limit(243, acc, params33) == 10
        assert tracked_limit(244, acc, params33) == 0


class TestSolve:
    def test_agrees_with_recursions(self, solved33, unfolded33):
        """Test the solver and the recursions give the same t_i"""
        assert solved33.engine == "solve"
        assert solved33.accuracy == unfolded33.accuracy
        assert solved33.first_disagreement(unfolded33) is None

    def test_unnormalized(self, params33):
        """Test g_0 must be 1"""
        g = GroupElement.symbolic(stabilizer_ring(params33), normalized=False)
        with pytest.raises(ActionError) as exc_info:
            solve_action(g, params33)

        assert exc_info.value.error_code == "UNNORMALIZED"

    def test_undetermined(self, symbolic33):
        """Test u_order past p^{h-1} + Phi(h)"""
        params = DeformationParams(p=3, h=3, u_order=23)
        with pytest.raises(ActionError) as exc_info:
            solve_action(symbolic33, params)

        assert exc_info.value.error_code == "UNDETERMINED"

    def test_short_x_order(self, symbolic33):
        """Test x_order below p^{2h-1} + 1"""
        params = DeformationParams(p=3, h=3, x_order=100)
        with pytest.raises(ActionError) as exc_info:
            solve_action(symbolic33, params)

        assert exc_info.value.error_code == "INSUFFICIENT_TRUNCATION"

    def test_concrete_element(self, params33):
        """Test concrete elements are evaluated after solving, not solved"""
        field_ = ExtensionField(3, [1, 2, 0, 1])
        g = GroupElement.concrete(field_, [field_.one()])
        with pytest.raises(ActionError) as exc_info:
            solve_action(g, params33)

        assert exc_info.value.error_code == "MIXED_ELEMENTS"

    def test_other_prime(self, params33):
        """Test an element over another (p, h)"""
        g = GroupElement.symbolic(stabilizer_ring(DeformationParams(p=5, h=3)))
        with pytest.raises(ActionError) as exc_info:
            solve_action(g, params33)

        assert exc_info.value.error_code == "RING_MISMATCH"


class TestResidual:
    def test_zero_for_recursions(self, unfolded33, symbolic33, params33):
        """Test the unfolded action solves the functional equation"""
        series = residual(unfolded33, symbolic33, params33)

        assert series.is_zero()
        assert tracked_violations(series, unfolded33.accuracy, params33) == []

    def test_perturbation_detected(self, unfolded33, symbolic33, params33):
        """Test t_0 + u leaves tracked violations"""
        t = (unfolded33.t[0] + Poly.u(unfolded33.ring),) + unfolded33.t[1:]
        perturbed = ActionData(t, unfolded33.accuracy, unfolded33.w, "perturbed")
        violations = tracked_violations(
            residual(perturbed, symbolic33, params33), unfolded33.accuracy, params33
        )

        assert violations
        assert (27, 1) in {(v.x_degree, v.u_degree) for v in violations}

    def test_seed_mismatch(self, unfolded33, symbolic33, params33):
        """Test t_i must reduce to g_i modulo u"""
        t = (unfolded33.t[0] + 1,) + unfolded33.t[1:]
        bad = ActionData(t, unfolded33.accuracy, unfolded33.w)
        with pytest.raises(ActionError) as exc_info:
            residual(bad, symbolic33, params33)

        assert exc_info.value.error_code == "SEED_MISMATCH"

    def test_short_bivariate_order(self, unfolded33, params33):
        """Test F must be known far enough for x^{p^{2h-1}}"""
        F = reduced_law(params33, unfolded33.ring).truncate(20)
        with pytest.raises(ActionError) as exc_info:
            functional_equation_sides(list(unfolded33.t), unfolded33.w, params33, F)

        assert exc_info.value.error_code == "INSUFFICIENT_TRUNCATION"


class TestProbes:
    def test_lemma_moduli(self, unfolded33, params33):
        """Test the x^{p^{2h-1}} identities hold below u^{p^{h-1}-1}"""
        probe = probe_lemma_moduli(unfolded33, params33)

        assert probe.narrow_modulus == 8
        assert probe.wide_modulus == 10
        assert probe.u_order == 22
        assert probe.agrees_below(probe.narrow_modulus)

    def test_cocycle_at_height_two(self, params_h2):
        """Test the composition probe reports both candidate rules"""
        probe = cocycle_probe(params_h2)

        assert probe.u_order == 7
        assert probe.p == 3
        for deviation in (probe.left_first_deviation, probe.right_first_deviation):
            assert deviation is None or 0 < deviation < 7
