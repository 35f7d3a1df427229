"""
Tests for the verification matrix
"""

import pytest

from lubin_tate.models import DeformationParams
from lubin_tate.verifier import (
    CASES,
    CaseOptions,
    VerificationError,
    closed_form_f_cost,
    residual_cost,
    run_case,
    run_verification,
    select_cases,
    solve_cost,
)


class TestSelection:
    def test_registry_order(self):
        """Test --all runs every case in registry order"""
        tags = select_cases([], run_all=True)
        assert tags == list(CASES)
        assert tags[:3] == ["thm2.2", "thm2.3", "axioms"]
        assert len(tags) == 14

    def test_requested_order_is_normalized(self):
        """Test selected tags come back in registry order"""
        assert select_cases(["lemma-cpn", "axioms"]) == ["axioms", "lemma-cpn"]

    def test_unknown_case(self):
        """Test unknown tags are rejected"""
        with pytest.raises(VerificationError) as exc_info:
            select_cases(["thm9.9"])

        assert exc_info.value.error_code == "UNKNOWN_CASE"

    def test_no_cases(self):
        """Test an empty selection is rejected"""
        with pytest.raises(VerificationError) as exc_info:
            select_cases([])

        assert exc_info.value.error_code == "NO_CASES"


class TestCosts:
    def test_reference_costs(self, params33):
        """Test the default (3, 3) cells fit under the default cap"""
        assert solve_cost(params33) == 22**3 * 27 // 2
        assert residual_cost(params33) == 22**2 * 27
        assert closed_form_f_cost(params33) == 28**2 * 4 * 3
        assert max(solve_cost(params33), closed_form_f_cost(params33)) < 200_000

    def test_heavy_costs(self):
        """Test larger parameters exceed the default cap"""
        assert solve_cost(DeformationParams(p=3, h=4)) > 200_000
        assert closed_form_f_cost(DeformationParams(p=5, h=3)) > 200_000


class TestRunCase:
    def test_pass(self, params33):
        """Test a passing case carries a detail and no witness"""
        result = run_case("axioms", params33, CaseOptions())

        assert result.status == "pass"
        assert result.case_id == "axioms@p3h3"
        assert result.witness is None
        assert "trivariate order" in result.detail

    def test_skip_by_height(self, params_h2):
        """Test height-restricted cases are skipped with a reason"""
        result = run_case("lemma4.1", params_h2, CaseOptions())

        assert result.status == "skipped"
        assert "h = 2" in result.detail

    def test_skip_even_prime(self):
        """Test the binomial identity is skipped at p = 2"""
        result = run_case("binomial-lemma", DeformationParams(p=2, h=3), CaseOptions())
        assert result.status == "skipped"

    def test_skip_above_cap(self, params33):
        """Test cells above the term cap are skipped unless heavy runs are allowed"""
        result = run_case("thm3.2", params33, CaseOptions(term_cap=1000))

        assert result.status == "skipped"
        assert "--allow-heavy" in result.detail

    def test_domain_error(self):
        """Test domain errors become error entries with their code"""
        params = DeformationParams(p=3, h=3, x_order=100)
        result = run_case("residual", params, CaseOptions())

        assert result.status == "error"
        assert result.error_code == "INSUFFICIENT_TRUNCATION"

    @pytest.mark.parametrize(
        "tag", ["thm2.2", "thm2.3", "integrality", "lemma4.1", "binomial-lemma", "lemma-cpn"]
    )
    def test_closed_forms_and_identities(self, params33, tag):
        """Test the closed-form and identity cases pass at (3, 3)"""
        assert run_case(tag, params33, CaseOptions()).status == "pass"

    @pytest.mark.parametrize("tag", ["lemma3.1", "lemma3.2"])
    def test_randomized_cases(self, params33, tag):
        """Test the randomized lemmas pass on a fixed seed"""
        result = run_case(tag, params33, CaseOptions(seed=7, samples=25))
        assert result.status == "pass"

    @pytest.mark.heavy
    @pytest.mark.parametrize(
        "tag,p,h", [("thm2.2", 5, 3), ("thm2.2", 3, 4), ("thm2.3", 3, 4), ("thm3.2", 3, 4)]
    )
    def test_closed_forms_at_larger_parameters(self, tag, p, h):
        """Test the closed-form exp, F and g_*(u) beyond (3, 3)"""
        params = DeformationParams(p=p, h=h)
        result = run_case(tag, params, CaseOptions(allow_heavy=True))

        assert result.status == "pass", result.witness
        assert result.case_id == f"{tag}@p{p}h{h}"

    def test_residual(self, params33):
        """Test the residual vanishes"""
        assert run_case("residual", params33, CaseOptions()).status == "pass"

    def test_moduli_reported(self, params33):
        """Test the moduli case passes and reports both deviations and both moduli"""
        result = run_case("probe-moduli", params33, CaseOptions())

        assert result.status == "pass"
        assert result.witness is None
        assert "left side deviates at u^" in result.detail
        assert "right side at u^" in result.detail
        assert "moduli u^8 and u^10" in result.detail


class TestRunVerification:
    def test_inline(self, params33):
        """Test inline runs keep registry order"""
        report = run_verification(["lemma-cpn", "axioms"], params33, CaseOptions())

        assert [r.tag for r in report.results] == ["axioms", "lemma-cpn"]
        assert report.passed

    def test_process_pool(self, params33):
        """Test pooled runs return every case in registry order"""
        tags = select_cases(["lemma-cpn", "binomial-lemma", "lemma4.1"])
        report = run_verification(tags, params33, CaseOptions(), max_workers=2)

        assert [r.tag for r in report.results] == ["lemma4.1", "binomial-lemma", "lemma-cpn"]
        assert report.exit_code == 0

    @pytest.mark.heavy
    def test_full_matrix(self, params33):
        """Test every case at (3, 3)"""
        report = run_verification(select_cases([], run_all=True), params33, CaseOptions())
        assert report.passed, [r.case_id for r in report.failed]
