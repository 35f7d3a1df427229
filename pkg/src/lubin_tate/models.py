"""
Data models for deformation parameters, run configuration and reports
"""

from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sympy import isprime

from lubin_tate.scalars import phi


class CoefficientDomain(str, Enum):
    """Coefficient domain of a polynomial ring"""

    RATIONAL = "rational"
    MOD_P = "mod_p"


def max_u_accuracy(p: int, h: int) -> int:
    """Largest u-adic accuracy of t_0 obtainable from the recursions"""
    return p ** (h - 1) + phi(p, h)


class DeformationParams(BaseModel):
    """Prime, height and truncation orders of a Lubin-Tate computation"""

    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=2)
    h: int = Field(ge=2, le=8)
    x_order: int = Field(ge=1)
    xy_order: int = Field(ge=1)
    u_order: int = Field(ge=1)
    domain: CoefficientDomain = CoefficientDomain.RATIONAL

    @field_validator("p")
    @classmethod
    def validate_prime(cls, v: int) -> int:
        """Ensure p is prime"""
        if not isprime(v):
            raise ValueError(f"p must be prime, got {v}")
        return v

    @model_validator(mode="before")
    @classmethod
    def fill_default_orders(cls, data: Any) -> Any:
        """Default orders: x^{p^{2h-1}+1}, (x,y)^{p^h+1}, u^{p^{h-1}+Phi(h)}"""
        if not isinstance(data, dict):
            return data
        p, h = data.get("p"), data.get("h")
        if not isinstance(p, int) or not isinstance(h, int) or p < 2 or h < 1:
            return data
        data = dict(data)
        if data.get("x_order") is None:
            data["x_order"] = p ** (2 * h - 1) + 1
        if data.get("xy_order") is None:
            data["xy_order"] = p**h + 1
        if data.get("u_order") is None:
            data["u_order"] = max_u_accuracy(p, h)
        return data

    @property
    def q(self) -> int:
        """p^{h-1}"""
        return self.p ** (self.h - 1)

    @property
    def top(self) -> int:
        """p^h"""
        return self.p**self.h

    def with_domain(self, domain: CoefficientDomain) -> "DeformationParams":
        return self.model_copy(update={"domain": domain})

    def label(self) -> str:
        return f"(p={self.p}, h={self.h})"


class Violation(BaseModel):
    """A nonzero tracked coefficient of a residual"""

    x_degree: int = Field(ge=0)
    u_degree: int = Field(ge=0)
    monomial: List[Tuple[str, int]]
    coefficient: str

    def describe(self) -> str:
        mono = "*".join(f"{v}^{e}" if e != 1 else v for v, e in self.monomial) or "1"
        return f"x^{self.x_degree} u^{self.u_degree} {mono}: {self.coefficient}"


class AxiomReport(BaseModel):
    """Outcome of the formal group law axiom checks"""

    unit: bool
    commutativity: bool
    associativity: bool
    bivariate_order: int = Field(ge=1)
    trivariate_order: int = Field(ge=1)
    witness: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.unit and self.commutativity and self.associativity


CaseStatus = Literal["pass", "fail", "skipped", "error"]


class CaseResult(BaseModel):
    """One cell of the verification matrix"""

    case_id: str
    tag: str
    p: int
    h: int
    status: CaseStatus
    witness: Optional[str] = None
    detail: Optional[str] = None
    error_code: Optional[str] = None
    wall_time_ms: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def failures_carry_witness(self) -> "CaseResult":
        """Fail entries must name a concrete witness"""
        if self.status == "fail" and not self.witness:
            raise ValueError(f"Failed case {self.case_id} has no witness")
        return self


class VerifyReport(BaseModel):
    """Collected results of a verification run"""

    results: List[CaseResult] = Field(default_factory=list)

    @property
    def failed(self) -> List[CaseResult]:
        return [r for r in self.results if r.status in ("fail", "error")]

    @property
    def passed(self) -> bool:
        return not self.failed

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


class ModuliProbe(BaseModel):
    """First u-degrees at which the x^{p^{2h-1}} coefficients deviate from the stated values"""

    p: int
    h: int
    u_order: int
    lhs_first_deviation: Optional[int] = None
    rhs_first_deviation: Optional[int] = None
    narrow_modulus: int
    wide_modulus: int

    def agrees_below(self, order: int) -> bool:
        """True when both sides agree with the stated values modulo u^order"""
        deviations = (self.lhs_first_deviation, self.rhs_first_deviation)
        return all(d is None or d >= order for d in deviations)


class CocycleProbe(BaseModel):
    """First u-degrees at which t_0(gg') deviates from the two candidate composition rules"""

    p: int
    h: int
    u_order: int
    left_first_deviation: Optional[int] = None
    right_first_deviation: Optional[int] = None


class RunConfig(BaseModel):
    """Validated command-line configuration"""

    command: Literal["deformation", "action", "verify", "check"]
    p: int = Field(default=3, ge=2)
    h: int = Field(default=3, ge=2)
    x_order: Optional[int] = Field(default=None, ge=1)
    u_order: Optional[int] = Field(default=None, ge=1)
    xy_order: Optional[int] = Field(default=None, ge=1)
    engine: Literal["unfold", "solve", "both"] = "unfold"
    cases: List[str] = Field(default_factory=list)
    run_all: bool = False
    output_format: Literal["text", "json"] = "text"
    output_path: Optional[str] = None
    input_path: Optional[str] = None
    seed: int = 0
    samples: int = Field(default=200, ge=1)
    allow_heavy: bool = False
    max_workers: int = Field(default=1, ge=1, le=64)
    closed_form: bool = False
    identity: bool = False
    cocycle: bool = False
    g_values: Optional[str] = None
    modulus: Optional[str] = None

    def deformation_params(self) -> DeformationParams:
        """Validate the arithmetic part of the configuration"""
        return DeformationParams(
            p=self.p,
            h=self.h,
            x_order=self.x_order,
            xy_order=self.xy_order,
            u_order=self.u_order,
        )


class CommandResult(BaseModel):
    """Envelope returned by every command"""

    success: bool
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    error_code: Optional[str] = None
    exit_code: int = 0
