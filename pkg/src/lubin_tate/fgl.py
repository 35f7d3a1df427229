"""
Universal deformation of the height-h Honda formal group law
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Dict, List, Optional, Tuple, Union

from lubin_tate.models import AxiomReport, CoefficientDomain, DeformationParams
from lubin_tate.polyring import Poly, RingContext
from lubin_tate.scalars import binom, format_scalar
from lubin_tate.series import (
    S,
    MultiSeries,
    SeriesError,
    XSeries,
    XYSeries,
    compose_multi,
    compose_sum,
    fgl_sum,
    lagrange_b_n,
    revert,
    substitute,
)

logger = logging.getLogger(__name__)


class FGLError(Exception):
    """Exception raised when a formal group law cannot be built or checked"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


def rational_ring(params: DeformationParams) -> RingContext:
    return RingContext(params.p, params.h, CoefficientDomain.RATIONAL, params.u_order)


def reduced_ring(params: DeformationParams) -> RingContext:
    return RingContext(params.p, params.h, CoefficientDomain.MOD_P, params.u_order)


def _log_length(p: int, order: int) -> int:
    """ceil(log_p(order))"""
    e = 0
    while p**e < order:
        e += 1
    return e


def araki_log(params: DeformationParams) -> List[Poly]:
    """
    Logarithm coefficients L_0, ..., L_n modulo (u_1, ..., u_{h-2})

    L_n (p - p^{p^n}) = L_{n-h+1} u^{p^{n-h+1}} + L_{n-h}, absent terms zero.

    Args:
        params: Deformation parameters; n runs up to ceil(log_p(x_order))

    Returns:
        List of rational polynomials in u
    """
    p, h = params.p, params.h
    ring = rational_ring(params)
    coeffs = [Poly.one(ring)]
    for n in range(1, _log_length(p, params.x_order) + 1):
        value = Poly.zero(ring)
        if n - h + 1 >= 0:
            value = value + coeffs[n - h + 1] * Poly.u(ring, p ** (n - h + 1))
        if n - h >= 0:
            value = value + coeffs[n - h]
        coeffs.append(value.scale(Fraction(1, p - p ** (p**n))))
    return coeffs


def log_series(params: DeformationParams, order: int) -> XSeries:
    """sum_i L_i x^{p^i} modulo x^order"""
    coeffs = araki_log(params.model_copy(update={"x_order": max(order, params.x_order)}))
    ring = rational_ring(params)
    return XSeries.from_coefficients(
        ring, {params.p**i: c for i, c in enumerate(coeffs) if params.p**i < order}, order
    )


def exp_series(params: DeformationParams, order: int) -> XSeries:
    """Exponential by Newton reversion of the logarithm"""
    return revert(log_series(params, order))


def exp_closed_form(params: DeformationParams) -> XSeries:
    """Exponential modulo x^{p^h+1} from the closed-form coefficients b_n (h > 2)"""
    p, h = params.p, params.h
    top = p**h
    coeffs = araki_log(params.model_copy(update={"x_order": max(top + 1, params.x_order)}))
    try:
        b = {n: lagrange_b_n(coeffs, n, p, h) for n in range(1, top + 1)}
    except SeriesError as e:
        raise FGLError(e.message, error_code=e.error_code)
    return XSeries.from_coefficients(rational_ring(params), b, top + 1)


def _non_integral(series: MultiSeries, p: int) -> Optional[str]:
    """First coefficient with a p in its denominator, as a witness string"""
    for key in sorted(series.coeffs, key=lambda k: (sum(k), k)):
        poly = series.coeffs[key]
        for mono in poly.sorted_keys():
            c = Fraction(poly.terms[mono])
            if c.denominator % p == 0:
                label = "*".join(f"{v}^{e}" for v, e in poly.monomial_label(mono)) or "1"
                return f"deg {list(key)} {label}: {format_scalar(c)}"
    return None


@dataclass(frozen=True, eq=False)
class FGLData:
    """Universal deformation F with its logarithm, exponential and rational p-series"""

    params: DeformationParams
    log_coeffs: Tuple[Poly, ...]
    log: XSeries
    exp: XSeries
    F: XYSeries
    p_series: XSeries

    @cached_property
    def reduced_F(self) -> XYSeries:
        """F modulo p, computed once from the exact rational F"""
        return self.F.to_ring(reduced_ring(self.params))

    def to_json(self) -> Dict[str, Any]:
        return {
            "log_coeffs": [c.to_json() for c in self.log_coeffs],
            "log": self.log.to_json(),
            "exp": self.exp.to_json(),
            "F": self.F.to_json(),
            "p_series": self.p_series.to_json(),
        }


@lru_cache(maxsize=16)
def universal_F(params: DeformationParams) -> FGLData:
    """
    F(x, y) = exp(log x + log y) modulo (u_1, ..., u_{h-2}, (x, y)^{xy_order})

    Raises:
        FGLError: If a coefficient of F is not p-integral
    """
    p, h, T = params.p, params.h, params.xy_order
    logger.info(f"Building universal deformation {params.label()} to total degree {T}")
    ring = rational_ring(params)
    coeffs = araki_log(params.model_copy(update={"x_order": max(params.x_order, T)}))
    log = XSeries.from_coefficients(
        ring,
        {p**i: c for i, c in enumerate(coeffs) if p**i < params.x_order},
        params.x_order,
    )
    ell = XSeries.from_coefficients(ring, {p**i: c for i, c in enumerate(coeffs) if p**i < T}, T)
    exp = revert(ell)
    F = compose_sum(exp, ell, ell, T)

    witness = _non_integral(F, p)
    if witness:
        raise FGLError(
            f"Non-integral coefficient of F: {witness}", error_code="INTEGRALITY_FAILURE"
        )

    q = p ** (h - 1)
    summands = [
        XSeries.monomial(ring, p, 1, T),
        XSeries.monomial(ring, Poly.u(ring), q, T),
        XSeries.monomial(ring, 1, p**h, T),
    ]
    rational_p = fgl_sum(F, summands)
    logger.info(f"Universal deformation {params.label()} has {len(F.coeffs)} terms")
    return FGLData(params, tuple(coeffs), log, exp, F, rational_p)


def pushforward(F: XYSeries, w: Poly) -> XYSeries:
    """g_*F: every coefficient of F with u replaced by w = g_*(u)"""
    if w.ring != F.ring:
        w = w.to_ring(F.ring)
    return F.map_coefficients(lambda c: c.substitute_u(w))


def c_pn_coefficients(p: int, n: int) -> Dict[Tuple[int, int], int]:
    """Integer coefficients of C_{p^n}(x, y) = ((x + y)^{p^n} - x^{p^n} - y^{p^n}) / p"""
    N = p**n
    out: Dict[Tuple[int, int], int] = {}
    c = 1
    for i in range(1, N):
        c = c * (N - i + 1) // i
        out[(i, N - i)] = c // p
    return out


def c_pn_polynomial(n: int, ring: RingContext, order: int) -> XYSeries:
    """C_{p^n}(x, y) modulo (x, y)^order"""
    if n < 1:
        raise FGLError(f"C_(p^n) needs n >= 1, got {n}", error_code="OUT_OF_RANGE")
    if ring.p**n >= order:
        return XYSeries(ring, {}, order)
    return XYSeries.from_terms(ring, c_pn_coefficients(ring.p, n), order)


def c_pn(n: int, A: S, B: S) -> S:
    """
    C_{p^n}(A, B) for two series of the same kind

    The integer coefficients binom(p^n, i)/p are formed exactly before they
    enter the target ring, so the result is correct modulo p as well.
    """
    C = c_pn_polynomial(n, A.ring, max(A.order, B.order, A.ring.p**n + 1))
    return substitute(C, A, B)


def p_m(m: int, params: DeformationParams) -> XYSeries:
    """
    The rational polynomial P_m(x, y) with u^{m+1} P_m the u^{m+1}-graded piece of F

    Raises:
        FGLError: If m is outside [1, p - 1] or h <= 2
    """
    p, h = params.p, params.h
    if h <= 2:
        raise FGLError(f"P_m is defined for h > 2, got {h}", error_code="UNSUPPORTED_HEIGHT")
    if not 1 <= m <= p - 1:
        raise FGLError(f"m = {m} outside [1, {p - 1}]", error_code="OUT_OF_RANGE")
    q, T = p ** (h - 1), params.xy_order
    ring = rational_ring(params)
    if q * (m + 1) - m >= T:
        return XYSeries(ring, {}, T)

    denominator = Fraction(1, (p - p**q) ** (m + 1))
    acc: Dict[Tuple[int, int], Fraction] = {}
    for j in range(m + 1):
        c = (
            Fraction((-1) ** (j + 1), j + 1)
            * binom(q * (j + 1), j)
            * binom(j * (q - 1) + q, m - j)
            * denominator
        )
        a, b = q * (j + 1) - m, m - j
        # (x + y)^a (x^q + y^q)^b
        for l in range(b + 1):
            weight = c * binom(b, l)
            for k in range(a + 1):
                key = (k + q * l, a - k + q * (b - l))
                acc[key] = acc.get(key, Fraction(0)) + weight * binom(a, k)
    return XYSeries.from_terms(ring, acc, T)


def closed_form_blocks(params: DeformationParams) -> Dict[int, XYSeries]:
    """u-graded pieces of the closed form of F, keyed by u-degree"""
    p, h = params.p, params.h
    if h <= 2:
        raise FGLError(f"Closed form of F needs h > 2, got {h}", error_code="UNSUPPORTED_HEIGHT")
    ring = rational_ring(params)
    T = params.xy_order
    q, top = p ** (h - 1), p**h
    linear = XYSeries.from_terms(ring, {(1, 0): 1, (0, 1): 1}, T)
    top_unit = Fraction(-1) / (1 - Fraction(p) ** (top - 1))
    q_unit = Fraction(-1) / (1 - Fraction(p) ** (q - 1))
    blocks = {
        0: linear + c_pn_polynomial(h, ring, T).scale(top_unit),
        1: c_pn_polynomial(h - 1, ring, T).scale(Poly.u(ring).scale(q_unit)),
    }
    for m in range(1, p):
        blocks[m + 1] = p_m(m, params).scale(Poly.u(ring, m + 1))
    return blocks


def f_closed_form(params: DeformationParams) -> XYSeries:
    """x + y - u C_{p^{h-1}}/(1 - p^{p^{h-1}-1}) - C_{p^h}/(1 - p^{p^h-1}) + sum u^{m+1} P_m"""
    blocks = closed_form_blocks(params)
    total = XYSeries(rational_ring(params), {}, params.xy_order)
    for block in blocks.values():
        total = total + block
    return total


def block_integrality(params: DeformationParams) -> Dict[int, Optional[str]]:
    """For each u-graded block of the closed form, a non-integral witness or None"""
    return {d: _non_integral(block, params.p) for d, block in closed_form_blocks(params).items()}


def p_series(fgl: FGLData, params: DeformationParams) -> XSeries:
    """
    [p]_F(x) modulo x^{x_order}

    Over Q this is p x +_F u x^{p^{h-1}} +_F x^{p^h}; modulo p the first summand
    vanishes. Requires F known far enough: x_order <= xy_order over Q and
    x_order <= xy_order * p^{h-1} modulo p.

    Raises:
        FGLError: If the truncation of F is insufficient
    """
    p, h, N = params.p, params.h, params.x_order
    q = p ** (h - 1)
    if params.domain == CoefficientDomain.RATIONAL:
        F = fgl.F
        ring = F.ring
        summands = [XSeries.monomial(ring, p, 1, N)]
    else:
        F = fgl.reduced_F
        ring = F.ring
        summands = []
    summands += [
        XSeries.monomial(ring, Poly.u(ring), q, N),
        XSeries.monomial(ring, 1, p**h, N),
    ]
    result = fgl_sum(F, summands)
    if result.order < N:
        raise FGLError(
            f"F known to total degree {F.order} determines [p](x) only below x^{result.order}, "
            f"{N} requested",
            error_code="INSUFFICIENT_TRUNCATION",
        )
    return result.truncate(N)


def verify_fgl_axioms(
    fgl: Union[FGLData, XYSeries], trivariate_order: Optional[int] = None
) -> AxiomReport:
    """
    Check unit, commutativity and associativity of a truncated formal group law

    Unit and commutativity are checked to the full bivariate truncation,
    associativity modulo (x, y, z)^trivariate_order (default p^{h-1} + p + 1).
    Failures are reported, not raised.
    """
    F = fgl.F if isinstance(fgl, FGLData) else fgl
    ring, T = F.ring, F.order
    if trivariate_order is None:
        trivariate_order = min(T, ring.p ** (ring.h - 1) + ring.p + 1)
    trivariate_order = min(trivariate_order, T)
    witness: Optional[str] = None

    x = XSeries.x(ring, T)
    unit_key = F.restrict_y0().first_difference(x)
    unit = unit_key is None and F.swapped().restrict_y0() == x
    if not unit:
        witness = f"F(x,0) differs at x^{unit_key}"

    comm_key = F.first_difference(F.swapped())
    commutativity = comm_key is None
    if not commutativity and witness is None:
        witness = f"F(x,y) - F(y,x) nonzero at {list(comm_key or ())}"

    small = XYSeries.from_multi(F.truncate(trivariate_order))
    X, Y, Z = (MultiSeries.variable(ring, i, 3, trivariate_order) for i in range(3))
    left = substitute(small, substitute(small, X, Y), Z)
    right = substitute(small, X, substitute(small, Y, Z))
    assoc_key = left.first_difference(right)
    associativity = assoc_key is None
    if not associativity and witness is None:
        witness = f"associativity fails at {list(assoc_key or ())}"

    logger.info(
        f"Axioms: unit={unit} commutativity={commutativity} associativity={associativity}"
    )
    return AxiomReport(
        unit=unit,
        commutativity=commutativity,
        associativity=associativity,
        bivariate_order=T,
        trivariate_order=trivariate_order,
        witness=witness,
    )


def check_log_additivity(fgl: FGLData) -> Optional[Tuple[int, ...]]:
    """First monomial where log(F(x, y)) and log x + log y differ, None if they agree"""
    F = fgl.F
    log = fgl.log.truncate(F.order) if fgl.log.order >= F.order else fgl.log
    lhs = compose_multi(log, F)
    rhs = MultiSeries.lift(log, [0], 2) + MultiSeries.lift(log, [1], 2)
    order = min(lhs.order, rhs.order)
    return lhs.truncate(order).first_difference(rhs.truncate(order))


def graded_piece(series: MultiSeries, u_degree: int) -> MultiSeries:
    """The part of a series whose coefficients have exact u-degree u_degree"""
    return series.map_coefficients(lambda c: c.coefficient_of_u(u_degree).shift_u(u_degree))


def exp_agreement(params: DeformationParams) -> Optional[int]:
    """First degree n <= p^h where Newton reversion and the closed form differ"""
    closed = exp_closed_form(params)
    newton = exp_series(params, closed.order)
    return newton.first_difference(closed)

