"""
Direct solution of the functional equation h_g([p]_{g_*F}(x)) = [p]_F(h_g(x))
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from lubin_tate.fgl import pushforward, universal_F
from lubin_tate.models import (
    CocycleProbe,
    DeformationParams,
    ModuliProbe,
    Violation,
    max_u_accuracy,
)
from lubin_tate.polyring import Poly, RingContext
from lubin_tate.scalars import balanced
from lubin_tate.series import XSeries, XYSeries, fgl_sum, substitute
from lubin_tate.stabilizer import (
    ActionData,
    GroupElement,
    accuracy_schedule,
    act_on_u,
    recursion_th,
    stabilizer_mul,
    stabilizer_ring,
    unfold_action,
)

logger = logging.getLogger(__name__)


class ActionError(Exception):
    """Exception raised when the functional equation cannot be solved or checked"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


def reduced_law(params: DeformationParams, ring: RingContext) -> XYSeries:
    """The universal deformation modulo p, moved into the given ring"""
    return universal_F(params).reduced_F.to_ring(ring)


def tracked_limit(n: int, accuracy: Sequence[int], params: DeformationParams) -> int:
    """
    u-order to which the coefficient of x^n is determined

    The stratum of x^n is the least k with n <= p^{h+k}; x-degrees beyond
    p^{2h-1} are not tracked.
    """
    p, h = params.p, params.h
    for k in range(h):
        if n <= p ** (h + k):
            return accuracy[k]
    return 0


def _at_most(series: XSeries, order: int) -> XSeries:
    return series.truncate(min(order, series.order))


def functional_equation_sides(
    t: Sequence[Poly], w: Poly, params: DeformationParams, F: XYSeries
) -> Tuple[XSeries, XSeries]:
    """
    Both sides of the functional equation modulo x^{p^{2h-1}+1}

    Left: sum_F t_k P^{p^k} with P = w x^{p^{h-1}} +_{g_*F} x^{p^h}.
    Right: u h^{p^{h-1}} +_F h^{p^h} with h = sum_F t_i x^{p^i}.
    p-th powers are taken by Frobenius, so every formal sum has arguments of
    x-adic valuation at least 1 (the inner h) or p^{h-1} (the outer sums).
    """
    p, h = params.p, params.h
    q, top = p ** (h - 1), p**h
    D = p ** (2 * h - 1) + 1
    ring = F.ring
    T = top + 1

    h_g = fgl_sum(F, [XSeries.monomial(ring, t[i], p**i, T) for i in range(h + 1)])
    A = _at_most(h_g.frobenius_power(h - 1), D).scale(Poly.u(ring))
    B = _at_most(h_g.frobenius_power(h), D)
    rhs = substitute(F, A, B)

    F_w = pushforward(F, w)
    P = substitute(F_w, XSeries.monomial(ring, w, q, D), XSeries.monomial(ring, 1, top, D))
    terms = [_at_most(P.frobenius_power(k), D).scale(t[k]) for k in range(h + 1)]
    lhs = fgl_sum(F, terms)

    if lhs.order < D or rhs.order < D:
        raise ActionError(
            f"Sides known to x^{min(lhs.order, rhs.order)}, x^{D} needed; increase xy_order",
            error_code="INSUFFICIENT_TRUNCATION",
        )
    return lhs.truncate(D), rhs.truncate(D)


def tracked_violations(
    series: XSeries, accuracy: Sequence[int], params: DeformationParams
) -> List[Violation]:
    """Nonzero coefficients of a residual below their tracked u-order"""
    p = params.p
    out: List[Violation] = []
    for n in sorted(series.coeffs):
        limit = tracked_limit(n, accuracy, params)
        poly = series.coeffs[n]
        for key in poly.sorted_keys():
            u = key & poly.ring.umask
            if u >= limit:
                continue
            out.append(
                Violation(
                    x_degree=n,
                    u_degree=u,
                    monomial=poly.monomial_label(key, include_u=False),
                    coefficient=str(balanced(int(poly.terms[key]), p)),
                )
            )
    return out


def _check_parameters(g: GroupElement, params: DeformationParams) -> RingContext:
    p, h = params.p, params.h
    if not g.is_symbolic or g.ring is None:
        raise ActionError("The oracle needs a symbolic element", error_code="MIXED_ELEMENTS")
    if (g.ring.p, g.ring.h) != (p, h):
        raise ActionError(
            f"Element over {g.ring} used at {params.label()}", error_code="RING_MISMATCH"
        )
    if params.x_order < p ** (2 * h - 1) + 1:
        raise ActionError(
            f"x_order {params.x_order} below p^(2h-1)+1", error_code="INSUFFICIENT_TRUNCATION"
        )
    if params.u_order > max_u_accuracy(p, h):
        raise ActionError(
            f"u_order {params.u_order} exceeds the determined range {max_u_accuracy(p, h)}",
            error_code="UNDETERMINED",
        )
    return g.ring.with_u_order(params.u_order)


def solve_action(g: GroupElement, params: DeformationParams) -> ActionData:
    """
    Solve for t_0, ..., t_{h-1} and w = g_*(u) one u-degree at a time

    At u-degree d the coefficient of x^{p^{h+k}} in LHS - RHS is [t_k]_d plus
    terms in lower-degree data, and the coefficient of x^{p^{h-1}} is [w]_d plus
    lower terms (g_0 = 1 makes both leading coefficients 1). All other tracked
    coefficients at degree d must already vanish.

    Raises:
        ActionError: If g is not normalized, a tracked coefficient cannot be
            matched, or the requested orders are out of range
    """
    ring = _check_parameters(g, params)
    if g.coeffs[0] != 1:
        raise ActionError("The oracle needs g_0 = 1", error_code="UNNORMALIZED")
    p, h, M = params.p, params.h, params.u_order
    q = p ** (h - 1)
    acc = accuracy_schedule(p, h, M)
    F = reduced_law(params, ring)
    t = [s.truncate_u(1) for s in g.seeds(ring)]
    w = Poly.zero(ring)
    logger.info(f"Solving the functional equation at {params.label()} to u^{M}")

    for d in range(M):
        ring_d = ring.with_u_order(d + 1)
        lhs, rhs = functional_equation_sides(
            [c.to_ring(ring_d) for c in t], w.to_ring(ring_d), params, F.to_ring(ring_d)
        )
        residual_d = lhs - rhs
        solved: Dict[int, int] = {}
        if d > 0:
            for k in range(h):
                if d < acc[k]:
                    solved[p ** (h + k)] = k
            if d < tracked_limit(q, acc, params):
                solved[q] = -1

        for n, c in residual_d.coeffs.items():
            part = c.coefficient_of_u(d).to_ring(ring)
            if part.is_zero():
                continue
            if n in solved:
                k = solved[n]
                if k < 0:
                    w = w - part.shift_u(d)
                else:
                    t[k] = t[k] - part.shift_u(d)
            elif d < tracked_limit(n, acc, params):
                raise ActionError(
                    f"Coefficient of x^{n} u^{d} cannot be matched: {part}",
                    error_code="INCONSISTENT",
                )
        logger.debug(f"Solved u-degree {d}")

    t[h] = g.seeds(ring)[h].truncate_u(acc[h])
    return ActionData(tuple(t), tuple(acc), w, engine="solve")


def _check_seeds(data: ActionData, g: GroupElement) -> None:
    ring = data.ring
    for i, (t, s) in enumerate(zip(data.t, g.seeds(ring))):
        if t.truncate_u(1) != s.truncate_u(1):
            raise ActionError(f"t_{i} is not g_{i} modulo u", error_code="SEED_MISMATCH")


def residual(data: ActionData, g: GroupElement, params: DeformationParams) -> XSeries:
    """
    LHS - RHS of the functional equation with g_*(u) = u t_0^{p^{h-1}-1}

    Each coefficient of x^n is truncated at its tracked u-order, so valid data
    gives the zero series.

    Raises:
        ActionError: If some t_i is not congruent to g_i modulo u
    """
    _check_parameters(g, params)
    _check_seeds(data, g)
    ring = data.ring.with_u_order(params.u_order)
    t = [c.to_ring(ring) for c in data.t]
    w = act_on_u(t[0])
    lhs, rhs = functional_equation_sides(t, w, params, reduced_law(params, ring))
    diff = lhs - rhs
    coeffs = {}
    for n, c in diff.coeffs.items():
        kept = c.truncate_u(tracked_limit(n, data.accuracy, params))
        if not kept.is_zero():
            coeffs[n] = kept
    return XSeries(ring, coeffs, diff.order)


def probe_lemma_moduli(data: ActionData, params: DeformationParams) -> ModuliProbe:
    """
    First u-degrees where the x^{p^{2h-1}} coefficients leave their predicted values

    The left side is compared with t_{h-1}, the right side with
    t_{h-1}^{p^h} + u t_h^{p^{h-1}} - sum_j (binom(p, j)/p) u^{jp^{h-2}+1} ...,
    both modulo u^M. Nothing is asserted.
    """
    p, h, M = params.p, params.h, params.u_order
    q = p ** (h - 1)
    ring = data.ring.with_u_order(M)
    t = [c.to_ring(ring) for c in data.t]
    lhs, rhs = functional_equation_sides(t, act_on_u(t[0]), params, reduced_law(params, ring))
    n = p ** (2 * h - 1)

    left = lhs.coefficient(n) - t[h - 1]
    right = rhs.coefficient(n) - recursion_th(t, params, accuracy=M)
    probe = ModuliProbe(
        p=p,
        h=h,
        u_order=M,
        lhs_first_deviation=None if left.is_zero() else left.u_valuation(),
        rhs_first_deviation=None if right.is_zero() else right.u_valuation(),
        narrow_modulus=q - 1,
        wide_modulus=q + 1,
    )
    logger.info(
        f"x^{n} coefficient: left deviates at u^{probe.lhs_first_deviation}, "
        f"right at u^{probe.rhs_first_deviation}"
    )
    return probe


def cocycle_probe(params: DeformationParams) -> CocycleProbe:
    """
    Compare t_0(g g') with t_0(g) g_*(t_0(g')) and g'_*(t_0(g)) t_0(g')

    g and g' use disjoint symbol sets; both orders are reported, neither asserted.
    """
    h = params.h
    ring = stabilizer_ring(params, n_symbols=2 * (h + 1))
    g = GroupElement.symbolic(ring, offset=0)
    g2 = GroupElement.symbolic(ring, offset=h + 1)
    product = stabilizer_mul(g, g2, length=h + 1)

    t_g = unfold_action(g, params)
    t_g2 = unfold_action(g2, params)
    t_prod = unfold_action(product, params)
    order = t_prod.accuracy[0]

    left = (t_g.t[0] * t_g2.t[0].substitute_u(t_g.w)).truncate_u(order)
    right = (t_g.t[0].substitute_u(t_g2.w) * t_g2.t[0]).truncate_u(order)
    target = t_prod.t[0].truncate_u(order)

    def first_deviation(candidate: Poly) -> Optional[int]:
        diff = candidate - target
        return None if diff.is_zero() else diff.u_valuation()

    probe = CocycleProbe(
        p=params.p,
        h=h,
        u_order=order,
        left_first_deviation=first_deviation(left),
        right_first_deviation=first_deviation(right),
    )
    logger.info(
        f"Cocycle probe: left deviates at u^{probe.left_first_deviation}, "
        f"right at u^{probe.right_first_deviation}"
    )
    return probe
