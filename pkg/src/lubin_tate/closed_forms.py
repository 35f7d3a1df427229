"""
Explicit height-3 formulas for t_0 at odd primes
"""

import logging
from typing import Dict

from lubin_tate.models import CoefficientDomain
from lubin_tate.polyring import Poly, RingContext
from lubin_tate.scalars import binom, binom_p_over_p, check_prime
from lubin_tate.stabilizer import StabilizerError

logger = logging.getLogger(__name__)


def height3_ring(p: int) -> RingContext:
    """F_p[g_0, g_1, g_2, g_3][u]/(u^{2p^2+p+1})"""
    check_prime(p)
    if p == 2:
        raise StabilizerError("Height-3 formulas need an odd prime", error_code="UNSUPPORTED_PRIME")
    return RingContext(p, 3, CoefficientDomain.MOD_P, 2 * p * p + p + 1)


def t0_h3_closed_form(p: int) -> Poly:
    """
    t_0 for g = 1 + g_1 S + g_2 S^2 + g_3 S^3 at height 3, modulo u^{2p^2+p+1}

    Raises:
        StabilizerError: If p = 2
    """
    ring = height3_ring(p)
    pp = p * p

    def term(c: int, u: int, e1: int = 0, e2: int = 0, e3: int = 0) -> Poly:
        return Poly.monomial(ring, c, u, {1: e1, 2: e2, 3: e3})

    t0 = Poly.one(ring) + term(1, 1, e1=pp)
    for i in range(p):
        t0 = t0 - term((-1) ** i, (i + 1) * p, e1=i + 1)
    for i in range(p - 1):
        t0 = t0 - term((-1) ** i, (i + 1) * p + 1, e1=i, e2=pp)
    t0 = t0 + term(1, pp + 1, e2=p) - term(1, pp + 1, e1=p - 1, e2=pp)

    for i in range(p + 1):
        u = pp + (i + 1) * p
        g1_coeff = (-1) ** (p + i) + binom(pp - 2, i)
        g2_coeff = (-1) ** (i + 1) + binom(pp - 2, i - 1)
        t0 = t0 - term(g1_coeff, u, e1=i + p + 1) - term(g2_coeff, u, e1=i, e2=1)

    g3_part = term(1, 0, e3=p) - term(1, 0, e3=pp)
    t0 = t0 - g3_part.shift_u(pp + p + 1)

    for j in range(1, p):
        c_j = (
            term((-1) ** (j + p), 0, e1=p + 1, e2=pp)
            + g3_part.scale((-1) ** j) * Poly.g(ring, 1)
            + term(binom(pp - 2, j), 0, e1=p + 1, e2=pp)
            + term(binom(pp - 2, j - 1), 0, e2=pp + 1)
        )
        tail = sum(binom_p_over_p(p, i) * (-1) ** (j - i) for i in range(1, j + 1))
        bracket = c_j + term(tail, 0, e1=1)
        t0 = t0 - (bracket * Poly.g(ring, 1, j - 1)).shift_u(pp + (j + 1) * p + 1)

    logger.debug(f"Height-3 closed form at p={p} has {len(t0)} terms")
    return t0


def t0_h3_nested_form(p: int) -> Poly:
    """
    The nested height-3 expression for t_0, expanded by ring arithmetic

    1 + u(g_1^{p^2} + u^{p^2} g_2^p)
      - u^p (g_1 + u(g_2^{p^2} + u^{p^2} g_3^p) - u^{p^2}(g_2 + u g_3^{p^2} - sum_j) E)
        (1 + u^p g_1 - u^{p^2}(g_1^p + u^p g_2) E)^{p^2-1}

    with E = (1 + u^{p^2} g_1^p)^{p^2-1} and sum_j = sum (binom(p, j)/p) u^{jp+1} g_1^j.
    """
    ring = height3_ring(p)
    pp = p * p
    u = Poly.u(ring)
    g: Dict[int, Poly] = {i: Poly.g(ring, i) for i in range(1, 4)}

    def up(e: int) -> Poly:
        return Poly.u(ring, e)

    E = (Poly.one(ring) + up(pp) * g[1] ** p) ** (pp - 1)
    binomial_sum = Poly.zero(ring)
    for j in range(1, p):
        binomial_sum = binomial_sum + (up(j * p + 1) * g[1] ** j).scale(binom_p_over_p(p, j))

    inner = g[2] + u * g[3] ** pp - binomial_sum
    first = g[1] + u * (g[2] ** pp + up(pp) * g[3] ** p) - up(pp) * inner * E
    second = (Poly.one(ring) + up(p) * g[1] - up(pp) * (g[1] ** p + up(p) * g[2]) * E) ** (pp - 1)
    return Poly.one(ring) + u * (g[1] ** pp + up(pp) * g[2] ** p) - up(p) * first * second
