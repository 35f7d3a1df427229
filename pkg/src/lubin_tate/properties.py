"""
Checkers for the structural lemmas on Frobenius powers of formal sums
"""

import logging
import random
from typing import Dict, Optional

from lubin_tate.fgl import FGLError, c_pn_coefficients
from lubin_tate.polyring import Coefficient, Poly, RingContext
from lubin_tate.scalars import binom, binom_p_over_p, reduce_mod_p
from lubin_tate.series import XSeries, XYSeries, fgl_sum, substitute

logger = logging.getLogger(__name__)


def binomial_lemma_holds(p: int, i: int) -> bool:
    """binom(p^2 - 1, i) = (-1)^i mod p, for odd p and 0 <= i <= p^2 - 1"""
    if p == 2 or not 0 <= i <= p * p - 1:
        raise FGLError("Binomial identity stated for odd p and 0 <= i < p^2", "OUT_OF_RANGE")
    return reduce_mod_p(binom(p * p - 1, i), p) == (-1) ** i % p


def cpn_lemma_holds(p: int, n: int) -> bool:
    """
    C_{p^n}(x, y) = C_p(x^{p^{n-1}}, y^{p^{n-1}}) mod p, compared coefficientwise

    Returns:
        True when every coefficient of the two polynomials agrees modulo p
    """
    if n < 1:
        raise FGLError(f"C_(p^n) needs n >= 1, got {n}", error_code="OUT_OF_RANGE")
    stride = p ** (n - 1)
    for (i, _), c in c_pn_coefficients(p, n).items():
        expected = binom_p_over_p(p, i // stride) if i % stride == 0 else 0
        if (c - expected) % p:
            logger.debug(f"C_{p}^{n} differs at x^{i}: {c % p} vs {expected % p}")
            return False
    return True


def frobenius_agreement(left: XSeries, right: XSeries, l: int, d: int) -> Optional[int]:
    """
    First x-degree below d where left^{p^l} and right^{p^l} differ, None if none

    Both series must be known modulo x^{ceil(d / p^l)}.
    """
    p = left.ring.p
    known = -(-d // p**l)
    if min(left.order, right.order) < known:
        raise FGLError(
            f"Series known to x^{min(left.order, right.order)}, x^{known} needed",
            error_code="INSUFFICIENT_TRUNCATION",
        )
    lhs = left.truncate(known).frobenius_power(l).truncate(d)
    rhs = right.truncate(known).frobenius_power(l).truncate(d)
    return lhs.first_difference(rhs)


def slayer_hypotheses(A: XSeries, B: XSeries, l: int, d: int) -> bool:
    """a <= b <= a p^{h-1} and (a(p^{h-1} - 1) + b) p^l >= d, a and b the x-adic valuations"""
    q = A.ring.p ** (A.ring.h - 1)
    a, b = A.valuation(), B.valuation()
    return 0 < a <= b <= a * q and (a * (q - 1) + b) * A.ring.p**l >= d


def slayer_holds(F: XYSeries, A: XSeries, B: XSeries, l: int, d: int) -> bool:
    """
    (A +_F B)^{p^l} = (A + B)^{p^l} mod x^d

    F is any truncated law over F_p with the monomial support of the universal
    deformation (F itself or a push-forward g_*F).
    """
    known = -(-d // A.ring.p**l)
    A, B = A.truncate(known), B.truncate(known)
    return frobenius_agreement(substitute(F, A, B), A + B, l, d) is None


def agreement_order(F: XYSeries, A: XSeries, B: XSeries, l: int) -> int:
    """Largest d with (A +_F B)^{p^l} = (A + B)^{p^l} mod x^d, capped by the known order"""
    s = substitute(F, A, B)
    plain = (A + B).truncate(s.order)
    cap = s.order * A.ring.p**l
    first = frobenius_agreement(s, plain, l, cap)
    return cap if first is None else first


def distributor_holds(
    F: XYSeries, A: XSeries, B: XSeries, C: XSeries, l: int, d: int
) -> Optional[bool]:
    """
    (A +_F B +_F C)^{p^l} = ((A + B) +_F C)^{p^l} mod x^d, given the premise

    Returns:
        None when the premise (A +_F B)^{p^l} = (A + B)^{p^l} mod x^d fails,
        otherwise whether the conclusion holds
    """
    known = -(-d // A.ring.p**l)
    A, B, C = A.truncate(known), B.truncate(known), C.truncate(known)
    if frobenius_agreement(substitute(F, A, B), A + B, l, d) is not None:
        return None
    triple = fgl_sum(F, [A, B, C])
    paired = substitute(F, A + B, C)
    return frobenius_agreement(triple, paired, l, d) is None


def random_poly(
    rng: random.Random, ring: RingContext, terms: int = 2, symbols: int = 0
) -> Poly:
    """Random sparse polynomial in u (and g_0..g_{symbols-1}) over the ring's field"""
    raw: Dict[int, Coefficient] = {}
    for _ in range(terms):
        u = rng.randrange(ring.u_order)
        exps = [rng.randrange(ring.top) if i < symbols else 0 for i in range(ring.n_symbols)]
        key = ring.pack(u, exps)
        raw[key] = raw.get(key, 0) + rng.randrange(1, ring.p)
    return Poly.from_raw(ring, raw)


def random_series(
    rng: random.Random,
    ring: RingContext,
    order: int,
    valuation: int,
    density: float = 0.5,
    symbols: int = 0,
) -> XSeries:
    """
    Random x-series over F_p whose exact x-adic valuation is the given one

    The coefficient of x^valuation has a nonzero constant term, so x^valuation
    is the highest power of x dividing the result.
    """
    if not 0 < valuation < order:
        raise FGLError(f"Valuation {valuation} outside (0, {order})", error_code="OUT_OF_RANGE")
    leading = random_poly(rng, ring, 1, symbols)
    leading = Poly.from_raw(
        ring, {**{k: c for k, c in leading.terms.items() if k}, 0: rng.randrange(1, ring.p)}
    )
    coeffs: Dict[int, Poly] = {valuation: leading}
    for n in range(valuation + 1, order):
        if rng.random() < density:
            coeffs[n] = random_poly(rng, ring, rng.randint(1, 2), symbols)
    return XSeries.from_coefficients(ring, coeffs, order)
