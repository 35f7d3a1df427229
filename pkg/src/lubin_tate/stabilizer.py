"""
Stabilizer group elements and the recursive description of their action on the deformation ring
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from lubin_tate.models import CoefficientDomain, DeformationParams
from lubin_tate.polyring import Poly, PolyError, RingContext
from lubin_tate.scalars import ExtensionField, FieldElement, binom_p_over_p, phi

logger = logging.getLogger(__name__)

Coefficient = Union[Poly, FieldElement]

__all__ = [
    "StabilizerError",
    "GroupElement",
    "ActionData",
    "stabilizer_mul",
    "stabilizer_ring",
    "accuracy_schedule",
    "phi",
    "act_on_u",
    "recursion_tk",
    "recursion_th",
    "unfold_action",
]


class StabilizerError(Exception):
    """Exception raised for invalid group elements or a failed unfolding"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


def stabilizer_ring(params: DeformationParams, n_symbols: int = 0) -> RingContext:
    """F_p[g_0, ..., g_h][u]/(u^M) for the given parameters"""
    return RingContext(params.p, params.h, CoefficientDomain.MOD_P, params.u_order, n_symbols)


class GroupElement:
    """
    g = g_0 + g_1 S + ... + g_{n-1} S^{n-1} modulo S^n

    Coefficients are either polynomials in Teichmüller symbols (symbolic) or
    elements of a concrete F_{p^h} (concrete); the two kinds never mix.
    """

    def __init__(
        self,
        coeffs: Sequence[Coefficient],
        ring: Optional[RingContext] = None,
        field_: Optional[ExtensionField] = None,
    ):
        if (ring is None) == (field_ is None):
            raise StabilizerError(
                "A group element needs exactly one of a ring or a field", error_code="BAD_ELEMENT"
            )
        if not coeffs:
            raise StabilizerError("A group element needs g_0", error_code="BAD_ELEMENT")
        self.ring = ring
        self.field = field_
        self.coeffs: Tuple[Coefficient, ...] = tuple(coeffs)

    @property
    def is_symbolic(self) -> bool:
        return self.ring is not None

    @property
    def length(self) -> int:
        return len(self.coeffs)

    @property
    def p(self) -> int:
        if self.ring is not None:
            return self.ring.p
        assert self.field is not None
        return self.field.p

    @property
    def h(self) -> int:
        if self.ring is not None:
            return self.ring.h
        assert self.field is not None
        return self.field.degree

    def same_base(self, other: "GroupElement") -> bool:
        if self.ring is not None or other.ring is not None:
            return self.ring == other.ring
        assert self.field is not None and other.field is not None
        return (self.field.p, self.field.modulus) == (other.field.p, other.field.modulus)

    @classmethod
    def symbolic(
        cls,
        ring: RingContext,
        normalized: bool = True,
        offset: int = 0,
        length: Optional[int] = None,
    ) -> "GroupElement":
        """g_offset + g_{offset+1} S + ..., with g_0 = 1 when normalized"""
        length = ring.h + 1 if length is None else length
        if offset + length > ring.n_symbols:
            raise StabilizerError(
                f"Ring has {ring.n_symbols} symbols, {offset + length} needed",
                error_code="RING_MISMATCH",
            )
        coeffs = [Poly.g(ring, offset + i) for i in range(length)]
        if normalized:
            coeffs[0] = Poly.one(ring)
        return cls(coeffs, ring=ring)

    @classmethod
    def identity(cls, ring: RingContext, length: Optional[int] = None) -> "GroupElement":
        length = ring.h + 1 if length is None else length
        return cls([Poly.one(ring)] + [Poly.zero(ring)] * (length - 1), ring=ring)

    @classmethod
    def concrete(cls, field_: ExtensionField, values: Sequence[FieldElement]) -> "GroupElement":
        """Concrete element with Teichmüller coefficients in F_{p^h}"""
        for i, v in enumerate(values):
            if len(v) != field_.degree or not field_.is_teichmuller(v):
                raise StabilizerError(
                    f"Coefficient g{i} is not an element of F_{field_.order}",
                    error_code="BAD_ELEMENT",
                )
        if not values or not any(values[0]):
            raise StabilizerError("g_0 must be a unit", error_code="BAD_ELEMENT")
        return cls(list(values), field_=field_)

    def seeds(self, ring: Optional[RingContext] = None) -> List[Poly]:
        """Initial values t_i = g_i for i = 0..h, zero past the truncation"""
        if self.ring is None:
            raise StabilizerError(
                "Seeds need a symbolic element", error_code="MIXED_ELEMENTS"
            )
        target = ring or self.ring
        out = []
        for i in range(target.h + 1):
            c = self.coeffs[i] if i < self.length else Poly.zero(self.ring)
            out.append(c.to_ring(target))  # type: ignore[union-attr]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return (
            self.is_symbolic == other.is_symbolic
            and self.same_base(other)
            and self.coeffs == other.coeffs
        )

    __hash__ = None  # type: ignore[assignment]

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            text = str(c) if self.field is None else self.field.format_element(c)  # type: ignore
            parts.append(f"({text})" if i == 0 else f"({text})*S^{i}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"GroupElement({self})"


def stabilizer_mul(
    a: GroupElement, b: GroupElement, length: Optional[int] = None
) -> GroupElement:
    """
    Product in the Teichmüller quotient: coefficient k is sum_{i+j=k} a_i sigma^i(b_j)

    Carries from a sum of Teichmüller coefficients at S^k land at S^{k+h}, and
    the S^0 coefficient a_0 b_0 never carries, so the S^h coefficient is exact.
    An element of length n is known modulo S^n, so the product is truncated
    the same way: the default length is min(h, len(a), len(b)) and at most
    min(h + 1, len(a), len(b)) is allowed. Two length-2 factors therefore give
    no S^2 term; pad a factor with explicit zero coefficients when its higher
    terms vanish.

    Raises:
        StabilizerError: If the elements mix symbolic and concrete coefficients,
            live over different rings, or the length exceeds h + 1
    """
    if a.is_symbolic != b.is_symbolic:
        raise StabilizerError(
            "Cannot multiply a symbolic by a concrete element", error_code="MIXED_ELEMENTS"
        )
    if not a.same_base(b):
        raise StabilizerError("Elements live over different rings", error_code="RING_MISMATCH")
    h = a.h
    if length is None:
        length = min(h, a.length, b.length)
    if not 1 <= length <= min(h + 1, a.length, b.length):
        raise StabilizerError(
            f"Product length {length} exceeds the exact range", error_code="INDEX_OUT_OF_RANGE"
        )

    coeffs: List[Coefficient] = []
    if a.ring is not None:
        for k in range(length):
            total = Poly.zero(a.ring)
            for i in range(k + 1):
                total = total + a.coeffs[i] * b.coeffs[k - i].frobenius(i)  # type: ignore
            coeffs.append(total)
        return GroupElement(coeffs, ring=a.ring)

    F = a.field
    assert F is not None
    for k in range(length):
        acc = F.zero()
        for i in range(k + 1):
            acc = F.add(acc, F.mul(a.coeffs[i], F.frobenius(b.coeffs[k - i], i)))  # type: ignore
        coeffs.append(acc)
    return GroupElement(coeffs, field_=F)


def accuracy_schedule(p: int, h: int, u_order: int) -> List[int]:
    """
    u-adic orders acc_0, ..., acc_h to which the recursions determine t_0, ..., t_h

    acc_k = 2 p^{h-1} + p^{h-2} + ... + p^{k+1} + 1 for k <= h - 2,
    acc_{h-1} = p^{h-1} + 1 and acc_h = 1, each capped by u_order.
    """
    q = p ** (h - 1)
    acc = [2 * q + sum(p**i for i in range(k + 1, h - 1)) + 1 for k in range(h - 1)]
    acc += [q + 1, 1]
    return [min(a, u_order) for a in acc]


def act_on_u(t0: Poly) -> Poly:
    """g_*(u) = u t_0^{p^{h-1} - 1}"""
    q = t0.ring.p ** (t0.ring.h - 1)
    return (t0 ** (q - 1)).shift_u(1)


def _check_index(k: int, low: int, high: int) -> None:
    if not low <= k <= high:
        raise StabilizerError(f"Index {k} outside [{low}, {high}]", error_code="INDEX_OUT_OF_RANGE")


def recursion_tk(
    t: Sequence[Poly], k: int, params: DeformationParams, accuracy: Optional[int] = None
) -> Poly:
    """
    t_k^{p^h} + u t_{k+1}^{p^{h-1}} - u^{p^{k+1}} t_{k+1} t_0^{p^{k+1}(p^{h-1}-1)}

    Args:
        t: Current values t_0, ..., t_h
        k: Index in [0, h - 2]
        params: Deformation parameters
        accuracy: u-order of the result (defaults to acc_k)

    Returns:
        One application of the right-hand side, truncated
    """
    p, h = params.p, params.h
    _check_index(k, 0, h - 2)
    if accuracy is None:
        accuracy = accuracy_schedule(p, h, params.u_order)[k]
    q = p ** (h - 1)
    shift = p ** (k + 1)
    value = t[k].pow_p(h) + t[k + 1].pow_p(h - 1).shift_u(1)
    if shift < accuracy:
        t0_power = (t[0] ** (q - 1)).truncate_u(accuracy - shift).pow_p(k + 1)
        value = value - (t[k + 1] * t0_power).shift_u(shift)
    return value.truncate_u(accuracy)


def recursion_th(
    t: Sequence[Poly], params: DeformationParams, accuracy: Optional[int] = None
) -> Poly:
    """
    t_{h-1}^{p^h} + u t_h^{p^{h-1}}
        - sum_{j=1}^{p-1} (binom(p, j)/p) u^{j p^{h-2} + 1} t_1^{j p^{2h-3}} t_0^{p^{2h-2}(p-j)}

    truncated at u^{p^{h-1}+1} unless another accuracy is given.
    """
    p, h = params.p, params.h
    if accuracy is None:
        accuracy = accuracy_schedule(p, h, params.u_order)[h - 1]
    value = t[h - 1].pow_p(h) + t[h].pow_p(h - 1).shift_u(1)
    for j in range(1, p):
        shift = j * p ** (h - 2) + 1
        if shift >= accuracy:
            break
        room = accuracy - shift
        t1 = t[1].truncate_u(-(-room // p ** (2 * h - 3)))
        t0 = t[0].truncate_u(-(-room // p ** (2 * h - 2)))
        term = (t1**j).pow_p(2 * h - 3) * (t0 ** (p - j)).pow_p(2 * h - 2)
        value = value - term.scale(binom_p_over_p(p, j)).shift_u(shift)
    return value.truncate_u(accuracy)


@dataclass(frozen=True)
class ActionData:
    """t_0, ..., t_h with the u-order to which each is claimed, and g_*(u)"""

    t: Tuple[Poly, ...]
    accuracy: Tuple[int, ...]
    w: Poly
    engine: str = "unfold"

    @property
    def ring(self) -> RingContext:
        return self.t[0].ring

    @property
    def h(self) -> int:
        return len(self.t) - 1

    def first_disagreement(self, other: "ActionData") -> Optional[Tuple[int, int]]:
        """(index, u-degree) of the first difference within both accuracies, None if none"""
        for i, (a, b) in enumerate(zip(self.t, other.t)):
            order = min(self.accuracy[i], other.accuracy[i])
            diff = (a - b.to_ring(a.ring)).truncate_u(order)
            if not diff.is_zero():
                return i, diff.u_valuation()
        return None

    def evaluate(
        self, field_: ExtensionField, values: Sequence[FieldElement]
    ) -> List[Dict[int, FieldElement]]:
        """Concrete values of every t_i, grouped by u-degree"""
        try:
            return [t.evaluate(field_, values) for t in self.t]
        except PolyError as e:
            raise StabilizerError(e.message, error_code="BAD_ELEMENT")

    def to_json(self) -> Dict[str, Any]:
        return {
            "engine": self.engine,
            "ring": self.ring.to_json(),
            "t": [
                {"index": i, "accuracy": acc, "series": t.to_json()}
                for i, (t, acc) in enumerate(zip(self.t, self.accuracy))
            ],
            "w": self.w.to_json(),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ActionData":
        try:
            ring = RingContext.from_json(data["ring"])
            entries = sorted(data["t"], key=lambda e: int(e["index"]))
            t = tuple(Poly.from_json(ring, e["series"]) for e in entries)
            accuracy = tuple(int(e["accuracy"]) for e in entries)
            w = Poly.from_json(ring, data["w"])
            engine = str(data.get("engine", "unfold"))
        except (KeyError, TypeError, ValueError, PolyError) as e:
            raise StabilizerError(f"Malformed action data: {e}", error_code="BAD_ELEMENT")
        return cls(t, accuracy, w, engine)


def unfold_action(g: GroupElement, params: DeformationParams) -> ActionData:
    """
    Iterate the recursions from t_i = g_i until every t_i is u-adically stable

    Each sweep refreshes t_{h-1} first, then t_{h-2}, ..., t_0, always using the
    newest values. At most 1 + ceil(log_p(max accuracy)) sweeps may change
    something; one more must confirm the fixed point.

    Raises:
        StabilizerError: If g is concrete or the iteration does not settle
    """
    if not g.is_symbolic:
        raise StabilizerError(
            "The action is computed for symbolic elements; evaluate afterwards",
            error_code="MIXED_ELEMENTS",
        )
    p, h = params.p, params.h
    assert g.ring is not None
    if (g.ring.p, g.ring.h) != (p, h):
        raise StabilizerError(f"Element over {g.ring} used at {params.label()}", "RING_MISMATCH")
    ring = g.ring.with_u_order(params.u_order)
    acc = accuracy_schedule(p, h, params.u_order)
    t = [s.truncate_u(a) for s, a in zip(g.seeds(ring), acc)]

    longest = max(acc)
    limit = 1
    while p ** (limit - 1) < longest:
        limit += 1
    logger.info(f"Unfolding action at {params.label()} to accuracies {acc}")

    for sweep in range(1, limit + 2):
        changed = False
        new = recursion_th(t, params, acc[h - 1])
        if new != t[h - 1]:
            t[h - 1], changed = new, True
        for k in range(h - 2, -1, -1):
            new = recursion_tk(t, k, params, acc[k])
            if new != t[k]:
                t[k], changed = new, True
        logger.debug(f"Sweep {sweep}: {'changed' if changed else 'stable'}")
        if not changed:
            w = act_on_u(t[0]).truncate_u(min(acc[0] + 1, params.u_order))
            return ActionData(tuple(t), tuple(acc), w, engine="unfold")

    raise StabilizerError(
        f"No fixed point after {limit + 1} sweeps at {params.label()}", error_code="NO_CONVERGENCE"
    )
