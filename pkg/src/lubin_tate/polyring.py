"""
Sparse polynomials in u and Teichmüller symbols g_i over Q or F_p
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from lubin_tate.models import CoefficientDomain
from lubin_tate.scalars import (
    ExtensionField,
    FieldElement,
    ScalarError,
    balanced,
    check_prime,
    format_scalar,
    parse_scalar,
    reduce_mod_p,
)

logger = logging.getLogger(__name__)

Coefficient = Union[int, Fraction]


class PolyError(Exception):
    """Exception raised for invalid polynomial operations"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


def g_reduce(e: int, p: int, h: int) -> int:
    """Reduce an exponent of a Teichmüller symbol using g^{p^h} = g"""
    top = p**h
    if e < top:
        return e
    return (e - 1) % (top - 1) + 1


@dataclass(frozen=True)
class RingContext:
    """
    Ring F[g_0, ..., g_{n-1}][u]/(u^M, g_i^{p^h} - g_i) with F = Q or F_p

    Monomials are packed into one integer: field 0 holds the u exponent and
    field i + 1 the exponent of g_i. Fields are wide enough that the sum of two
    reduced keys never carries, and exponents that reach p^h are brought back
    in one subtraction per field.
    """

    p: int
    h: int
    domain: CoefficientDomain
    u_order: int
    n_symbols: int = 0
    width: int = field(init=False, repr=False, compare=False)
    umask: int = field(init=False, repr=False, compare=False)
    bias: int = field(init=False, repr=False, compare=False)
    top_bits: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.h < 1 or self.u_order < 1:
            raise PolyError(
                f"Invalid ring (h={self.h}, u_order={self.u_order})", error_code="BAD_EXPONENT"
            )
        if self.n_symbols <= 0:
            object.__setattr__(self, "n_symbols", self.h + 1)
        top = self.p**self.h
        width = max(2 * self.u_order, 4 * top).bit_length() + 1
        high = 1 << (width - 1)
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "umask", (1 << width) - 1)
        object.__setattr__(
            self,
            "bias",
            sum((high - top) << (width * (i + 1)) for i in range(self.n_symbols)),
        )
        object.__setattr__(
            self, "top_bits", sum(high << (width * (i + 1)) for i in range(self.n_symbols))
        )

    @property
    def top(self) -> int:
        return self.p**self.h

    @property
    def is_mod_p(self) -> bool:
        return self.domain == CoefficientDomain.MOD_P

    def with_u_order(self, u_order: int) -> "RingContext":
        return RingContext(self.p, self.h, self.domain, u_order, self.n_symbols)

    def with_domain(self, domain: CoefficientDomain) -> "RingContext":
        return RingContext(self.p, self.h, domain, self.u_order, self.n_symbols)

    def with_symbols(self, n_symbols: int) -> "RingContext":
        return RingContext(self.p, self.h, self.domain, self.u_order, n_symbols)

    def pack(self, u: int, exps: Sequence[int]) -> int:
        key = u
        for i, e in enumerate(exps):
            if e:
                key |= e << (self.width * (i + 1))
        return key

    def unpack(self, key: int) -> Tuple[int, List[int]]:
        mask, w = self.umask, self.width
        return key & mask, [(key >> (w * (i + 1))) & mask for i in range(self.n_symbols)]

    def normalize(self, c: Coefficient) -> Coefficient:
        """Bring a scalar into the coefficient domain"""
        if self.is_mod_p:
            if isinstance(c, Fraction):
                return reduce_mod_p(c, self.p)
            return int(c) % self.p
        return Fraction(c)

    def to_json(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "h": self.h,
            "domain": self.domain.value,
            "u_order": self.u_order,
            "n_symbols": self.n_symbols,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "RingContext":
        try:
            return cls(
                int(data["p"]),
                int(data["h"]),
                CoefficientDomain(data["domain"]),
                int(data["u_order"]),
                int(data.get("n_symbols", 0)),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise PolyError(f"Malformed ring context: {e}", error_code="BAD_JSON")


class Poly:
    """Immutable sparse polynomial; terms map packed monomial keys to nonzero coefficients"""

    __slots__ = ("ring", "terms", "_sorted")

    def __init__(self, ring: RingContext, terms: Optional[Dict[int, Coefficient]] = None):
        self.ring = ring
        self.terms: Dict[int, Coefficient] = terms if terms is not None else {}
        self._sorted: Optional[List[Tuple[int, int, Coefficient]]] = None

    @classmethod
    def from_raw(cls, ring: RingContext, raw: Dict[int, Coefficient]) -> "Poly":
        """Build from unnormalized coefficients, dropping zeros"""
        if ring.is_mod_p:
            p = ring.p
            terms: Dict[int, Coefficient] = {}
            for k, c in raw.items():
                c %= p
                if c:
                    terms[k] = c
            return cls(ring, terms)
        return cls(ring, {k: Fraction(c) for k, c in raw.items() if c})

    @classmethod
    def zero(cls, ring: RingContext) -> "Poly":
        return cls(ring)

    @classmethod
    def one(cls, ring: RingContext) -> "Poly":
        return cls.constant(ring, 1)

    @classmethod
    def constant(cls, ring: RingContext, c: Coefficient) -> "Poly":
        return cls.from_raw(ring, {0: ring.normalize(c)})

    @classmethod
    def monomial(
        cls,
        ring: RingContext,
        coeff: Coefficient = 1,
        u: int = 0,
        g: Optional[Mapping[int, int]] = None,
    ) -> "Poly":
        """coeff * u^u * prod g_i^{e_i}, with exponents reduced and u truncated"""
        if u >= ring.u_order:
            return cls(ring)
        exps = [0] * ring.n_symbols
        for i, e in (g or {}).items():
            if not 0 <= i < ring.n_symbols or e < 0:
                raise PolyError(f"Bad symbol g{i}^{e}", error_code="BAD_EXPONENT")
            exps[i] = g_reduce(e, ring.p, ring.h) if e else 0
        return cls.from_raw(ring, {ring.pack(u, exps): ring.normalize(coeff)})

    @classmethod
    def u(cls, ring: RingContext, exponent: int = 1) -> "Poly":
        return cls.monomial(ring, 1, u=exponent)

    @classmethod
    def g(cls, ring: RingContext, index: int, exponent: int = 1) -> "Poly":
        return cls.monomial(ring, 1, g={index: exponent})

    # Basic queries

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def constant_term(self) -> Coefficient:
        return self.terms.get(0, 0)

    def is_constant(self) -> bool:
        return all(k == 0 for k in self.terms)

    def u_valuation(self) -> int:
        """Smallest u exponent; the ring's u_order for the zero polynomial"""
        umask = self.ring.umask
        return min((k & umask for k in self.terms), default=self.ring.u_order)

    def u_degree(self) -> int:
        umask = self.ring.umask
        return max((k & umask for k in self.terms), default=-1)

    def _items(self) -> List[Tuple[int, int, Coefficient]]:
        if self._sorted is None:
            umask = self.ring.umask
            self._sorted = sorted(
                ((k, k & umask, c) for k, c in self.terms.items()), key=lambda t: t[1]
            )
        return self._sorted

    # Arithmetic

    def _coerce(self, other: Any) -> "Poly":
        if isinstance(other, Poly):
            if other.ring is not self.ring and other.ring != self.ring:
                raise PolyError(
                    f"Ring mismatch: {self.ring} vs {other.ring}", error_code="RING_MISMATCH"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.ring, other)
        raise PolyError(f"Cannot combine Poly with {type(other).__name__}", "RING_MISMATCH")

    def __add__(self, other: Any) -> "Poly":
        other = self._coerce(other)
        if not other.terms:
            return self
        terms = dict(self.terms)
        if self.ring.is_mod_p:
            p = self.ring.p
            for k, c in other.terms.items():
                v = (terms.get(k, 0) + c) % p
                if v:
                    terms[k] = v
                else:
                    terms.pop(k, None)
        else:
            for k, c in other.terms.items():
                v = terms.get(k, 0) + c
                if v:
                    terms[k] = v
                else:
                    terms.pop(k, None)
        return Poly(self.ring, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        if self.ring.is_mod_p:
            p = self.ring.p
            return Poly(self.ring, {k: p - c for k, c in self.terms.items()})
        return Poly(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: Any) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "Poly":
        return self._coerce(other) + (-self)

    def scale(self, c: Coefficient) -> "Poly":
        c = self.ring.normalize(c)
        if not c:
            return Poly(self.ring)
        return Poly.from_raw(self.ring, {k: v * c for k, v in self.terms.items()})

    def mul_into(self, other: "Poly", acc: Dict[int, Coefficient]) -> None:
        """Add the unnormalized product self * other into acc"""
        ring = self.ring
        limit = ring.u_order
        bias, top_bits, shift, pm1 = ring.bias, ring.top_bits, ring.width - 1, ring.top - 1
        b_items = other._items()
        get = acc.get
        for ka, ua, ca in self._items():
            room = limit - ua
            if room <= 0:
                break
            for kb, ub, cb in b_items:
                if ub >= room:
                    break
                k = ka + kb
                flags = (k + bias) & top_bits
                if flags:
                    k -= (flags >> shift) * pm1
                acc[k] = get(k, 0) + ca * cb

    def __mul__(self, other: Any) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Poly(self.ring)
        acc: Dict[int, Coefficient] = {}
        self.mul_into(other, acc)
        return Poly.from_raw(self.ring, acc)

    __rmul__ = __mul__

    def _binary_pow(self, n: int) -> "Poly":
        result = Poly.one(self.ring)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise PolyError(f"Negative exponent {n}", error_code="BAD_EXPONENT")
        if n == 0:
            return Poly.one(self.ring)
        if n == 1 or not self.terms:
            return self
        if not self.ring.is_mod_p:
            return self._binary_pow(n)
        # a^n = prod_i (a^{d_i})^{p^i} for the base-p digits d_i of n
        p = self.ring.p
        result = Poly.one(self.ring)
        k = 0
        while n and result.terms:
            n, d = divmod(n, p)
            if d:
                result = result * self._binary_pow(d).pow_p(k)
            k += 1
        return result

    def _map_exponents(self, u_factor: int, g_factor: int) -> "Poly":
        ring = self.ring
        p, h, limit = ring.p, ring.h, ring.u_order
        acc: Dict[int, Coefficient] = {}
        for key, c in self.terms.items():
            u, exps = ring.unpack(key)
            u *= u_factor
            if u >= limit:
                continue
            new = ring.pack(u, [g_reduce(e * g_factor, p, h) if e else 0 for e in exps])
            acc[new] = acc.get(new, 0) + c
        return Poly.from_raw(ring, acc)

    def frobenius(self, k: int = 1) -> "Poly":
        """sigma^k: every g exponent times p^k, u and F_p coefficients unchanged"""
        if not self.ring.is_mod_p:
            raise PolyError(
                "Frobenius is only modeled over F_p", error_code="RATIONAL_FROBENIUS"
            )
        if k % self.ring.h == 0:
            return self
        return self._map_exponents(1, self.ring.p ** (k % self.ring.h))

    def pow_p(self, k: int = 1) -> "Poly":
        """Absolute Frobenius a^{p^k} over F_p: u and g exponents times p^k"""
        if not self.ring.is_mod_p:
            raise PolyError(
                "p-th powers by exponent scaling need F_p coefficients",
                error_code="RATIONAL_FROBENIUS",
            )
        if k == 0:
            return self
        factor = self.ring.p**k
        return self._map_exponents(factor, factor)

    def inverse(self) -> "Poly":
        """Inverse of c + (terms divisible by u) with c a nonzero scalar"""
        c = self.constant_term()
        rest = self - Poly.constant(self.ring, c) if c else self
        if not c or rest.u_valuation() < 1:
            raise PolyError(f"{self} is not invertible", error_code="NOT_INVERTIBLE")
        c_inv: Coefficient = (
            pow(int(c), -1, self.ring.p) if self.ring.is_mod_p else 1 / Fraction(c)
        )
        step = -(rest.scale(c_inv))
        result = Poly.one(self.ring)
        power = Poly.one(self.ring)
        while True:
            power = power * step
            if power.is_zero():
                break
            result = result + power
        return result.scale(c_inv)

    # Truncation and coefficient access

    def truncate_u(self, order: int) -> "Poly":
        umask = self.ring.umask
        return Poly(self.ring, {k: c for k, c in self.terms.items() if k & umask < order})

    def coefficient_of_u(self, d: int) -> "Poly":
        """The u^d coefficient as a u-free polynomial"""
        umask = self.ring.umask
        return Poly(self.ring, {k - d: c for k, c in self.terms.items() if k & umask == d})

    def u_coefficients(self) -> Dict[int, "Poly"]:
        umask = self.ring.umask
        grouped: Dict[int, Dict[int, Coefficient]] = {}
        for k, c in self.terms.items():
            d = k & umask
            grouped.setdefault(d, {})[k - d] = c
        return {d: Poly(self.ring, t) for d, t in sorted(grouped.items())}

    def shift_u(self, d: int) -> "Poly":
        """Multiply by u^d"""
        limit, umask = self.ring.u_order, self.ring.umask
        return Poly(self.ring, {k + d: c for k, c in self.terms.items() if (k & umask) + d < limit})

    def to_ring(self, ring: RingContext) -> "Poly":
        """Re-express in another ring with the same (p, h); Q -> F_p reduces coefficients"""
        if ring == self.ring:
            return self
        src = self.ring
        if (ring.p, ring.h) != (src.p, src.h) or (
            src.is_mod_p and not ring.is_mod_p
        ):
            raise PolyError(f"Cannot move {src} into {ring}", error_code="RING_MISMATCH")
        acc: Dict[int, Coefficient] = {}
        for key, c in self.terms.items():
            u, exps = src.unpack(key)
            if u >= ring.u_order:
                continue
            if any(exps[ring.n_symbols :]):
                raise PolyError(
                    f"Symbol index exceeds {ring.n_symbols} symbols", error_code="RING_MISMATCH"
                )
            exps = exps[: ring.n_symbols] + [0] * (ring.n_symbols - len(exps))
            acc[ring.pack(u, exps)] = ring.normalize(c)
        return Poly.from_raw(ring, acc)

    def reduce_mod_p(self, ring: Optional[RingContext] = None) -> "Poly":
        target = ring or self.ring.with_domain(CoefficientDomain.MOD_P)
        return self.to_ring(target)

    # Substitution

    def substitute_u(self, w: "Poly") -> "Poly":
        """Replace u by w"""
        w = self._coerce(w)
        result = Poly(self.ring)
        power = Poly.one(self.ring)
        current = 0
        for d, coeff in self.u_coefficients().items():
            while current < d:
                power = power * w
                current += 1
            if power.is_zero():
                break
            result = result + coeff * power
        return result

    def substitute_g(self, mapping: Mapping[int, "Poly"]) -> "Poly":
        """Replace the symbols g_i named in mapping; the others stay"""
        ring = self.ring
        cache: Dict[Tuple[int, int], Poly] = {}
        result = Poly(ring)
        for key, c in self.terms.items():
            u, exps = ring.unpack(key)
            kept = [0 if i in mapping else e for i, e in enumerate(exps)]
            term = Poly.from_raw(ring, {ring.pack(u, kept): c})
            for i, e in enumerate(exps):
                if e and i in mapping:
                    if (i, e) not in cache:
                        cache[(i, e)] = self._coerce(mapping[i]) ** e
                    term = term * cache[(i, e)]
            result = result + term
        return result

    def rename_symbols(self, mapping: Mapping[int, int], ring: RingContext) -> "Poly":
        """Move g_i to g_{mapping[i]} inside a ring with at least as many symbols"""
        src = self.ring
        acc: Dict[int, Coefficient] = {}
        for key, c in self.terms.items():
            u, exps = src.unpack(key)
            if u >= ring.u_order:
                continue
            new_exps = [0] * ring.n_symbols
            for i, e in enumerate(exps):
                if e:
                    j = mapping.get(i, i)
                    if not 0 <= j < ring.n_symbols:
                        raise PolyError(f"No symbol g{j} in {ring}", error_code="RING_MISMATCH")
                    new_exps[j] = g_reduce(new_exps[j] + e, ring.p, ring.h)
            k = ring.pack(u, new_exps)
            acc[k] = acc.get(k, 0) + ring.normalize(c)
        return Poly.from_raw(ring, acc)

    def evaluate(
        self, field_: ExtensionField, values: Sequence[FieldElement]
    ) -> Dict[int, FieldElement]:
        """Substitute concrete F_{p^h} values for g_0.. and group by u-degree"""
        ring = self.ring
        out: Dict[int, FieldElement] = {}
        for key, c in self.terms.items():
            u, exps = ring.unpack(key)
            value = field_.scalar(c if ring.is_mod_p else reduce_mod_p(c, ring.p))
            for i, e in enumerate(exps):
                if e:
                    if i >= len(values):
                        raise PolyError(f"No value supplied for g{i}", error_code="RING_MISMATCH")
                    value = field_.mul(value, field_.pow(values[i], e))
            out[u] = field_.add(out.get(u, field_.zero()), value)
        return {d: v for d, v in sorted(out.items()) if any(v)}

    # Presentation

    def exponent_tuple(self, key: int) -> Tuple[int, ...]:
        u, exps = self.ring.unpack(key)
        return (u, *exps)

    def monomial_label(self, key: int, include_u: bool = True) -> List[Tuple[str, int]]:
        u, exps = self.ring.unpack(key)
        label = [("u", u)] if include_u and u else []
        label.extend((f"g{i}", e) for i, e in enumerate(exps) if e)
        return label

    def sorted_keys(self) -> List[int]:
        return sorted(self.terms, key=self.exponent_tuple)

    def format_coefficient(self, c: Coefficient) -> str:
        return str(int(c)) if self.ring.is_mod_p else format_scalar(c)

    def to_json(self) -> List[Dict[str, Any]]:
        return [
            {
                "monomial": [[v, e] for v, e in self.monomial_label(k)],
                "coeff": self.format_coefficient(self.terms[k]),
            }
            for k in self.sorted_keys()
        ]

    @classmethod
    def from_json(cls, ring: RingContext, data: Iterable[Mapping[str, Any]]) -> "Poly":
        acc: Dict[int, Coefficient] = {}
        try:
            for entry in data:
                u = 0
                exps = [0] * ring.n_symbols
                for var, e in entry["monomial"]:
                    if var == "u":
                        u = int(e)
                    elif isinstance(var, str) and var.startswith("g"):
                        exps[int(var[1:])] = int(e)
                    else:
                        raise ValueError(f"unknown variable {var!r}")
                if u >= ring.u_order:
                    continue
                key = ring.pack(u, [g_reduce(e, ring.p, ring.h) if e else 0 for e in exps])
                acc[key] = acc.get(key, 0) + ring.normalize(parse_scalar(str(entry["coeff"])))
        except (KeyError, ValueError, IndexError, TypeError, ScalarError) as e:
            raise PolyError(f"Malformed polynomial JSON: {e}", error_code="BAD_JSON")
        return cls.from_raw(ring, acc)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces: List[str] = []
        for key in self.sorted_keys():
            c = self.terms[key]
            if self.ring.is_mod_p:
                value: Coefficient = balanced(int(c), self.ring.p)
            else:
                value = c
            sign = "-" if value < 0 else "+"
            magnitude = -value if value < 0 else value
            mono = "*".join(
                v if e == 1 else f"{v}^{e}" for v, e in self.monomial_label(key)
            )
            if not mono:
                body = format_scalar(magnitude)
            elif magnitude == 1:
                body = mono
            else:
                body = f"{format_scalar(magnitude)}*{mono}"
            pieces.append(f"{sign} {body}")
        text = " ".join(pieces)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __repr__(self) -> str:
        return f"Poly({self})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.constant(self.ring, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]
