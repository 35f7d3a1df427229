"""
Truncated power series in x (and in several variables) with polynomial coefficients
"""

import logging
from fractions import Fraction
from typing import Any, Callable, Dict, Generic, List, Mapping, Optional, Sequence, Tuple, TypeVar

from lubin_tate.polyring import Coefficient, Poly, PolyError, RingContext
from lubin_tate.scalars import binom

logger = logging.getLogger(__name__)

K = TypeVar("K")
S = TypeVar("S", bound="TruncatedSeries[Any]")


class SeriesError(Exception):
    """Exception raised for invalid series operations"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class TruncatedSeries(Generic[K]):
    """
    Sparse series known modulo all monomials of degree >= order

    Subclasses fix the key type (an int for x-series, an exponent tuple for
    several variables) and how keys add and scale.
    """

    __slots__ = ("ring", "coeffs", "order")

    def __init__(self, ring: RingContext, coeffs: Dict[K, Poly], order: int):
        self.ring = ring
        self.coeffs = coeffs
        self.order = order

    # Key arithmetic, specialized below

    def _deg(self, key: K) -> int:
        raise NotImplementedError

    def _add_keys(self, a: K, b: K) -> K:
        raise NotImplementedError

    def _scale_key(self, key: K, factor: int) -> K:
        raise NotImplementedError

    def _unit_key(self) -> K:
        raise NotImplementedError

    def _new(self: S, coeffs: Dict[K, Poly], order: int) -> S:
        raise NotImplementedError

    def _same_shape(self, other: "TruncatedSeries[Any]") -> bool:
        return type(other) is type(self)

    # Construction helpers

    def zero_like(self: S, order: Optional[int] = None) -> S:
        return self._new({}, self.order if order is None else order)

    def one_like(self: S, order: Optional[int] = None) -> S:
        order = self.order if order is None else order
        coeffs = {self._unit_key(): Poly.one(self.ring)} if order > 0 else {}
        return self._new(coeffs, order)

    def _with_order(self: S, order: int) -> S:
        """Same coefficients under another truncation order (no validity check)"""
        return self._new({k: c for k, c in self.coeffs.items() if self._deg(k) < order}, order)

    # Queries

    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self) -> int:
        """Least degree of a nonzero term; the order for the zero series"""
        return min((self._deg(k) for k in self.coeffs), default=self.order)

    def coefficient(self, key: K) -> Poly:
        return self.coeffs.get(key, Poly.zero(self.ring))

    def _check(self, other: "TruncatedSeries[Any]") -> None:
        if not self._same_shape(other) or other.ring != self.ring or other.order != self.order:
            raise SeriesError(
                f"Context mismatch: {type(self).__name__}(order={self.order}) vs "
                f"{type(other).__name__}(order={other.order})",
                error_code="CONTEXT_MISMATCH",
            )

    def _sorted_items(self) -> List[Tuple[K, int, Poly]]:
        return sorted(((k, self._deg(k), c) for k, c in self.coeffs.items()), key=lambda t: t[1])

    # Arithmetic

    def __add__(self: S, other: S) -> S:
        self._check(other)
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            total = coeffs[k] + c if k in coeffs else c
            if total.is_zero():
                coeffs.pop(k, None)
            else:
                coeffs[k] = total
        return self._new(coeffs, self.order)

    def __neg__(self: S) -> S:
        return self._new({k: -c for k, c in self.coeffs.items()}, self.order)

    def __sub__(self: S, other: S) -> S:
        return self + (-other)

    def scale(self: S, c: Any) -> S:
        """Multiply every coefficient by a polynomial or scalar"""
        coeffs = {}
        for k, v in self.coeffs.items():
            w = v * c
            if not w.is_zero():
                coeffs[k] = w
        return self._new(coeffs, self.order)

    def __mul__(self: S, other: Any) -> S:
        if isinstance(other, (Poly, int, Fraction)):
            return self.scale(other)
        self._check(other)
        limit = self.order
        acc: Dict[K, Dict[int, Coefficient]] = {}
        b_items = other._sorted_items()
        for ka, da, a in self._sorted_items():
            room = limit - da
            if room <= 0:
                break
            for kb, db, b in b_items:
                if db >= room:
                    break
                a.mul_into(b, acc.setdefault(self._add_keys(ka, kb), {}))
        coeffs = {}
        for k, raw in acc.items():
            c = Poly.from_raw(self.ring, raw)
            if not c.is_zero():
                coeffs[k] = c
        return self._new(coeffs, limit)

    def _binary_pow(self: S, n: int) -> S:
        result = self.one_like()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __pow__(self: S, n: int) -> S:
        if n < 0:
            raise SeriesError(f"Negative exponent {n}", error_code="NOT_INVERTIBLE")
        if n == 0:
            return self.one_like()
        if n == 1:
            return self
        if not self.ring.is_mod_p:
            return self._binary_pow(n)
        p = self.ring.p
        result = self.one_like()
        k = 0
        while n and not result.is_zero():
            n, d = divmod(n, p)
            if d:
                piece = self._binary_pow(d)
                if k:
                    piece = piece.frobenius_power(k).truncate(self.order)
                result = result * piece
            k += 1
        return result

    def frobenius_power(self: S, k: int) -> S:
        """s^{p^k} over F_p: coefficients raised by exponent scaling, degrees times p^k"""
        if not self.ring.is_mod_p:
            raise SeriesError(
                "Frobenius powers need F_p coefficients", error_code="RATIONAL_FROBENIUS"
            )
        if k == 0:
            return self
        factor = self.ring.p**k
        coeffs = {}
        for key, c in self.coeffs.items():
            v = c.pow_p(k)
            if not v.is_zero():
                coeffs[self._scale_key(key, factor)] = v
        return self._new(coeffs, self.order * factor)

    def truncate(self: S, order: int) -> S:
        if order > self.order:
            raise SeriesError(
                f"Cannot extend a series known to order {self.order} to {order}",
                error_code="CANNOT_EXTEND",
            )
        return self._with_order(order)

    def map_coefficients(self: S, fn: Callable[[Poly], Poly]) -> S:
        coeffs = {}
        for k, c in self.coeffs.items():
            v = fn(c)
            if not v.is_zero():
                coeffs[k] = v
        return self._new(coeffs, self.order)

    def to_ring(self: S, ring: RingContext) -> S:
        coeffs = {}
        for k, c in self.coeffs.items():
            v = c.to_ring(ring)
            if not v.is_zero():
                coeffs[k] = v
        out = self._new(coeffs, self.order)
        out.ring = ring
        return out

    def truncate_u(self: S, order: int) -> S:
        return self.map_coefficients(lambda c: c.truncate_u(order))

    def first_difference(self, other: "TruncatedSeries[Any]") -> Optional[K]:
        """Lowest-degree key where the two series differ, None when equal"""
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        diffs = [k for k in keys if self.coefficient(k) != other.coefficient(k)]
        return min(diffs, key=lambda k: (self._deg(k), k)) if diffs else None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries) or not self._same_shape(other):
            return NotImplemented
        return (
            self.ring == other.ring and self.order == other.order and self.coeffs == other.coeffs
        )

    __hash__ = None  # type: ignore[assignment]

    def _key_json(self, key: K) -> Any:
        return key

    def to_json(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "terms": [
                {"deg": self._key_json(k), "coeff": c.to_json()}
                for k, _, c in sorted(self._sorted_items(), key=lambda t: (t[1], t[0]))
            ],
        }


class XSeries(TruncatedSeries[int]):
    """Univariate series sum_n c_n x^n modulo x^order"""

    __slots__ = ()

    def _deg(self, key: int) -> int:
        return key

    def _add_keys(self, a: int, b: int) -> int:
        return a + b

    def _scale_key(self, key: int, factor: int) -> int:
        return key * factor

    def _unit_key(self) -> int:
        return 0

    def _new(self, coeffs: Dict[int, Poly], order: int) -> "XSeries":
        return XSeries(self.ring, coeffs, order)

    @classmethod
    def from_coefficients(
        cls, ring: RingContext, coeffs: Mapping[int, Any], order: int
    ) -> "XSeries":
        """Build from degree -> Poly or scalar, dropping zeros and degrees >= order"""
        out: Dict[int, Poly] = {}
        for n, c in coeffs.items():
            if n < 0:
                raise SeriesError(f"Negative degree {n}", error_code="CONTEXT_MISMATCH")
            poly = c if isinstance(c, Poly) else Poly.constant(ring, c)
            if n < order and not poly.is_zero():
                out[n] = poly
        return cls(ring, out, order)

    @classmethod
    def zero(cls, ring: RingContext, order: int) -> "XSeries":
        return cls(ring, {}, order)

    @classmethod
    def monomial(cls, ring: RingContext, coeff: Any, degree: int, order: int) -> "XSeries":
        return cls.from_coefficients(ring, {degree: coeff}, order)

    @classmethod
    def x(cls, ring: RingContext, order: int) -> "XSeries":
        return cls.monomial(ring, 1, 1, order)

    def derivative(self) -> "XSeries":
        coeffs = {}
        for n, c in self.coeffs.items():
            if n:
                v = c.scale(n)
                if not v.is_zero():
                    coeffs[n - 1] = v
        return XSeries(self.ring, coeffs, max(self.order - 1, 0))

    def inverse(self) -> "XSeries":
        """Multiplicative inverse by Newton iteration"""
        try:
            c0_inv = self.coefficient(0).inverse()
        except PolyError as e:
            raise SeriesError(f"Series is not invertible: {e.message}", error_code="NOT_INVERTIBLE")
        y = XSeries.monomial(self.ring, c0_inv, 0, 1)
        prec = 1
        while prec < self.order:
            prec = min(2 * prec, self.order)
            a = self.truncate(prec)
            y = y._with_order(prec)
            y = y * (XSeries.monomial(self.ring, 2, 0, prec) - a * y)
        return y._with_order(self.order)

    def compose(self, g: "XSeries") -> "XSeries":
        return compose(self, g)

    def revert(self) -> "XSeries":
        return revert(self)

    @classmethod
    def from_json(cls, ring: RingContext, data: Mapping[str, Any]) -> "XSeries":
        try:
            order = int(data["order"])
            coeffs = {int(t["deg"]): Poly.from_json(ring, t["coeff"]) for t in data["terms"]}
        except (KeyError, TypeError, ValueError) as e:
            raise SeriesError(f"Malformed series JSON: {e}", error_code="BAD_JSON")
        return cls.from_coefficients(ring, coeffs, order)

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*x^{n}" for n, c in sorted(self.coeffs.items()))
        return f"XSeries({body or '0'} + O(x^{self.order}))"


class MultiSeries(TruncatedSeries[Tuple[int, ...]]):
    """Series in nvars variables modulo all monomials of total degree >= order"""

    __slots__ = ("nvars",)

    def __init__(
        self, ring: RingContext, coeffs: Dict[Tuple[int, ...], Poly], order: int, nvars: int
    ):
        super().__init__(ring, coeffs, order)
        self.nvars = nvars

    def _deg(self, key: Tuple[int, ...]) -> int:
        return sum(key)

    def _add_keys(self, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(x + y for x, y in zip(a, b))

    def _scale_key(self, key: Tuple[int, ...], factor: int) -> Tuple[int, ...]:
        return tuple(e * factor for e in key)

    def _unit_key(self) -> Tuple[int, ...]:
        return (0,) * self.nvars

    def _same_shape(self, other: TruncatedSeries[Any]) -> bool:
        return isinstance(other, MultiSeries) and other.nvars == self.nvars

    def _new(self, coeffs: Dict[Tuple[int, ...], Poly], order: int) -> "MultiSeries":
        return MultiSeries(self.ring, coeffs, order, self.nvars)

    @classmethod
    def from_coefficients(
        cls,
        ring: RingContext,
        coeffs: Mapping[Tuple[int, ...], Any],
        order: int,
        nvars: int,
    ) -> "MultiSeries":
        out: Dict[Tuple[int, ...], Poly] = {}
        for key, c in coeffs.items():
            if len(key) != nvars:
                raise SeriesError(f"Key {key} has wrong arity", error_code="CONTEXT_MISMATCH")
            poly = c if isinstance(c, Poly) else Poly.constant(ring, c)
            if sum(key) < order and not poly.is_zero():
                out[tuple(key)] = poly
        return cls(ring, out, order, nvars)

    @classmethod
    def variable(cls, ring: RingContext, index: int, nvars: int, order: int) -> "MultiSeries":
        key = tuple(1 if i == index else 0 for i in range(nvars))
        return cls.from_coefficients(ring, {key: 1}, order, nvars)

    @classmethod
    def lift(
        cls, series: TruncatedSeries[Any], positions: Sequence[int], nvars: int
    ) -> "MultiSeries":
        """Embed an x-series or multivariate series into nvars variables"""
        coeffs: Dict[Tuple[int, ...], Poly] = {}
        for key, c in series.coeffs.items():
            parts = (key,) if isinstance(key, int) else key
            new = [0] * nvars
            for pos, e in zip(positions, parts):
                new[pos] = e
            coeffs[tuple(new)] = c
        return cls(series.ring, coeffs, series.order, nvars)

    def _key_json(self, key: Tuple[int, ...]) -> Any:
        return list(key)

    @classmethod
    def from_json(cls, ring: RingContext, data: Mapping[str, Any]) -> "MultiSeries":
        try:
            order = int(data["order"])
            coeffs = {
                tuple(int(e) for e in t["deg"]): Poly.from_json(ring, t["coeff"])
                for t in data["terms"]
            }
            nvars = int(data.get("nvars", len(next(iter(coeffs), (0, 0)))))
        except (KeyError, TypeError, ValueError) as e:
            raise SeriesError(f"Malformed series JSON: {e}", error_code="BAD_JSON")
        return cls.from_coefficients(ring, coeffs, order, nvars)

    def to_json(self) -> Dict[str, Any]:
        data = super().to_json()
        data["nvars"] = self.nvars
        return data


class XYSeries(MultiSeries):
    """Bivariate series modulo (x, y)^order"""

    __slots__ = ()

    def __init__(self, ring: RingContext, coeffs: Dict[Tuple[int, ...], Poly], order: int):
        super().__init__(ring, coeffs, order, 2)

    def _new(self, coeffs: Dict[Tuple[int, ...], Poly], order: int) -> "XYSeries":
        return XYSeries(self.ring, coeffs, order)

    @classmethod
    def from_terms(
        cls, ring: RingContext, coeffs: Mapping[Tuple[int, int], Any], order: int
    ) -> "XYSeries":
        base = MultiSeries.from_coefficients(ring, coeffs, order, 2)
        return cls(ring, base.coeffs, order)

    @classmethod
    def from_multi(cls, series: MultiSeries) -> "XYSeries":
        if series.nvars != 2:
            raise SeriesError("Not a bivariate series", error_code="CONTEXT_MISMATCH")
        return cls(series.ring, dict(series.coeffs), series.order)

    def swapped(self) -> "XYSeries":
        return XYSeries(self.ring, {(j, i): c for (i, j), c in self.coeffs.items()}, self.order)

    def restrict_y0(self) -> XSeries:
        """F(x, 0)"""
        return XSeries(self.ring, {i: c for (i, j), c in self.coeffs.items() if j == 0}, self.order)


def _power_table(
    base: TruncatedSeries[Any], exponents: Sequence[int]
) -> Dict[int, TruncatedSeries[Any]]:
    """Memoized powers of a series; multiples of p come from Frobenius over F_p"""
    table: Dict[int, TruncatedSeries[Any]] = {0: base.one_like(), 1: base}
    ring = base.ring

    def power(n: int) -> TruncatedSeries[Any]:
        if n in table:
            return table[n]
        if ring.is_mod_p and n % ring.p == 0:
            value = power(n // ring.p).frobenius_power(1).truncate(base.order)
        else:
            value = power(n - 1) * base
        table[n] = value
        return value

    for n in sorted(exponents):
        power(n)
    return table


def substitute(F: MultiSeries, A: S, B: S) -> S:
    """
    F(A, B) for a bivariate F and two series of the same kind

    The result is known modulo degree min(ord A, ord B, order(F) * v), where v is
    the least valuation among the nonzero arguments.
    """
    if F.nvars != 2:
        raise SeriesError("substitute needs a bivariate F", error_code="CONTEXT_MISMATCH")
    if not A._same_shape(B) or A.ring != B.ring or F.ring != A.ring:
        raise SeriesError("Arguments live in different contexts", error_code="CONTEXT_MISMATCH")
    if A.coefficient(A._unit_key()) or B.coefficient(B._unit_key()):
        raise SeriesError("Arguments must have zero constant term", error_code="NONZERO_CONSTANT")

    nonzero = [s.valuation() for s in (A, B) if not s.is_zero()]
    order = min(A.order, B.order)
    if nonzero:
        order = min(order, F.order * min(nonzero))
    A = A.truncate(order)
    B = B.truncate(order)

    by_i: Dict[int, Dict[int, Poly]] = {}
    for (i, j), c in F.coeffs.items():
        by_i.setdefault(i, {})[j] = c
    j_needed = {j for row in by_i.values() for j in row}
    pow_a = _power_table(A, list(by_i))
    pow_b = _power_table(B, list(j_needed))

    result = A.zero_like()
    for i in sorted(by_i):
        if pow_a[i].is_zero():
            continue
        inner = A.zero_like()
        for j, c in by_i[i].items():
            if not pow_b[j].is_zero():
                inner = inner + pow_b[j].scale(c)
        if not inner.is_zero():
            result = result + pow_a[i] * inner
    return result


def fgl_sum(F: MultiSeries, terms: Sequence[S]) -> S:
    """Formal sum t_1 +_F t_2 +_F ... as a left fold of bivariate substitution"""
    if not terms:
        raise SeriesError("Formal sum of an empty list", error_code="EMPTY_SUM")
    acc = terms[0]
    for term in terms[1:]:
        acc = substitute(F, acc, term)
    return acc


def _horner(f: XSeries, g: S, order: int) -> S:
    g = g._with_order(order)
    degrees = sorted(f.coeffs)
    if not degrees:
        return g.zero_like()
    gaps = {b - a for a, b in zip(degrees, degrees[1:])} | {degrees[0]}
    powers = {gap: g**gap for gap in gaps}
    one = g.one_like()
    result = one.scale(f.coeffs[degrees[-1]])
    for lower, upper in reversed(list(zip(degrees, degrees[1:]))):
        result = result * powers[upper - lower] + one.scale(f.coeffs[lower])
    return result * powers[degrees[0]]


def _composition_order(f: XSeries, g: TruncatedSeries[Any]) -> int:
    v = g.valuation()
    positive = [n for n in f.coeffs if n > 0]
    order = f.order * v
    if positive:
        order = min(order, g.order + (min(positive) - 1) * v)
    return order


def compose(f: XSeries, g: XSeries) -> XSeries:
    """f(g(x)) by Horner evaluation over the support of f"""
    if not isinstance(g, XSeries) or g.ring != f.ring:
        raise SeriesError("compose needs x-series in one ring", error_code="CONTEXT_MISMATCH")
    if 0 in g.coeffs:
        raise SeriesError("Inner series has a nonzero constant term", error_code="NONZERO_CONSTANT")
    return _horner(f, g, _composition_order(f, g))


def compose_multi(f: XSeries, g: MultiSeries) -> MultiSeries:
    """f(S) for a multivariate S without constant term"""
    if g.coefficient(g._unit_key()):
        raise SeriesError("Inner series has a nonzero constant term", error_code="NONZERO_CONSTANT")
    return _horner(f, g, _composition_order(f, g))


def revert(f: XSeries) -> XSeries:
    """
    Compositional inverse by Newton iteration

    Args:
        f: Series c*x + O(x^2) with c invertible

    Returns:
        g with f(g(x)) = x = g(f(x)) modulo x^order(f)

    Raises:
        SeriesError: If f has a constant term or a non-invertible linear coefficient
    """
    if 0 in f.coeffs:
        raise SeriesError("Cannot revert a series with constant term", "NONZERO_CONSTANT")
    try:
        c_inv = f.coefficient(1).inverse()
    except PolyError as e:
        raise SeriesError(f"Linear coefficient not invertible: {e.message}", "NOT_INVERTIBLE")

    ring, order = f.ring, f.order
    g = XSeries.monomial(ring, c_inv, 1, min(order, 2))
    prec = min(order, 2)
    while prec < order:
        prec = min(2 * prec, order)
        fp = f.truncate(prec)
        gp = g._with_order(prec)
        error = compose(fp, gp).truncate(prec) - XSeries.x(ring, prec)
        slope = compose(fp.derivative(), gp)
        slope = slope.truncate(min(slope.order, prec - 1)).inverse()._with_order(prec)
        g = gp - error * slope
        logger.debug(f"Reversion precision {prec}/{order}")
    return g._with_order(order)


def lagrange_b_n(log_coeffs: Sequence[Poly], n: int, p: int, h: int) -> Poly:
    """
    Coefficient b_n of exp = log^{-1} in closed form, n <= p^h

    The logarithm must be x + L_{h-1} x^{p^{h-1}} + L_h x^{p^h} + ... modulo
    x^{p^h+1}, which requires h > 2 (at h = 2 the two contributions collide).
    """
    if h <= 2:
        raise SeriesError(f"Closed-form exponential needs h > 2, got {h}", "UNSUPPORTED_HEIGHT")
    if len(log_coeffs) <= h:
        raise SeriesError("Logarithm known below x^{p^h}", error_code="UNSUPPORTED_LOG_SHAPE")
    one = log_coeffs[0]
    if one != 1 or any(not log_coeffs[i].is_zero() for i in range(1, h - 1)):
        raise SeriesError(
            "Logarithm is not supported on 1, p^{h-1}, p^h", error_code="UNSUPPORTED_LOG_SHAPE"
        )
    q, top = p ** (h - 1), p**h
    if not 1 <= n <= top:
        raise SeriesError(f"b_{n} outside 1..{top}", error_code="OUT_OF_RANGE")
    ring = one.ring
    if n == 1:
        return Poly.one(ring)
    if n == top:
        return -log_coeffs[h]
    if (n - 1) % (q - 1) == 0:
        i = (n - 1) // (q - 1)
        return (log_coeffs[h - 1] ** i).scale(Fraction((-1) ** i, i) * binom(q * i, i - 1))
    return Poly.zero(ring)


def compose_sum(f: XSeries, a: XSeries, b: XSeries, order: int) -> XYSeries:
    """
    f(a(x) + b(y)) modulo (x, y)^order by binomial expansion over the support of f
    """
    if a.valuation() < 1 or b.valuation() < 1:
        raise SeriesError("Arguments must have zero constant term", error_code="NONZERO_CONSTANT")
    ring = f.ring
    degrees = [n for n in sorted(f.coeffs) if n < order]
    top_power = max(degrees, default=0)
    a = a._with_order(order)
    b = b._with_order(order)
    pow_a = _power_table(a, range(top_power + 1))
    pow_b = _power_table(b, range(top_power + 1))

    acc: Dict[Tuple[int, ...], Dict[int, Coefficient]] = {}
    for n in degrees:
        fn = f.coeffs[n]
        for k in range(n + 1):
            left, right = pow_a[k], pow_b[n - k]
            if left.is_zero() or right.is_zero():
                continue
            weight = fn.scale(binom(n, k))
            if weight.is_zero():
                continue
            right_items = sorted(right.coeffs.items())
            for i, ci in left.coeffs.items():
                scaled = weight * ci
                for j, cj in right_items:
                    if i + j >= order:
                        break
                    scaled.mul_into(cj, acc.setdefault((i, j), {}))
    coeffs = {}
    for key, raw in acc.items():
        c = Poly.from_raw(ring, raw)
        if not c.is_zero():
            coeffs[key] = c
    return XYSeries(ring, coeffs, order)
