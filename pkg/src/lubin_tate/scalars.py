"""
Exact scalar arithmetic: rationals, p-adic valuations and prime-field reduction
"""

import logging
import math
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

from sympy import Poly as SympyPoly
from sympy import Symbol, isprime, multiplicity, sympify
from sympy.core.sympify import SympifyError

logger = logging.getLogger(__name__)

Rational = Fraction
Scalar = Union[int, Fraction]
FieldElement = Tuple[int, ...]


class ScalarError(Exception):
    """Exception raised for invalid scalar arithmetic"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class _Infinity:
    """Valuation of zero; compares greater than every integer"""

    _instance = None

    def __new__(cls) -> "_Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("INFINITY")

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = _Infinity()
Valuation = Union[int, _Infinity]


def check_prime(p: int) -> int:
    """Return p if it is prime, raise ScalarError otherwise"""
    if not isinstance(p, int) or not isprime(p):
        raise ScalarError(f"{p} is not a prime", error_code="NOT_PRIME")
    return p


def rat_div(a: Scalar, b: Scalar) -> Fraction:
    """Exact quotient a / b"""
    if b == 0:
        raise ScalarError(f"Division of {a} by zero", error_code="DIVISION_BY_ZERO")
    return Fraction(a) / Fraction(b)


def rat_pow(a: Scalar, n: int) -> Fraction:
    """Exact power a ** n, negative exponents allowed for nonzero a"""
    if a == 0 and n < 0:
        raise ScalarError("Zero raised to a negative power", error_code="DIVISION_BY_ZERO")
    return Fraction(a) ** n


def p_valuation(r: Scalar, p: int) -> Valuation:
    """
    p-adic valuation v_p(numerator) - v_p(denominator)

    Args:
        r: Integer or rational
        p: Prime

    Returns:
        The valuation, or INFINITY for r = 0
    """
    check_prime(p)
    value = Fraction(r)
    if value == 0:
        return INFINITY
    return int(multiplicity(p, abs(value.numerator))) - int(multiplicity(p, value.denominator))


def reduce_mod_p(r: Scalar, p: int) -> int:
    """
    Image of a p-integral rational in F_p

    Raises:
        ScalarError: If r has negative p-adic valuation
    """
    value = Fraction(r)
    if value.denominator % p == 0:
        raise ScalarError(f"{value} is not {p}-integral", error_code="NOT_P_INTEGRAL")
    return value.numerator * pow(value.denominator, -1, p) % p


def balanced(residue: int, p: int) -> int:
    """Representative of a residue in (-p/2, p/2]"""
    residue %= p
    return residue - p if residue > p // 2 else residue


def binom(n: int, k: int) -> int:
    """Binomial coefficient with the convention binom(n, k) = 0 outside 0 <= k <= n"""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def binom_p_over_p(p: int, j: int) -> int:
    """The integer binom(p, j) / p for 1 <= j <= p - 1"""
    if not 1 <= j <= p - 1:
        raise ScalarError(f"j = {j} outside [1, {p - 1}]", error_code="OUT_OF_RANGE")
    return math.comb(p, j) // p


def phi(p: int, h: int) -> int:
    """p^{h-1} + p^{h-2} + ... + p + 1"""
    return sum(p**i for i in range(h))


def format_scalar(r: Scalar) -> str:
    """Decimal string, "num/den" for non-integral rationals"""
    value = Fraction(r)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_scalar(text: str) -> Fraction:
    """Inverse of format_scalar"""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ScalarError(f"Cannot parse scalar {text!r}: {e}", error_code="BAD_ELEMENT")


class ExtensionField:
    """
    Concrete F_{p^h} = F_p[a]/(f) for spot checks of symbolic identities

    Elements are coefficient tuples (c_0, ..., c_{h-1}) of polynomials in the
    generator a. The modulus is given from the constant term upward and must be
    monic and irreducible.
    """

    def __init__(self, p: int, modulus: Sequence[int], generator: str = "a"):
        self.p = check_prime(p)
        coeffs = [c % p for c in modulus]
        if len(coeffs) < 2 or coeffs[-1] != 1:
            raise ScalarError(
                f"Modulus {list(modulus)} must be monic of positive degree",
                error_code="NOT_IRREDUCIBLE",
            )
        self.generator = generator
        self.modulus: Tuple[int, ...] = tuple(coeffs)
        self.degree = len(coeffs) - 1

        symbol = Symbol(generator)
        if not SympyPoly(list(reversed(coeffs)), symbol, modulus=p).is_irreducible:
            raise ScalarError(
                f"Modulus {list(modulus)} is reducible over F_{p}",
                error_code="NOT_IRREDUCIBLE",
            )
        logger.debug(f"Constructed F_{p}^{self.degree} with modulus {self.modulus}")

    @property
    def order(self) -> int:
        return self.p**self.degree

    def zero(self) -> FieldElement:
        return (0,) * self.degree

    def one(self) -> FieldElement:
        return self.scalar(1)

    def scalar(self, c: int) -> FieldElement:
        return (c % self.p,) + (0,) * (self.degree - 1)

    def element(self, coeffs: Sequence[int]) -> FieldElement:
        """Reduce an arbitrary coefficient list modulo the defining polynomial"""
        return self._reduce([int(c) for c in coeffs])

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def sub(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return tuple((x - y) % self.p for x, y in zip(a, b))

    def scale(self, c: int, a: FieldElement) -> FieldElement:
        return tuple(c * x % self.p for x in a)

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        product = [0] * (2 * self.degree - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    product[i + j] += x * y
        return self._reduce(product)

    def pow(self, a: FieldElement, n: int) -> FieldElement:
        if n < 0:
            raise ScalarError("Negative exponent in F_q", error_code="OUT_OF_RANGE")
        result = self.one()
        base = a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def frobenius(self, a: FieldElement, k: int = 1) -> FieldElement:
        return self.pow(a, self.p ** (k % self.degree))

    def is_teichmuller(self, a: FieldElement) -> bool:
        """True when a^{p^h} = a, i.e. a lies in this field's Teichmüller set"""
        return self.pow(a, self.order) == a

    def parse_element(self, text: str) -> FieldElement:
        """Parse a polynomial expression in the generator, e.g. "a^2 + 2*a + 1" """
        symbol = Symbol(self.generator)
        try:
            expr = sympify(text.replace("^", "**"), locals={self.generator: symbol})
            poly = SympyPoly(expr, symbol)
        except (SympifyError, TypeError, ValueError) as e:
            raise ScalarError(f"Cannot parse field element {text!r}: {e}", error_code="BAD_ELEMENT")
        coeffs: List[int] = []
        for c in reversed(poly.all_coeffs()):
            value = Fraction(str(c))
            coeffs.append(reduce_mod_p(value, self.p))
        return self.element(coeffs)

    def format_element(self, a: FieldElement) -> str:
        parts = []
        for i in reversed(range(self.degree)):
            c = a[i]
            if not c:
                continue
            if i == 0:
                parts.append(str(c))
            else:
                power = self.generator if i == 1 else f"{self.generator}^{i}"
                parts.append(power if c == 1 else f"{c}*{power}")
        return " + ".join(parts) if parts else "0"

    def _reduce(self, coeffs: List[int]) -> FieldElement:
        coeffs = [c % self.p for c in coeffs]
        deg = self.degree
        for i in range(len(coeffs) - 1, deg - 1, -1):
            c = coeffs[i]
            if c:
                for j in range(deg + 1):
                    coeffs[i - deg + j] = (coeffs[i - deg + j] - c * self.modulus[j]) % self.p
        coeffs += [0] * max(0, deg - len(coeffs))
        return tuple(coeffs[:deg])
