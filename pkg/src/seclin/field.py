"""Exact scalar arithmetic for prime fields GF(p) and the rationals.

Matrices store raw canonical values (``int`` in ``[0, p)`` for GF(p),
``Fraction`` for the reals) and route every operation through the owning
:class:`FieldSpec`.  :class:`FieldElement` wraps a value together with its
field for callers that want operator syntax and mismatch checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Scalar = Union[int, Fraction]


class FieldError(ValueError):
    """Raised on malformed field specifications or cross-field operations."""


# Deterministic Miller-Rabin witnesses, valid for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise FieldError(f"boolean is not a field entry: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise FieldError(f"cannot parse entry {value!r}") from exc
    if isinstance(value, float):
        if not value.is_integer():
            raise FieldError(f"non-integer float entry {value!r}; use 'a/b' strings")
        return Fraction(int(value))
    raise FieldError(f"unsupported entry type {type(value).__name__}")


@dataclass(frozen=True)
class FieldSpec:
    """Either ``GF(p)`` (``p`` set) or the reals (``p is None``).

    Real-field structure is computed with exact rationals; conversion to
    floats happens only in the statistical code paths.
    """

    p: int | None = None

    def __post_init__(self):
        if self.p is not None:
            if isinstance(self.p, bool) or not isinstance(self.p, int):
                raise FieldError(f"modulus must be an integer, got {self.p!r}")
            if not is_prime(self.p):
                raise FieldError(f"modulus {self.p} is not prime")

    @classmethod
    def gf(cls, p: int) -> "FieldSpec":
        return cls(p)

    @classmethod
    def real(cls) -> "FieldSpec":
        return cls(None)

    @classmethod
    def parse(cls, text: str) -> "FieldSpec":
        """Parse ``"real"`` or ``"gf:<p>"``."""
        t = str(text).strip().lower()
        if t == "real":
            return cls.real()
        if t.startswith("gf:"):
            try:
                p = int(t[3:])
            except ValueError as exc:
                raise FieldError(f"bad field tag {text!r}") from exc
            return cls.gf(p)
        raise FieldError(f"unknown field tag {text!r} (expected 'real' or 'gf:<p>')")

    @property
    def is_finite(self) -> bool:
        return self.p is not None

    @property
    def tag(self) -> str:
        return "real" if self.p is None else f"gf:{self.p}"

    def __str__(self):
        return "R" if self.p is None else f"GF({self.p})"

    # -- scalars -----------------------------------------------------------

    @property
    def zero(self) -> Scalar:
        return 0 if self.p is not None else Fraction(0)

    @property
    def one(self) -> Scalar:
        return 1 if self.p is not None else Fraction(1)

    def coerce(self, value) -> Scalar:
        """Bring an int, Fraction, or ``"a/b"`` string into canonical form.

        Over GF(p) a rational ``a/b`` maps to ``a * b^-1 mod p``.
        """
        if isinstance(value, FieldElement):
            self._same(value.field)
            return value.value
        q = _parse_rational(value)
        if self.p is None:
            return q
        den = q.denominator % self.p
        if den == 0:
            raise FieldError(f"entry {q} has a denominator divisible by {self.p}")
        return q.numerator * pow(den, -1, self.p) % self.p

    def add(self, a: Scalar, b: Scalar) -> Scalar:
        if self.p is None:
            return a + b
        return (a + b) % self.p

    def sub(self, a: Scalar, b: Scalar) -> Scalar:
        if self.p is None:
            return a - b
        return (a - b) % self.p

    def neg(self, a: Scalar) -> Scalar:
        if self.p is None:
            return -a
        return -a % self.p

    def mul(self, a: Scalar, b: Scalar) -> Scalar:
        if self.p is None:
            return a * b
        return a * b % self.p

    def inv(self, a: Scalar) -> Scalar:
        if a == 0:
            raise ZeroDivisionError(f"zero has no inverse in {self}")
        if self.p is None:
            return 1 / Fraction(a)
        return pow(a, -1, self.p)

    def div(self, a: Scalar, b: Scalar) -> Scalar:
        return self.mul(a, self.inv(b))

    def element(self, value) -> "FieldElement":
        return FieldElement(self.coerce(value), self)

    def _same(self, other: "FieldSpec"):
        if other != self:
            raise FieldError(f"field mismatch: {self} vs {other}")


@dataclass(frozen=True)
class FieldElement:
    """Immutable field value with operator overloading."""

    value: Scalar
    field: FieldSpec

    def _check(self, other) -> Scalar:
        if isinstance(other, FieldElement):
            self.field._same(other.field)
            return other.value
        return self.field.coerce(other)

    def __add__(self, other):
        return FieldElement(self.field.add(self.value, self._check(other)), self.field)

    def __sub__(self, other):
        return FieldElement(self.field.sub(self.value, self._check(other)), self.field)

    def __mul__(self, other):
        return FieldElement(self.field.mul(self.value, self._check(other)), self.field)

    def __truediv__(self, other):
        return FieldElement(self.field.div(self.value, self._check(other)), self.field)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.field.neg(self.value), self.field)

    def inv(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        try:
            return self.value == self.field.coerce(other)
        except FieldError:
            return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field))

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value}@{self.field}"


def format_scalar(value: Scalar):
    """JSON-friendly form: ints stay ints, proper fractions become ``"a/b"``."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return f"{value.numerator}/{value.denominator}"
    return int(value)
