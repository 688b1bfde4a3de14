"""Exact arithmetic in Q(sqrt(r)) for a fixed positive integer r."""
from __future__ import annotations

from fractions import Fraction
from math import isqrt


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class Surd:
    """The number ``a + b*sqrt(r)`` with rational a, b."""

    __slots__ = ("a", "b", "r")

    def __init__(self, a=0, b=0, r: int = 1):
        if r < 1:
            raise ValueError("radicand must be positive")
        a, b = _frac(a), _frac(b)
        root = isqrt(r)
        if root * root == r:
            a, b, r = a + b * root, Fraction(0), 1
        self.a, self.b, self.r = a, b, r

    @classmethod
    def sqrt(cls, r: int) -> Surd:
        return cls(0, 1, r)

    def _coerce(self, other) -> Surd:
        if isinstance(other, Surd):
            if other.b == 0 or self.b == 0 or other.r == self.r:
                return other
            raise ValueError("cannot mix different radicands")
        return Surd(other, 0, self.r)

    def _radicand(self, other: Surd) -> int:
        return self.r if self.b != 0 else other.r

    def __add__(self, other):
        o = self._coerce(other)
        return Surd(self.a + o.a, self.b + o.b, self._radicand(o))

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, self.r)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        r = self._radicand(o)
        return Surd(self.a * o.a + self.b * o.b * r, self.a * o.b + self.b * o.a, r)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        r = self._radicand(o)
        norm = o.a * o.a - o.b * o.b * r
        if norm == 0:
            raise ZeroDivisionError("division by zero surd")
        conj = Surd(o.a, -o.b, r)
        num = self * conj
        return Surd(num.a / norm, num.b / norm, r)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, e: int):
        if e < 0:
            return Surd(1, 0, self.r) / self ** (-e)
        out = Surd(1, 0, self.r)
        for _ in range(e):
            out = out * self
        return out

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0 or sa == sb:
            return sa if sa else sb
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with b^2 r
        lhs, rhs = self.a * self.a, self.b * self.b * self.r
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.r if self.b else 1))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self):
        return float(self.a) + float(self.b) * self.r ** 0.5

    def is_rational(self) -> bool:
        return self.b == 0

    def to_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self} is irrational")
        return self.a

    def __repr__(self):
        if self.b == 0:
            return f"Surd({self.a})"
        return f"Surd({self.a} + {self.b}*sqrt({self.r}))"


def exact(v):
    """Fractions stay Fractions; rational surds collapse to Fractions."""
    if isinstance(v, Surd) and v.is_rational():
        return v.a
    if isinstance(v, int):
        return Fraction(v)
    return v
