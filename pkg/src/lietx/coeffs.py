"""Coefficient domains: double-precision complex and exact Gaussian rationals."""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

__all__ = ["GaussQ", "FloatDomain", "ExactDomain", "FLOAT", "EXACT", "domain_for"]

ZERO_THRESHOLD = 1e-14


def _q(x) -> mpq:
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, float):
        # exact binary value of the float
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class GaussQ:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_MPQ0) else _q(re)
        self.im = im if type(im) is type(_MPQ0) else _q(im)

    @classmethod
    def coerce(cls, x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            return cls(x.real, x.imag)
        if isinstance(x, tuple):
            return cls(*x)
        return cls(x, 0)

    def __add__(self, other):
        if type(other) is not GaussQ:
            other = GaussQ.coerce(other)
        return GaussQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not GaussQ:
            other = GaussQ.coerce(other)
        return GaussQ(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussQ.coerce(other) - self

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __mul__(self, other):
        if type(other) is not GaussQ:
            other = GaussQ.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussQ(a * c, _MPQ0)
        return GaussQ(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is not GaussQ:
            other = GaussQ.coerce(other)
        c, d = other.re, other.im
        den = c * c + d * d
        if not den:
            raise ZeroDivisionError("GaussQ division by zero")
        a, b = self.re, self.im
        return GaussQ((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return GaussQ.coerce(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are exact")
        if n < 0:
            return GaussQ(1) / (self ** (-n))
        result, base = GaussQ(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self):
        return GaussQ(self.re, -self.im)

    def abs2(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (GaussQ, int, Rational, complex, float, str, tuple)):
            other = GaussQ.coerce(other)
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"GaussQ({self.re})"
        return f"GaussQ({self.re}, {self.im})"


_MPQ0 = mpq(0)


class FloatDomain:
    """Complex double coefficients; magnitudes below 1e-14 are pruned."""

    exact = False
    name = "float"
    zero = 0j
    one = 1 + 0j
    i = 1j

    def convert(self, x) -> complex:
        if isinstance(x, GaussQ):
            return complex(x)
        if isinstance(x, str):
            return complex(Fraction(x))
        if isinstance(x, tuple):
            return complex(float(Fraction(x[0])), float(Fraction(x[1])))
        return complex(x)

    def is_zero(self, c) -> bool:
        return abs(c) < ZERO_THRESHOLD

    def exp_i(self, theta: float) -> complex:
        return cmath.exp(1j * theta)

    def __eq__(self, other):
        return isinstance(other, FloatDomain)

    def __hash__(self):
        return hash("float")

    def __repr__(self):
        return "FLOAT"


class ExactDomain:
    """Gaussian-rational coefficients; arithmetic never rounds."""

    exact = True
    name = "exact"

    def __init__(self):
        self.zero = GaussQ(0)
        self.one = GaussQ(1)
        self.i = GaussQ(0, 1)

    def convert(self, x) -> GaussQ:
        return GaussQ.coerce(x)

    def is_zero(self, c) -> bool:
        return not c

    def exp_i(self, theta):
        raise ValueError("e^{i theta} is not a Gaussian rational; use float mode")

    def __eq__(self, other):
        return isinstance(other, ExactDomain)

    def __hash__(self):
        return hash("exact")

    def __repr__(self):
        return "EXACT"


FLOAT = FloatDomain()
EXACT = ExactDomain()


def domain_for(mode: str):
    if mode in ("float", FLOAT):
        return FLOAT
    if mode in ("exact", EXACT):
        return EXACT
    raise ValueError(f"unknown arithmetic mode {mode!r}")
