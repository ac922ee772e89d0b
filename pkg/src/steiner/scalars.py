"""Exact scalar arithmetic shared by the whole package.

Rationals are gmpy2.mpq when gmpy2 is importable and fractions.Fraction
otherwise; both expose .numerator/.denominator and interoperate with int,
so everything downstream is written against that common surface.  Complex
rationals are a small struct of two rationals, enough field arithmetic for
Newton steps and norm computations, nothing more.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

try:
    import gmpy2
    from gmpy2 import mpq as _mpq, mpz as _mpz

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    _mpq = Fraction
    _mpz = int
    HAVE_GMPY2 = False

Rational = Union[Fraction, "gmpy2.mpq"] if HAVE_GMPY2 else Fraction

ZERO = _mpq(0)
ONE = _mpq(1)


def rational(num, den=1) -> Rational:
    """Exact rational from integers, a Fraction, a "p/q" string, or another rational."""
    if isinstance(num, str):
        return _mpq(Fraction(num)) / den
    return _mpq(num, den)


def integer(n) -> "_mpz":
    return _mpz(n)


def isqrt(n) -> "_mpz":
    if HAVE_GMPY2:
        return gmpy2.isqrt(n)
    return math.isqrt(n)


def lcm(a, b):
    if HAVE_GMPY2:
        return gmpy2.lcm(a, b)
    return math.lcm(a, b)


def parse_rational(text: str) -> Rational:
    """Parse "p/q" or a decimal literal into an exact rational.

    Decimal strings (including exponent forms like "1.5e-3") go through
    Fraction, which is exact for them; "p/q" is split by hand so that
    whitespace around the slash is tolerated.
    """
    s = text.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        d = int(den)
        if d == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return _mpq(int(num), d)
    try:
        return _mpq(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational literal: {text!r}") from exc


def format_rational(r) -> str:
    """Inverse of parse_rational; integers print without the /1 tail."""
    n, d = r.numerator, r.denominator
    if d == 1:
        return str(n)
    return f"{n}/{d}"


def rationalize(x: float) -> Rational:
    """The exact dyadic rational equal to the float x.

    Every finite double is p/2^k; Fraction(float) recovers it bit for bit,
    so converting a numeric candidate to rational coordinates loses nothing.
    """
    if isinstance(x, (int, _mpz)):
        return _mpq(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot rationalize non-finite value {x!r}")
    return _mpq(Fraction(x))


def sqrt_upper(r) -> Rational:
    """A rational upper bound on sqrt(r) for a nonnegative rational r.

    sqrt(p/q) = sqrt(p*q)/q, and isqrt(m) <= sqrt(m) < isqrt(m)+1; scaling
    the radicand by a power of four first keeps the overshoot below 2^-40
    relative, which is plenty for certification thresholds.
    """
    if r < 0:
        raise ValueError("negative radicand")
    if r == 0:
        return ZERO
    p, q = r.numerator, r.denominator
    n = p * q
    shift = max(0, 40 - n.bit_length() // 2)
    scale = _mpz(1) << shift
    return _mpq(isqrt(n * scale * scale) + 1, q * scale)


class CQ:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _mpq(re))
        object.__setattr__(self, "im", _mpq(im))

    def __setattr__(self, name, value):
        raise AttributeError("CQ is immutable")

    @classmethod
    def from_complex(cls, z: complex) -> "CQ":
        return cls(rationalize(float(z.real)), rationalize(float(z.imag)))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def conjugate(self) -> "CQ":
        return CQ(self.re, -self.im)

    def norm_sq(self) -> Rational:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        other = _coerce(other)
        return CQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return CQ(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        return CQ(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        n = other.norm_sq()
        if n == 0:
            raise ZeroDivisionError("division by zero complex rational")
        return CQ(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            return NotImplemented
        out = CQ(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __neg__(self):
        return CQ(-self.re, -self.im)

    def __eq__(self, other):
        if isinstance(other, complex):
            return self.to_complex() == other
        other = _coerce(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"CQ({format_rational(self.re)}, {format_rational(self.im)})"


def _coerce(value) -> CQ:
    if isinstance(value, CQ):
        return value
    if isinstance(value, complex):
        return CQ.from_complex(value)
    return CQ(value)


def cq(value) -> CQ:
    """Coerce ints, rationals, floats, and complex into CQ exactly."""
    if isinstance(value, CQ):
        return value
    if isinstance(value, complex):
        return CQ.from_complex(value)
    if isinstance(value, float):
        return CQ(rationalize(value))
    return CQ(value)


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{x:.17g}"
