"""Exact arithmetic in real quadratic fields Q(sqrt(D)).

Values are stored as (p + q*sqrt(D)) / r with arbitrary-precision integers,
so Kasner parameters coming from periodic continued fractions, and every
eigenvalue ratio derived from them, can be manipulated without rounding.
Rationals are the special case q = 0, carried with the sentinel D = 1 so a
single type serves every call site.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Iterator, Union

__all__ = [
    "QuadraticSurd",
    "PeriodicCF",
    "cf_to_surd",
    "surd",
    "sqrt_surd",
    "minimal_polynomial",
    "cf_digits",
]

Scalar = Union[int, Fraction, "QuadraticSurd"]


def _squarefree_split(n: int) -> tuple[int, int]:
    """Write n = f**2 * d with d squarefree; returns (f, d).  n > 0."""
    f, d = 1, 1
    m = n
    k = 2
    while k * k <= m:
        if m % k == 0:
            e = 0
            while m % k == 0:
                m //= k
                e += 1
            f *= k ** (e // 2)
            if e % 2:
                d *= k
        k += 1 if k == 2 else 2
    return f, d * m


class QuadraticSurd:
    """An element (p + q*sqrt(d)) / r of a real quadratic field.

    Invariants after construction: r > 0, gcd(p, q, r) = 1, d squarefree
    and positive, and d = 1 exactly when q = 0 (the rational case).
    Instances are immutable and hashable; equality and ordering are exact.
    """

    __slots__ = ("p", "q", "r", "d")

    def __init__(self, p: int, q: int, r: int, d: int):
        if r == 0:
            raise ZeroDivisionError("surd denominator r must be nonzero")
        if d <= 0:
            raise ValueError("D must be a positive integer")
        f, d0 = _squarefree_split(d)
        q *= f
        d = d0
        if d == 1:  # sqrt(1) folds into the rational part
            p, q = p + q, 0
        if q == 0:
            d = 1
        if r < 0:
            p, q, r = -p, -q, -r
        g = gcd(gcd(abs(p), abs(q)), r)
        object.__setattr__(self, "p", p // g)
        object.__setattr__(self, "q", q // g)
        object.__setattr__(self, "r", r // g)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("QuadraticSurd is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_rational(x: Union[int, Fraction]) -> "QuadraticSurd":
        x = Fraction(x)
        return QuadraticSurd(x.numerator, 0, x.denominator, 1)

    # -- basic predicates --------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError("surd is irrational")
        return Fraction(self.p, self.r)

    def conjugate(self) -> "QuadraticSurd":
        return QuadraticSurd(self.p, -self.q, self.r, self.d)

    # -- coercion helpers --------------------------------------------------

    def _coerce(self, other: Scalar) -> "QuadraticSurd":
        if isinstance(other, QuadraticSurd):
            if other.d != self.d and not (other.is_rational or self.is_rational):
                raise ValueError(
                    f"incompatible fields Q(sqrt({self.d})) and Q(sqrt({other.d}))"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticSurd.from_rational(other)
        return NotImplemented  # type: ignore[return-value]

    def _common_d(self, other: "QuadraticSurd") -> int:
        if self.is_rational:
            return other.d
        return self.d

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: Scalar) -> "QuadraticSurd":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._common_d(o)
        return QuadraticSurd(
            self.p * o.r + o.p * self.r, self.q * o.r + o.q * self.r, self.r * o.r, d
        )

    __radd__ = __add__

    def __neg__(self) -> "QuadraticSurd":
        return QuadraticSurd(-self.p, -self.q, self.r, self.d)

    def __sub__(self, other: Scalar) -> "QuadraticSurd":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Scalar) -> "QuadraticSurd":
        return (-self) + other

    def __mul__(self, other: Scalar) -> "QuadraticSurd":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._common_d(o)
        p = self.p * o.p + self.q * o.q * d
        q = self.p * o.q + self.q * o.p
        return QuadraticSurd(p, q, self.r * o.r, d)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "QuadraticSurd":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.p == 0 and o.q == 0:
            raise ZeroDivisionError("division by exact zero surd")
        d = self._common_d(o)
        # 1/((p+q*sqrt(d))/r) = r*(p-q*sqrt(d)) / (p^2 - q^2 d)
        n = o.p * o.p - o.q * o.q * d
        inv = QuadraticSurd(o.r * o.p, -o.r * o.q, n, d)
        return self * inv

    def __rtruediv__(self, other: Scalar) -> "QuadraticSurd":
        o = self._coerce(other)
        return o / self

    def __pow__(self, n: int) -> "QuadraticSurd":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return QuadraticSurd.from_rational(1) / self ** (-n)
        out = QuadraticSurd.from_rational(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- exact comparisons -------------------------------------------------

    def _sign(self) -> int:
        """Exact sign of the value."""
        a, b, d = self.p, self.q, self.d
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 against b^2 d
        lhs, rhs = a * a, b * b * d
        if a > 0:  # b < 0
            return 1 if lhs > rhs else (-1 if lhs < rhs else 0)
        return 1 if rhs > lhs else (-1 if rhs < lhs else 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QuadraticSurd.from_rational(other)
        if not isinstance(other, QuadraticSurd):
            return NotImplemented
        if self.is_rational != other.is_rational:
            return False
        if not self.is_rational and self.d != other.d:
            return False
        return (self.p, self.q, self.r) == (other.p, other.q, other.r)

    def __hash__(self) -> int:
        return hash((self.p, self.q, self.r, self.d))

    def _cmp(self, other: Scalar) -> int:
        o = self._coerce(other)
        return (self - o)._sign()

    def __lt__(self, other: Scalar) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: Scalar) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: Scalar) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: Scalar) -> bool:
        return self._cmp(other) >= 0

    # -- conversion --------------------------------------------------------

    def __floor__(self) -> int:
        if self.is_rational:
            return self.p // self.r
        # initial guess via integer sqrt, then exact correction
        s = isqrt(self.q * self.q * self.d)
        n = (self.p + (s if self.q > 0 else -s - 1)) // self.r
        while self._cmp(n) < 0:
            n -= 1
        while self._cmp(n + 1) >= 0:
            n += 1
        return n

    def __float__(self) -> float:
        """Correctly rounded double of the exact value."""
        if self.is_rational:
            return self.p / self.r
        bits = 96
        while True:
            lo = isqrt(self.d << (2 * bits))  # floor(sqrt(d) * 2^bits)
            f_lo = Fraction(lo, 1 << bits)
            f_hi = Fraction(lo + 1, 1 << bits)
            if self.q < 0:
                f_lo, f_hi = f_hi, f_lo
            v_lo = float((self.p + self.q * f_lo) / self.r)
            v_hi = float((self.p + self.q * f_hi) / self.r)
            if v_lo == v_hi:
                return v_lo
            bits *= 2

    # -- formatting --------------------------------------------------------

    def __repr__(self) -> str:
        return f"QuadraticSurd({self.p}, {self.q}, {self.r}, {self.d})"

    def __str__(self) -> str:
        """Canonical text form "(p+q*sqrt(D))/r" used by the CLI."""
        if self.is_rational:
            return f"{self.p}/{self.r}" if self.r != 1 else str(self.p)
        q = f"+{self.q}" if self.q >= 0 else str(self.q)
        return f"({self.p}{q}*sqrt({self.d}))/{self.r}"


def surd(p: int, q: int = 0, r: int = 1, d: int = 1) -> QuadraticSurd:
    """Shorthand constructor for (p + q*sqrt(d))/r."""
    return QuadraticSurd(p, q, r, d)


def sqrt_surd(d: int) -> QuadraticSurd:
    return QuadraticSurd(0, 1, 1, d)


def minimal_polynomial(a: QuadraticSurd) -> tuple[int, int, int]:
    """Primitive integer (c0, c1, c2) with c0 + c1*a + c2*a^2 = 0 and c2 > 0.

    Raises ValueError on rational input, which has no degree-2 minimal
    polynomial; callers owning rational values must handle degree 1
    themselves.
    """
    if a.is_rational:
        raise ValueError("rational value has no degree-2 minimal polynomial")
    # (r*a - p)^2 = q^2 d  =>  r^2 a^2 - 2 p r a + (p^2 - q^2 d) = 0
    c2 = a.r * a.r
    c1 = -2 * a.p * a.r
    c0 = a.p * a.p - a.q * a.q * a.d
    g = gcd(gcd(abs(c0), abs(c1)), c2)
    return (c0 // g, c1 // g, c2 // g)


@dataclass(frozen=True)
class PeriodicCF:
    """An eventually periodic continued fraction [prefix; period repeating].

    All digits are positive integers and the period is nonempty, so the
    value is a quadratic irrational greater than or equal to 1.
    """

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(a) for a in self.prefix))
        object.__setattr__(self, "period", tuple(int(a) for a in self.period))
        if not self.period:
            raise ValueError("period must be nonempty")
        if any(a < 1 for a in self.prefix) or any(a < 1 for a in self.period):
            raise ValueError("continued fraction digits must be >= 1")

    def digits(self) -> Iterator[int]:
        """Infinite digit stream."""
        yield from self.prefix
        while True:
            yield from self.period

    def leading(self, n: int) -> tuple[int, ...]:
        out = []
        for a in self.digits():
            out.append(a)
            if len(out) == n:
                return tuple(out)
        return tuple(out)

    @staticmethod
    def parse(text: str) -> "PeriodicCF":
        """Parse the CLI form "[a1,a2;b1,b2]" (prefix;period), e.g. "[;3,5]"."""
        s = text.strip()
        if s.startswith("[") and s.endswith("]"):
            s = s[1:-1]
        if ";" in s:
            pre, per = s.split(";", 1)
        else:
            pre, per = "", s
        prefix = tuple(int(a) for a in pre.split(",") if a.strip())
        period = tuple(int(a) for a in per.split(",") if a.strip())
        return PeriodicCF(prefix, period)

    def __str__(self) -> str:
        pre = ",".join(str(a) for a in self.prefix)
        per = ",".join(str(a) for a in self.period)
        return f"[{pre};{per}]"


def cf_to_surd(cf: PeriodicCF) -> QuadraticSurd:
    """Exact value of an eventually periodic continued fraction.

    The purely periodic tail x = [b1,...,bm repeating] satisfies
    x = (P x + P') / (Q x + Q') with P/Q the convergents of one period,
    so x is the positive root of Q x^2 + (Q' - P) x - P' = 0; the prefix
    digits are then folded in one a + 1/x step at a time.
    """
    # convergents over one period
    p_prev, p_cur = 1, cf.period[0]
    q_prev, q_cur = 0, 1
    for a in cf.period[1:]:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    # Q x^2 + (Q' - P) x - P' = 0, positive root
    aa = q_cur
    bb = q_prev - p_cur
    cc = -p_prev
    disc = bb * bb - 4 * aa * cc
    x = (QuadraticSurd(-bb, 1, 2 * aa, disc))
    for a in reversed(cf.prefix):
        x = a + 1 / x
    return x


def cf_digits(a: QuadraticSurd, n: int) -> tuple[int, ...]:
    """First n continued-fraction digits of a (exact floor recurrence)."""
    out = []
    x = a
    for _ in range(n):
        k = x.__floor__()
        out.append(k)
        frac = x - k
        if frac._sign() == 0:
            break
        x = 1 / frac
    return tuple(out)
