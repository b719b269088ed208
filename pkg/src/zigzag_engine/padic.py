"""Truncated arithmetic in Z_p and in E = Q_p(pi) with pi^2 = p.

A non-zero element is stored as pi^vpi * u where u is a unit of O_E given by
its base-pi digits.  Internally the unit is handled as a pair of integers
(x, y) with u = x + y*pi: the even-index digits of u are the base-p digits of x
and the odd-index digits those of y, so conversion is just interleaving.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable


class PrecisionError(ArithmeticError):
    """Raised when a result has no reliable digits left."""


INFINITY = "inf"  # valuation marker for zero


def vp(n: int, p: int) -> int:
    """p-adic valuation of a non-zero integer."""
    if n == 0:
        raise ValueError("valuation of 0")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_capped(n: int, p: int, cap: int) -> int:
    """Valuation of n, returning cap when p^cap divides n."""
    if n == 0:
        return cap
    v = 0
    while v < cap and n % p == 0:
        n //= p
        v += 1
    return v


@lru_cache(maxsize=None)
def teichmuller_int(lam: int, p: int, n: int) -> int:
    """Integer in [0, p^n) congruent to the Teichmuller lift of lam mod p^n."""
    lam %= p
    if lam == 0:
        return 0
    mod = p**n
    # lam^(p^(n-1)) is already the lift modulo p^n
    return pow(lam, p ** (n - 1), mod)


def _split(k: int) -> tuple[int, int]:
    # digit budget of the (x, y) parts for k pi-digits
    return (k + 1) // 2, k // 2


def _digits_to_pair(p: int, digits: Iterable[int]) -> tuple[int, int]:
    x = y = 0
    px = py = 1
    for i, d in enumerate(digits):
        if i % 2 == 0:
            x += d * px
            px *= p
        else:
            y += d * py
            py *= p
    return x, y


def _pair_to_digits(p: int, x: int, y: int, k: int) -> tuple[int, ...]:
    out = []
    for i in range(k):
        if i % 2 == 0:
            x, d = divmod(x, p)
        else:
            y, d = divmod(y, p)
        out.append(d)
    return tuple(out)


def _shift_pair(p: int, x: int, y: int, d: int) -> tuple[int, int]:
    """Multiply x + y*pi by pi^d (d >= 0)."""
    if d % 2:
        x, y = p * y, x
    k = d // 2
    if k:
        f = p**k
        x, y = x * f, y * f
    return x, y


def pair_valuation(p: int, x: int, y: int, cap: int) -> int:
    """pi-adic valuation of x + y*pi, capped at cap."""
    hx, hy = _split(cap)
    vx = vp_capped(x % p**hx, p, hx)
    vy = vp_capped(y % p**hy, p, hy)
    return min(2 * vx, 2 * vy + 1, cap)


def _unshift_pair(p: int, x: int, y: int, w: int) -> tuple[int, int]:
    """Divide x + y*pi by pi^w, assuming divisibility."""
    k = w // 2
    if k:
        f = p**k
        x, y = x // f, y // f
    if w % 2:
        x, y = y, x // p
    return x, y


@dataclass(frozen=True)
class ExtScalar:
    """Element pi^vpi * (digits[0] + digits[1]*pi + ...) of E.

    For a zero value ``digits`` is empty and ``vpi`` is the known lower bound on
    the valuation, or None when the zero is exact.
    """

    p: int
    vpi: int | None
    digits: tuple[int, ...]
    zero: bool = False

    # construction

    @classmethod
    def exact_zero(cls, p: int) -> "ExtScalar":
        return cls(p, None, (), True)

    @classmethod
    def from_pair(cls, p: int, vpi: int, x: int, y: int, k: int) -> "ExtScalar":
        """Normalize pi^vpi * (x + y*pi) known to k relative pi-digits."""
        if k <= 0:
            raise PrecisionError("no reliable digits")
        hx, hy = _split(k)
        x %= p**hx
        y %= p**hy
        w = pair_valuation(p, x, y, k)
        if w >= k:
            return cls(p, vpi + k, (), True)
        x, y = _unshift_pair(p, x, y, w)
        kk = k - w
        return cls(p, vpi + w, _pair_to_digits(p, x, y, kk))

    @classmethod
    def from_int(cls, p: int, n: int, k: int) -> "ExtScalar":
        if n == 0:
            return cls.exact_zero(p)
        v = vp(n, p)
        return cls.from_pair(p, 2 * v, n // p**v, 0, k)

    @classmethod
    def from_fraction(cls, p: int, q: Fraction | int, k: int) -> "ExtScalar":
        q = Fraction(q)
        if q == 0:
            return cls.exact_zero(p)
        num = cls.from_int(p, q.numerator, k)
        return num * cls.from_int(p, q.denominator, k).inverse()

    @classmethod
    def from_digits(cls, p: int, vpi: int, digits: Iterable[int]) -> "ExtScalar":
        digits = tuple(int(d) for d in digits)
        if any(not 0 <= d < p for d in digits):
            raise ValueError("digits must lie in [0, p)")
        x, y = _digits_to_pair(p, digits)
        return cls.from_pair(p, vpi, x, y, len(digits))

    @classmethod
    def uniformizer(cls, p: int, k: int) -> "ExtScalar":
        return cls.from_pair(p, 1, 1, 0, k)

    # accessors

    @property
    def prec(self) -> int:
        """Number of reliable relative pi-digits."""
        return len(self.digits)

    @property
    def abs_prec(self) -> int | None:
        """Absolute precision in pi-units (None for exact zero)."""
        if self.zero:
            return self.vpi
        return self.vpi + self.prec

    def unit_pair(self) -> tuple[int, int]:
        return _digits_to_pair(self.p, self.digits)

    def is_zero(self) -> bool:
        return self.zero

    def valuation(self):
        return valuation(self)

    def residue(self) -> int:
        """Image in the residue field F_p (requires integrality)."""
        if self.zero:
            if self.vpi is not None and self.vpi <= 0:
                raise PrecisionError("residue undetermined")
            return 0
        if self.vpi < 0:
            raise ValueError("residue of a non-integral element")
        return self.digits[0] if self.vpi == 0 else 0

    # arithmetic

    def _coerce(self, other) -> "ExtScalar":
        if isinstance(other, ExtScalar):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            return ExtScalar.from_fraction(self.p, other, max(self.prec, 2))
        return NotImplemented

    def __neg__(self) -> "ExtScalar":
        if self.zero:
            return self
        x, y = self.unit_pair()
        return ExtScalar.from_pair(self.p, self.vpi, -x, -y, self.prec)

    def __add__(self, other) -> "ExtScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.zero and b.zero:
            if a.vpi is None:
                return b
            if b.vpi is None:
                return a
            return ExtScalar(a.p, min(a.vpi, b.vpi), (), True)
        if a.zero or b.zero:
            z, nz = (a, b) if a.zero else (b, a)
            if z.vpi is None or z.vpi >= nz.abs_prec:
                return nz
            if z.vpi <= nz.vpi:
                return ExtScalar(a.p, z.vpi, (), True)
            return ExtScalar.from_pair(a.p, nz.vpi, *nz.unit_pair(), z.vpi - nz.vpi)
        if a.vpi > b.vpi:
            a, b = b, a
        d = b.vpi - a.vpi
        k = min(a.prec, b.prec + d)
        x1, y1 = a.unit_pair()
        x2, y2 = _shift_pair(a.p, *b.unit_pair(), d)
        return ExtScalar.from_pair(a.p, a.vpi, x1 + x2, y1 + y2, k)

    __radd__ = __add__

    def __sub__(self, other) -> "ExtScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "ExtScalar":
        return (-self) + other

    def __mul__(self, other) -> "ExtScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.zero or b.zero:
            if (a.zero and a.vpi is None) or (b.zero and b.vpi is None):
                return ExtScalar.exact_zero(a.p)
            # inexact zero times something: valuation bound adds
            za, zb = (a, b) if a.zero else (b, a)
            vb = zb.vpi
            return ExtScalar(a.p, za.vpi + vb, (), True)
        p = a.p
        x1, y1 = a.unit_pair()
        x2, y2 = b.unit_pair()
        k = min(a.prec, b.prec)
        return ExtScalar.from_pair(p, a.vpi + b.vpi, x1 * x2 + p * y1 * y2, x1 * y2 + x2 * y1, k)

    __rmul__ = __mul__

    def inverse(self) -> "ExtScalar":
        if self.zero:
            raise ZeroDivisionError("inverse of zero")
        p = self.p
        k = self.prec
        hx, _ = _split(k)
        mod = p**hx
        x, y = self.unit_pair()
        norm = (x * x - p * y * y) % mod
        ninv = pow(norm, -1, mod)
        return ExtScalar.from_pair(p, -self.vpi, x * ninv, -y * ninv, k)

    def __truediv__(self, other) -> "ExtScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> "ExtScalar":
        return self.inverse() * other

    def __pow__(self, n: int) -> "ExtScalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = ExtScalar.from_int(self.p, 1, max(self.prec, 1))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def truncate(self, k: int) -> "ExtScalar":
        """Keep at most k relative digits."""
        if self.zero or self.prec <= k:
            return self
        return ExtScalar(self.p, self.vpi, self.digits[:k])

    def __repr__(self) -> str:
        if self.zero:
            bound = "exact" if self.vpi is None else f"O(pi^{self.vpi})"
            return f"ExtScalar(0, {bound})"
        shown = " + ".join(f"{d}*pi^{i}" for i, d in enumerate(self.digits[:6]) if d)
        return f"ExtScalar(pi^{self.vpi}*({shown} + ...), p={self.p}, prec={self.prec})"


def ext_arith(a: ExtScalar, b: ExtScalar | None, op: str) -> ExtScalar:
    """Dispatch one of add, sub, mul, inv (inverse of a)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown op {op!r}")


def valuation(a: ExtScalar):
    """v(a) with v(p) = 1, as a Fraction; INFINITY for an exact zero.

    An inexact zero has no determined valuation and raises PrecisionError.
    """
    if a.zero:
        if a.vpi is None:
            return INFINITY
        raise PrecisionError(f"value vanishes to precision pi^{a.vpi}")
    return Fraction(a.vpi, 2)


def teichmuller(lam: int, p: int, k: int) -> ExtScalar:
    """Teichmuller lift of lam in F_p to k pi-digits."""
    if not 0 <= lam < p:
        raise ValueError("residue out of range")
    if lam == 0:
        return ExtScalar.exact_zero(p)
    n = (k + 1) // 2
    return ExtScalar.from_pair(p, 0, teichmuller_int(lam, p, n), 0, k)


_TERM = re.compile(r"^\s*(\d+)?\s*(?:\*?\s*(pi|p)\s*(?:\^\s*(\d+))?)?\s*$")


def parse_scalar(text: str, p: int, k: int) -> ExtScalar:
    """Parse ``pi^e * (d0 + d1*pi + d2*pi^2 + ...)``.

    ``p`` is accepted as an alias for ``pi^2``; the prefix ``pi^e *`` and the
    parentheses are optional, e may be negative.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty scalar")
    vpi = 0
    m = re.match(r"^(pi|p)\s*(?:\^\s*(-?\d+))?\s*\*\s*(.*)$", s)
    if m:
        e = int(m.group(2)) if m.group(2) is not None else 1
        vpi = e * (2 if m.group(1) == "p" else 1)
        s = m.group(3).strip()
    elif re.match(r"^(pi|p)\s*(\^\s*-?\d+)?$", s):
        m2 = re.match(r"^(pi|p)\s*(?:\^\s*(-?\d+))?$", s)
        e = int(m2.group(2)) if m2.group(2) is not None else 1
        vpi = e * (2 if m2.group(1) == "p" else 1)
        s = "1"
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    coeffs: dict[int, int] = {}
    for term in s.split("+"):
        tm = _TERM.match(term)
        if not tm or (tm.group(1) is None and tm.group(2) is None):
            raise ValueError(f"cannot parse term {term!r}")
        d = int(tm.group(1)) if tm.group(1) is not None else 1
        if tm.group(2) is None:
            e = 0
        else:
            e = int(tm.group(3)) if tm.group(3) is not None else 1
            if tm.group(2) == "p":
                e *= 2
        coeffs[e] = coeffs.get(e, 0) + d
    # digits may carry, so assemble as an integer pair
    x = y = 0
    for e, d in coeffs.items():
        dx, dy = _shift_pair(p, d, 0, e)
        x += dx
        y += dy
    if x == 0 and y == 0:
        return ExtScalar.exact_zero(p)
    # the text is exact: keep k digits after the leading one
    w = min(2 * vp(x, p) if x else k + 2, 2 * vp(y, p) + 1 if y else k + 2)
    return ExtScalar.from_pair(p, vpi, x, y, k + w)


def format_scalar(a: ExtScalar) -> str:
    """Inverse of parse_scalar (canonical digits)."""
    if a.zero:
        return "0"
    body = " + ".join(
        str(d) if i == 0 else (f"{d}*pi" if i == 1 else f"{d}*pi^{i}")
        for i, d in enumerate(a.digits)
        if d or i == 0
    )
    return f"pi^{a.vpi} * ({body})"
