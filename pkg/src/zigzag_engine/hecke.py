"""Functions on the Bruhat-Tits tree of GL2(Q_p) and the Hecke operator.

Vertices are the cosets g KZ with canonical representatives

    side 0, depth m:  (p^m  lam ; 0  1)          lam = sum [lam_i] p^i, i < m
    side 1, depth m:  (1  0 ; p lam  p^(m+1))

so side 0 depth 0 is the identity and side 1 depth 0 is alpha = diag(1, p).

Values live in Sym^r over O_E / p^N.  An element a + b*pi of that ring is kept
as two integers, and a whole function is stored as two Z/p^N-valued functions
(the "a" part and the "b" part) together with a common power pi^(-shift), so
the Z_p-linear operators (translation, T) act on the two parts separately.

Teichmuller lifts are replaced by their integer representatives modulo p^N;
every identity used downstream holds modulo p^N, which is the working
precision anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple

from .padic import ExtScalar, PrecisionError, pair_valuation, teichmuller_int, vp, vp_capped
from .report import VerificationReport


class TreeVertex(NamedTuple):
    side: int
    depth: int
    digits: tuple[int, ...]


ORIGIN = TreeVertex(0, 0, ())
ALPHA = TreeVertex(1, 0, ())


def g0(*digits: int) -> TreeVertex:
    """Side-0 vertex with the given Teichmuller digit word."""
    return TreeVertex(0, len(digits), tuple(digits))


def g1(*digits: int) -> TreeVertex:
    return TreeVertex(1, len(digits), tuple(digits))


def radius(v: TreeVertex) -> int:
    """Distance from the origin."""
    return v.depth if v.side == 0 else v.depth + 1


# exact 2x2 matrices over Q with Teichmuller digits as integers

Matrix = tuple  # (a, b, c, d) of Fractions or ints


def _digits_value(p: int, digits: tuple[int, ...], n: int) -> int:
    return sum(teichmuller_int(d, p, n) * p**i for i, d in enumerate(digits))


def vertex_matrix(v: TreeVertex, p: int, n: int) -> Matrix:
    lam = _digits_value(p, v.digits, n)
    if v.side == 0:
        return (p**v.depth, lam, 0, 1)
    return (1, 0, p * lam, p ** (v.depth + 1))


def mat_mul(x: Matrix, y: Matrix) -> Matrix:
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def mat_inv(x: Matrix) -> Matrix:
    a, b, c, d = (Fraction(t) for t in x)
    det = a * d - b * c
    if det == 0:
        raise ZeroDivisionError("singular matrix")
    return (d / det, -b / det, -c / det, a / det)


def _v(x: Fraction | int, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return math.inf
    return vp(x.numerator, p) - vp(x.denominator, p)


def _mod(x: Fraction | int, p: int, n: int) -> int:
    """p-integral rational reduced mod p^n."""
    x = Fraction(x)
    m = p**n
    if x.denominator % p == 0:
        raise ValueError(f"{x} is not p-integral")
    return x.numerator * pow(x.denominator, -1, m) % m


def _digit_word(p: int, lam: Fraction, m: int, n: int) -> tuple[int, ...]:
    """Digits d with sum [d_i] p^i = lam mod p^m, lifts taken mod p^n as in vertex_matrix."""
    x = _mod(lam, p, max(m, 1))
    out = []
    for _ in range(m):
        d = x % p
        out.append(d)
        x = (x - teichmuller_int(d, p, n)) // p
    return tuple(out)


def canonicalize(g: Matrix, p: int, n: int) -> tuple[TreeVertex, Matrix]:
    """Vertex of g KZ and k in K with g = rep * p^s * k (exact)."""
    a, b, c, d = (Fraction(t) for t in g)
    det = a * d - b * c
    if det == 0:
        raise ZeroDivisionError("singular matrix")
    vdet = _v(det, p)
    # side 0: bring the bottom row to (0, p^y)
    if _v(d, p) <= _v(c, p):
        y, lam = _v(d, p), b / d
    else:
        y, lam = _v(c, p), a / c
    m = vdet - 2 * y
    if m >= 0 and _v(lam, p) >= 0:
        vert = TreeVertex(0, int(m), _digit_word(p, lam, int(m), n))
    else:
        # side 1: bring the top row to (p^w0, 0)
        if _v(a, p) <= _v(b, p):
            w0, gam = _v(a, p), c / a
        else:
            w0, gam = _v(b, p), d / b
        w = vdet - 2 * w0
        if not (w >= 1 and _v(gam, p) >= 1):
            raise AssertionError("lattice class matched neither side")
        mm = int(w) - 1
        vert = TreeVertex(1, mm, _digit_word(p, gam / p, mm, n))
    h = mat_mul(mat_inv(vertex_matrix(vert, p, n)), (a, b, c, d))
    s = min(_v(t, p) for t in h)
    f = Fraction(p) ** int(-s)
    k = tuple(t * f for t in h)
    if _v(k[0] * k[3] - k[1] * k[2], p) != 0:
        raise AssertionError("normalizing element is not in KZ")
    return vert, k


# polynomial substitutions over Z/p^N (sparse dict j -> coefficient)


@lru_cache(maxsize=256)
def _binom_table(r: int, mod: int) -> tuple[tuple[int, ...], ...]:
    rows = []
    for j in range(r + 1):
        rows.append(tuple(math.comb(j, i) % mod for i in range(j + 1)))
    return tuple(rows)


def _powers(x: int, k: int, mod: int) -> list[int]:
    out = [1 % mod]
    for _ in range(k):
        out.append(out[-1] * x % mod)
    return out


def subst_upper(poly: Mapping[int, int], a: int, b: int, d: int, r: int, mod: int) -> dict[int, int]:
    """P(aX, bX + dY): X^(r-j)Y^j -> a^(r-j) sum_i C(j,i) b^(j-i) d^i X^(r-i)Y^i."""
    if not poly:
        return {}
    a %= mod
    b %= mod
    d %= mod
    jmax = max(poly)
    apow = _powers(a, r, mod)
    bpow = _powers(b, jmax, mod)
    dpow = _powers(d, jmax, mod)
    # index beyond which d^i vanishes
    imax = jmax
    for i, x in enumerate(dpow):
        if x == 0:
            imax = i - 1
            break
    binoms = _binom_table(r, mod)
    out: dict[int, int] = {}
    for j, c in poly.items():
        ca = c * apow[r - j] % mod
        if not ca:
            continue
        if b == 0:
            if j <= imax:
                out[j] = (out.get(j, 0) + ca * dpow[j]) % mod
            continue
        row = binoms[j]
        for i in range(min(j, imax) + 1):
            t = ca * row[i] * bpow[j - i] * dpow[i]
            if t:
                out[i] = (out.get(i, 0) + t) % mod
    return {i: x for i, x in out.items() if x}


def subst_general(poly: Mapping[int, int], k: tuple[int, int, int, int], r: int, mod: int) -> dict[int, int]:
    """P(aX + cY, bX + dY) for k = (a b; c d)."""
    a, b, c, d = (x % mod for x in k)
    if c == 0:
        return subst_upper(poly, a, b, d, r, mod)
    binoms = _binom_table(r, mod)

    def lin_pow(x, y, e):
        # coefficients of (xX + yY)^e indexed by the Y-power
        xp = _powers(x, e, mod)
        yp = _powers(y, e, mod)
        row = binoms[e]
        return [row[i] * xp[e - i] * yp[i] % mod for i in range(e + 1)]

    out: dict[int, int] = {}
    for j, coef in poly.items():
        u = lin_pow(a, c, r - j)
        w = lin_pow(b, d, j)
        for i1, x1 in enumerate(u):
            if not x1:
                continue
            x1c = x1 * coef
            for i2, x2 in enumerate(w):
                if x2:
                    out[i1 + i2] = (out.get(i1 + i2, 0) + x1c * x2) % mod
    return {i: x for i, x in out.items() if x}


def act(k: Matrix, poly: Mapping[int, int], r: int, p: int, n: int, twist: int = 0) -> dict[int, int]:
    """k . P with k in K given exactly; includes det(k)^twist."""
    mod = p**n
    kk = tuple(_mod(x, p, n) for x in k)
    out = subst_general(poly, kk, r, mod)
    if twist:
        det = (kk[0] * kk[3] - kk[1] * kk[2]) % mod
        f = pow(det, twist, mod)
        out = {j: x * f % mod for j, x in out.items() if x * f % mod}
    return out


# Z/p^N-valued functions


@dataclass
class IntFunction:
    """Finite map vertex -> degree-r polynomial over Z/p^N (sparse).

    With n = 1 this is a function with values in V_r (x) D^twist over F_p.
    """

    p: int
    r: int
    n: int
    twist: int = 0
    data: dict = field(default_factory=dict)

    @property
    def mod(self) -> int:
        return self.p**self.n

    def copy(self) -> "IntFunction":
        return IntFunction(self.p, self.r, self.n, self.twist, {v: dict(q) for v, q in self.data.items()})

    def empty(self) -> "IntFunction":
        return IntFunction(self.p, self.r, self.n, self.twist, {})

    def add_term(self, v: TreeVertex, poly: Mapping[int, int], scale: int = 1) -> None:
        mod = self.mod
        cur = self.data.get(v)
        if cur is None:
            cur = {}
        for j, c in poly.items():
            x = (cur.get(j, 0) + scale * c) % mod
            if x:
                cur[j] = x
            else:
                cur.pop(j, None)
        if cur:
            self.data[v] = cur
        else:
            self.data.pop(v, None)

    def __add__(self, other: "IntFunction") -> "IntFunction":
        out = self.copy()
        for v, q in other.data.items():
            out.add_term(v, q)
        return out

    def __sub__(self, other: "IntFunction") -> "IntFunction":
        out = self.copy()
        for v, q in other.data.items():
            out.add_term(v, q, -1)
        return out

    def scale(self, c: int) -> "IntFunction":
        out = self.empty()
        mod = self.mod
        c %= mod
        for v, q in self.data.items():
            nq = {j: x * c % mod for j, x in q.items() if x * c % mod}
            if nq:
                out.data[v] = nq
        return out

    def is_zero(self) -> bool:
        return not self.data

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntFunction):
            return NotImplemented
        return (self.p, self.r, self.n) == (other.p, other.r, other.n) and self.data == other.data

    def place(self, g: Matrix, poly: Mapping[int, int], scale: int = 1) -> None:
        """Add [g, poly] for an arbitrary invertible g."""
        vert, k = canonicalize(g, self.p, self.n)
        if k != (1, 0, 0, 1):
            poly = act(k, poly, self.r, self.p, self.n, self.twist)
        self.add_term(vert, poly, scale)

    def translate(self, g: Matrix) -> "IntFunction":
        """The function [h, v] -> [g h, v]."""
        out = self.empty()
        for v, q in self.data.items():
            out.place(mat_mul(g, vertex_matrix(v, self.p, self.n)), q)
        return out

    # Hecke operator

    def hecke_plus(self, fast: bool = True) -> "IntFunction":
        """sum over lam of [g (p [lam]; 0 1), v(X, -[lam]X + pY)]."""
        p, r, n, mod = self.p, self.r, self.n, self.mod
        out = self.empty()
        for v, q in self.data.items():
            for lam in range(p):
                tl = teichmuller_int(lam, p, n)
                w = subst_upper(q, 1, -tl, p, r, mod)
                if not w:
                    continue
                if fast and v.side == 0:
                    out.add_term(TreeVertex(0, v.depth + 1, v.digits + (lam,)), w)
                else:
                    g = mat_mul(vertex_matrix(v, p, n), (p, tl, 0, 1))
                    out.place(g, w)
        return out

    def hecke_minus(self, fast: bool = True) -> "IntFunction":
        """[g alpha, v(pX, Y)]."""
        p, r, n, mod = self.p, self.r, self.n, self.mod
        out = self.empty()
        for v, q in self.data.items():
            if fast and v.side == 0 and v.depth >= 1:
                # g alpha = p (p^(m-1) mu; 0 1), peel the last digit with a unipotent
                mu = teichmuller_int(v.digits[-1], p, n)
                w = subst_upper(q, p, mu, 1, r, mod)
                if w:
                    out.add_term(TreeVertex(0, v.depth - 1, v.digits[:-1]), w)
                continue
            w = subst_upper(q, p, 0, 1, r, mod)
            if not w:
                continue
            if fast and v == ORIGIN:
                out.add_term(ALPHA, w)
            elif fast and v.side == 1:
                out.add_term(TreeVertex(1, v.depth + 1, v.digits + (0,)), w)
            else:
                out.place(mat_mul(vertex_matrix(v, p, n), (1, 0, 0, p)), w)
        return out

    def hecke(self, which: str = "T", fast: bool = True) -> "IntFunction":
        if which == "T+":
            return self.hecke_plus(fast)
        if which == "T-":
            return self.hecke_minus(fast)
        if which == "T":
            return self.hecke_plus(fast) + self.hecke_minus(fast)
        raise ValueError(f"unknown operator {which!r}")

    def support(self) -> set[TreeVertex]:
        return set(self.data)


def fp_function(p: int, m: int, twist: int, terms: Iterable[tuple[TreeVertex, Mapping[int, int]]] = ()) -> IntFunction:
    f = IntFunction(p, m, 1, twist, {})
    for v, q in terms:
        f.add_term(v, q)
    return f


def hecke_poly(f: IntFunction, coeffs: Iterable[int]) -> IntFunction:
    """sum_k coeffs[k] T^k f (coefficients reduced mod p^N)."""
    out = f.empty()
    cur = f
    for k, c in enumerate(coeffs):
        if k:
            cur = cur.hecke("T")
        if c % f.mod:
            out = out + cur.scale(c)
    return out


# O_E-valued functions


class NonIntegralError(ValueError):
    """A coefficient has negative valuation where integrality is required."""


def _pair_mul(x1: int, y1: int, x2: int, y2: int, p: int) -> tuple[int, int]:
    return x1 * x2 + p * y1 * y2, x1 * y2 + x2 * y1


@dataclass
class TreeFunction:
    """Finite map vertex -> Sym^r over E, as (A + pi B) * pi^(-shift).

    ``prec`` is the absolute precision in pi-units: every coefficient is known
    modulo pi^prec.
    """

    p: int
    r: int
    n: int
    shift: int
    A: IntFunction
    B: IntFunction
    prec: int

    @classmethod
    def zero(cls, p: int, r: int, n: int) -> "TreeFunction":
        return cls(p, r, n, 0, IntFunction(p, r, n), IntFunction(p, r, n), 2 * n)

    @classmethod
    def term(cls, p: int, r: int, n: int, vertex: TreeVertex, poly: Mapping[int, int | ExtScalar], scalar: ExtScalar | None = None) -> "TreeFunction":
        """scalar * [vertex, poly]; poly coefficients may be integers or E-scalars."""
        f = cls.zero(p, r, n)
        ints = {}
        ext = {}
        for j, c in poly.items():
            if isinstance(c, ExtScalar):
                ext[j] = c
            elif c:
                ints[j] = c
        if ints:
            f.A.add_term(vertex, {j: c % f.A.mod for j, c in ints.items()})
        for j, c in ext.items():
            f = f + cls.term(p, r, n, vertex, {j: 1}).scale(c)
        if scalar is not None:
            f = f.scale(scalar)
        return f

    @classmethod
    def from_terms(cls, p: int, r: int, n: int, terms: Iterable[tuple[TreeVertex, Mapping[int, int]]]) -> "TreeFunction":
        f = cls.zero(p, r, n)
        for v, q in terms:
            f.A.add_term(v, {j: c % f.A.mod for j, c in q.items()})
        return f

    def copy(self) -> "TreeFunction":
        return TreeFunction(self.p, self.r, self.n, self.shift, self.A.copy(), self.B.copy(), self.prec)

    def _times_pi(self, k: int) -> tuple[IntFunction, IntFunction]:
        """Numerators multiplied by pi^k (k >= 0)."""
        A, B = self.A, self.B
        p = self.p
        if k % 2:
            A, B = B.scale(p), A
        if k // 2:
            f = p ** (k // 2)
            A, B = A.scale(f), B.scale(f)
        return A, B

    def _aligned(self, e: int) -> tuple[IntFunction, IntFunction]:
        return self._times_pi(e - self.shift)

    def __add__(self, other: "TreeFunction") -> "TreeFunction":
        e = max(self.shift, other.shift)
        A1, B1 = self._aligned(e)
        A2, B2 = other._aligned(e)
        return TreeFunction(self.p, self.r, self.n, e, A1 + A2, B1 + B2, min(self.prec, other.prec))

    def __neg__(self) -> "TreeFunction":
        return TreeFunction(self.p, self.r, self.n, self.shift, self.A.scale(-1), self.B.scale(-1), self.prec)

    def __sub__(self, other: "TreeFunction") -> "TreeFunction":
        return self + (-other)

    def scale(self, s: ExtScalar | int | Fraction) -> "TreeFunction":
        p = self.p
        if not isinstance(s, ExtScalar):
            s = ExtScalar.from_fraction(p, Fraction(s), 2 * self.n + 8)
        if s.zero:
            if s.vpi is None:
                return TreeFunction.zero(p, self.r, self.n)
            raise PrecisionError("scaling by an inexact zero")
        if self.is_zero():
            return TreeFunction(p, self.r, self.n, 0, self.A.empty(), self.B.empty(), self.prec + s.vpi)
        w = s.vpi
        ux, uy = s.unit_pair()
        A = self.A.scale(ux) + self.B.scale(p * uy)
        B = self.A.scale(uy) + self.B.scale(ux)
        out = TreeFunction(p, self.r, self.n, self.shift, A, B, self.prec)
        if w >= 0:
            out.A, out.B = out._times_pi(w)
        else:
            out.shift += -w
        out.prec = min(self.prec + w, self.min_valuation_pi() + w + s.prec, 2 * self.n - out.shift)
        return out

    def translate(self, g: Matrix) -> "TreeFunction":
        return TreeFunction(self.p, self.r, self.n, self.shift, self.A.translate(g), self.B.translate(g), self.prec)

    def translate_by_vertex(self, v: TreeVertex) -> "TreeFunction":
        return self.translate(vertex_matrix(v, self.p, self.n))

    def hecke(self, which: str = "T", fast: bool = True) -> "TreeFunction":
        return TreeFunction(self.p, self.r, self.n, self.shift, self.A.hecke(which, fast), self.B.hecke(which, fast), self.prec)

    # inspection

    def support(self) -> set[TreeVertex]:
        return set(self.A.data) | set(self.B.data)

    def is_zero(self) -> bool:
        return self.A.is_zero() and self.B.is_zero()

    def coeff_pairs(self):
        """Yield (vertex, j, x, y) for non-zero numerators x + y*pi."""
        for v in self.support():
            qa = self.A.data.get(v, {})
            qb = self.B.data.get(v, {})
            for j in set(qa) | set(qb):
                yield v, j, qa.get(j, 0), qb.get(j, 0)

    def coefficient(self, v: TreeVertex, j: int) -> ExtScalar:
        x = self.A.data.get(v, {}).get(j, 0)
        y = self.B.data.get(v, {}).get(j, 0)
        if x == 0 and y == 0:
            return ExtScalar(self.p, self.prec, (), True)
        return ExtScalar.from_pair(self.p, -self.shift, x, y, 2 * self.n)

    def min_valuation_pi(self) -> float:
        """Smallest coefficient valuation in pi-units (inf when zero)."""
        best = math.inf
        cap = 2 * self.n
        for _, _, x, y in self.coeff_pairs():
            w = pair_valuation(self.p, x, y, cap) - self.shift
            best = min(best, w)
        return best

    def worst_coefficient(self):
        best = (math.inf, None)
        cap = 2 * self.n
        for v, j, x, y in self.coeff_pairs():
            w = pair_valuation(self.p, x, y, cap) - self.shift
            if w < best[0]:
                best = (w, (v, j))
        return best

    def residue(self) -> dict:
        """Reduction mod pi: vertex -> {j: residue in F_p}; requires integrality."""
        p = self.p
        e = self.shift
        out: dict = {}
        for v, j, x, y in self.coeff_pairs():
            w = pair_valuation(p, x, y, 2 * self.n) - e
            if w < 0:
                raise NonIntegralError(f"coefficient at {v}, j={j} has valuation {Fraction(w, 2)}")
            if w > 0:
                continue
            # value = (x + y pi) pi^(-e) is a unit here
            if e % 2 == 0:
                res = (x // p ** (e // 2)) % p
            else:
                res = (y // p ** (e // 2)) % p
            if res:
                out.setdefault(v, {})[j] = res
        return out

    def restrict(self, keep) -> "TreeFunction":
        """Sub-function on the vertices/monomials accepted by keep(vertex, j)."""
        out = TreeFunction(self.p, self.r, self.n, self.shift, self.A.empty(), self.B.empty(), self.prec)
        for v, j, x, y in self.coeff_pairs():
            if keep(v, j):
                if x:
                    out.A.add_term(v, {j: x})
                if y:
                    out.B.add_term(v, {j: y})
        return out


def coset_normalize(g: Matrix, poly: Mapping[int, int], p: int, r: int, n: int, twist: int = 0) -> tuple[TreeVertex, dict[int, int]]:
    """(rep, h . poly) with g = rep h, h in KZ and p in Z acting trivially."""
    vert, k = canonicalize(g, p, n)
    return vert, act(k, poly, r, p, n, twist)


def hecke_apply(f, which: str = "T"):
    """T, T+ or T- on a TreeFunction or IntFunction."""
    return f.hecke(which)


def reduce_and_project(f: TreeFunction, target: str, basis) -> IntFunction:
    """Reduce mod pi and push every value through the projection to J_i."""
    from .symmod import jh_factors, project_vector

    import numpy as np

    jf = jh_factors(f.p)[target]
    out = fp_function(f.p, jf.m, jf.twist)
    for v, q in f.residue().items():
        vec = np.zeros(f.r + 1, dtype=np.int64)
        for j, c in q.items():
            vec[j] = c
        img = project_vector(vec, target, basis)
        out.add_term(v, {i: int(c) for i, c in enumerate(img) if c})
    return out


def big_o_compare(f: TreeFunction, g: TreeFunction, s: Fraction | int, margin: int = 2) -> VerificationReport:
    """Pass iff every coefficient of f - g has valuation >= s."""
    s = Fraction(s)
    d = f - g
    need = 2 * s
    if d.prec < need + margin:
        raise PrecisionError(f"precision pi^{d.prec} too low to certify O(p^{s})")
    w, where = d.worst_coefficient()
    passed = w >= need
    witness = None
    if not passed:
        v, j = where
        witness = {"vertex": list(v[:2]) + [list(v.digits)], "monomial": f"X^{f.r - j}Y^{j}", "valuation": Fraction(w, 2)}
    return VerificationReport(
        f"difference is O(p^{s})",
        passed,
        params={"p": f.p, "r": f.r},
        required=s,
        margin=None if w == math.inf else Fraction(w, 2) - s,
        witness=witness,
    )
