"""Exact binomial arithmetic and the residue-class binomial sum congruences.

Every check evaluates its left side as an exact integer and its right side as
a rational number whose denominator is prime to p, then compares the two
modulo the stated power of p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .padic import vp
from .report import PreconditionError, VerificationReport


class BinomRangeWarning(UserWarning):
    """C(n, k) requested with k outside [0, n]."""


def binom_exact(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        warnings.warn(f"C({n},{k}) out of range, using 0", BinomRangeWarning, stacklevel=2)
        return 0
    return math.comb(n, k)


def val_binom(p: int, n: int, k: int) -> int:
    """v_p(C(n, k)) by direct factorisation of the exact value."""
    return vp(binom_exact(n, k), p)


def kummer_carries(p: int, n: int, k: int) -> int:
    """Number of carries when adding k and n-k in base p (Kummer's theorem)."""
    a, b = k, n - k
    carry = count = 0
    while a or b or carry:
        s = a % p + b % p + carry
        carry = 1 if s >= p else 0
        count += carry
        a //= p
        b //= p
    return count


# index ranges, inclusive bounds as functions of r
RANGES = {
    "0<j<r": lambda r: (1, r - 1),
    "1<j<=r-2": lambda r: (2, r - 2),
    "2<j<=r-1": lambda r: (3, r - 1),
    "2<=j<r-1": lambda r: (2, r - 2),
    "2<j<r": lambda r: (3, r - 1),
    "2<j<r-1": lambda r: (3, r - 2),
    "0<=j<=r": lambda r: (0, r),
}


@dataclass(frozen=True)
class SumSpec:
    """Sum of C(j, i) C(r, j) over j in a range with j = cls mod (p-1)."""

    p: int
    r: int
    cls: int
    i: int
    range: str = "0<j<r"

    def indices(self) -> list[int]:
        if self.range not in RANGES:
            raise ValueError(f"unknown range {self.range!r}")
        lo, hi = RANGES[self.range](self.r)
        m = self.p - 1
        return [j for j in range(max(lo, 0), hi + 1) if (j - self.cls) % m == 0]


def residue_class_sum(spec: SumSpec) -> int:
    js = spec.indices()
    if not js:
        warnings.warn(f"empty range in {spec}", BinomRangeWarning, stacklevel=2)
        return 0
    return sum(math.comb(j, spec.i) * math.comb(spec.r, j) for j in js)


def _mod_rational(q: Fraction | int, p: int, e: int) -> int:
    """Image of a p-integral rational in Z/p^e."""
    q = Fraction(q)
    if q.denominator % p == 0:
        raise ValueError(f"denominator of {q} is divisible by {p}")
    m = p**e
    return q.numerator * pow(q.denominator, -1, m) % m


def val_rational(q: Fraction | int, p: int) -> float | int:
    q = Fraction(q)
    if q == 0:
        return math.inf
    return vp(q.numerator, p) - vp(q.denominator, p)


def congruent(lhs: Fraction | int, rhs: Fraction | int, p: int, e: int) -> bool:
    if e <= 0:
        return True
    return _mod_rational(Fraction(lhs) - Fraction(rhs), p, e) == 0


def decompose(p: int, r: int, base: int) -> tuple[int, int]:
    """Return (n, t) with r = base + n(p-1)p^t, t = v(r-base), p not dividing n."""
    d = r - base
    if d <= 0 or d % (p - 1):
        raise PreconditionError(f"r={r} is not {base} + n(p-1)p^t with n > 0")
    t = vp(d, p)
    n = d // ((p - 1) * p**t)
    return n, t


# Lemmas on p^i C(r, i)

_LEMMAS = {"L3.1": (3, 4, 4), "L3.2": (2, 3, 3), "L3.3": (1, 2, 2)}


def check_congruence_lemma(p: int, r: int, which: str) -> VerificationReport:
    """p^i C(r,i) = 0 mod p^(t+k) for all i >= i0 up to r."""
    if which not in _LEMMAS:
        raise ValueError(f"unknown lemma {which!r}")
    base, extra, i0 = _LEMMAS[which]
    if p <= 3:
        raise PreconditionError("p must exceed 3")
    if (r - base) % (p - 1) or r == base:
        raise PreconditionError(f"r={r} is not {base} mod {p - 1} (or r={base})")
    t = vp(r - base, p)
    need = t + extra
    worst = None
    witness = None
    for i in range(i0, r + 1):
        v = i + val_binom(p, r, i)
        if worst is None or v - need < worst:
            worst = v - need
            if v < need:
                witness = {"i": i, "valuation": v}
    passed = witness is None
    return VerificationReport(
        f"{which}: p^i C(r,i) = 0 mod p^(t+{extra}) for i >= {i0}",
        passed,
        params={"p": p, "r": r, "t": t},
        required=need,
        margin=worst,
        witness=witness,
    )


# Sum propositions


def _s(p: int, r: int, cls: int, i: int, rng: str) -> int:
    return residue_class_sum(SumSpec(p, r, cls, i, rng))


def _claims(p: int, r: int, prop_id: str) -> dict[int, list[tuple[str, int, Fraction | int, int]]]:
    """part -> list of (label, lhs, rhs, exponent of the modulus)."""
    C = math.comb
    if prop_id in ("P3.4", "P3.6", "P3.8"):
        n, t = decompose(p, r, 3)
    elif prop_id == "P3.7":
        n, t = decompose(p, r, 2)
    elif prop_id == "P3.5":
        n, t = decompose(p, r, 1)
    else:
        raise ValueError(f"unknown proposition {prop_id!r}")
    out: dict[int, list] = {}
    if prop_id == "P3.4":
        S = lambda i: _s(p, r, 3, i, "0<j<r")
        q = Fraction(3 - r, 1 - p)
        rhs_a = q / 6 * (6 * p * p + 5 * p - 3 * C(2 * p + 1, p - 1)) + q * q / 6 * (
            -3 * p * p - 3 * p + 3 * C(2 * p + 1, p - 1)
        )
        # the same closed form written with C(2p+1, p+2); the two must agree
        rhs_b = q / 6 * (6 * p * p + 5 * p - 3 * C(2 * p + 1, p + 2)) + q * q / 6 * (
            -3 * p * p - 3 * p + 3 * C(2 * p + 1, p + 2)
        )
        out[1] = [("S0", S(0), rhs_a, t + 3), ("S0 (alt binomial)", S(0), rhs_b, t + 3)]
        out[2] = [("S1", S(1), Fraction(p * r * (3 - r), 2), t + 2)]
        out[3] = [("S2", S(2), 0, t + 1)]
        out[4] = [("S3", S(3), Fraction(C(r, 3), 1 - p), t)]
        out[5] = [(f"p^{i} S{i}", p**i * S(i), 0, t + 4) for i in range(4, r + 1)]
    elif prop_id == "P3.5":
        s = r
        S = lambda i: _s(p, s, 1, i, "0<=j<=r")
        out[1] = [("sum", S(0), 1 + n * p ** (t + 1), t + 2)]
        out[2] = [("j-sum", S(1), Fraction(s * (p - 2), p - 1) - s * n * p ** (t + 1), t + 2)]
        out[3] = [(f"p^{i} S{i}", p**i * S(i), 0, t + 2) for i in range(2, s + 1)]
    elif prop_id == "P3.6":
        S = lambda i: _s(p, r, 1, i, "1<j<=r-2")
        out[1] = [("S0", S(0), 3 - r, t + 1)]
        out[2] = [("S1", S(1), 0, t + 1)]
        out[3] = [("S2", S(2), 0, t)]
        out[4] = [("S3", S(3), Fraction(C(r, 3), 1 - p), t)]
        out[5] = [(f"p^{i} S{i}", p**i * S(i), 0, t + 4) for i in range(4, r + 1)]
    elif prop_id == "P3.7":
        S = lambda i: _s(p, r, 2, i, "0<j<r")
        rhs1 = Fraction(p * (2 - r), 2) + Fraction(3 * p * p * (2 - r), 2) - Fraction(p * p * (2 - r) ** 2, 2)
        out[1] = [("S0", S(0), rhs1, t + 3)]
        out[2] = [("S1", S(1), Fraction(p * r * (2 - r), 1 - p), t + 2)]
        out[3] = [("S2", S(2), Fraction(C(r, 2), 1 - p), t + 1)]
        out[4] = [(f"p^{i} S{i}", p**i * S(i), 0, t + 3) for i in range(3, r + 1)]
    elif prop_id == "P3.8":
        S = lambda i: _s(p, r, 2, i, "2<j<=r-1")
        out[1] = [("S0", S(0), 3 - C(r, 2) + Fraction(5 * n * p ** (t + 1), 2), t + 2)]
        out[2] = [("S1", S(1), r * (3 - r), t + 1)]
        out[3] = [("S2", S(2), 0, t + 1)]
        out[4] = [("S3", S(3), Fraction(C(r, 3), p - 1), t + 1)]
        out[5] = [(f"p^{i} S{i}", p**i * S(i), 0, t + 4) for i in range(4, r + 1)]
    return out


PROP_PARTS = {"P3.4": 5, "P3.5": 3, "P3.6": 5, "P3.7": 4, "P3.8": 5}


def _report_from_claims(claim: str, params: dict, items) -> VerificationReport:
    witness = None
    worst = None
    for label, lhs, rhs, e in items:
        diff = Fraction(lhs) - Fraction(rhs)
        v = val_rational(diff, params["p"])
        m = v - e
        if worst is None or m < worst:
            worst = m
        if not congruent(lhs, rhs, params["p"], e) and witness is None:
            witness = {"term": label, "lhs": int(lhs), "rhs": str(rhs), "modulus_exp": e}
    return VerificationReport(
        claim,
        witness is None,
        params=params,
        margin=None if worst in (None, math.inf) else worst,
        witness=witness,
    )


def check_sum_proposition(p: int, r: int, prop_id: str, part: int) -> VerificationReport:
    if p <= 3:
        raise PreconditionError("p must exceed 3")
    nparts = PROP_PARTS.get(prop_id)
    if nparts is None:
        raise ValueError(f"unknown proposition {prop_id!r}")
    if not 1 <= part <= nparts:
        raise ValueError(f"{prop_id} has parts 1..{nparts}")
    claims = _claims(p, r, prop_id)
    items = claims[part]
    rep = _report_from_claims(f"{prop_id}({part})", {"p": p, "r": r, "prop": prop_id, "part": part}, items)
    if prop_id == "P3.4" and part == 1:
        a, b = items[0][2], items[1][2]
        if a != b:
            rep.passed = False
            rep.notes.append("closed forms with C(2p+1,p-1) and C(2p+1,p+2) differ")
        else:
            rep.notes.append("C(2p+1,p-1) = C(2p+1,p+2) form agree")
    return rep


# The beta family


@dataclass(frozen=True)
class BetaFamily:
    p: int
    r: int
    t: int
    b_prime: int
    beta: dict  # j -> integer

    def total(self) -> int:
        return sum(self.beta.values())


def beta_coefficients(p: int, r: int) -> tuple[BetaFamily, VerificationReport]:
    """Build the integers beta_j (j = 2 mod p-1, 2 <= j < r-1) and check them."""
    n, t = decompose(p, r, 3)
    if 2 * p >= r - 1:
        raise PreconditionError(f"2p={2 * p} is not below r-1={r - 1}: beta_(2p) index outside range")
    C = math.comb
    mod = p ** (t + 1)
    b_prime = pow(2, -1, mod)
    inner = [j for j in range(3, r - 1) if (j - 2) % (p - 1) == 0]
    beta = {j: C(r, j) for j in inner if j != 2 * p}
    beta[2] = -sum(b_prime * j * C(r, j) for j in inner)
    beta[2 * p] = -sum(C(r, j) for j in inner if j != 2 * p) - beta[2]
    beta = dict(sorted(beta.items()))
    fam = BetaFamily(p, r, t, b_prime, beta)

    params = {"p": p, "r": r, "t": t}
    children = []
    children.append(
        _report_from_claims(
            "beta(1): beta_j = C(r,j) mod p^t",
            dict(params),
            [(f"beta_{j}", b, C(r, j), t) for j, b in beta.items()],
        )
    )
    for i in range(3):
        children.append(
            _report_from_claims(
                f"beta(2): sum C(j,{i}) beta_j = 0 mod p^(t+{2 - i})",
                dict(params),
                [(f"i={i}", sum(C(j, i) * b for j, b in beta.items()), 0, t + 2 - i)],
            )
        )
    children.append(
        _report_from_claims(
            "beta(3): p^3 sum C(j,3) beta_j = p^3 C(r,3)/(p-1) mod p^(t+3)",
            dict(params),
            [("i=3", p**3 * sum(C(j, 3) * b for j, b in beta.items()), Fraction(p**3 * C(r, 3), p - 1), t + 3)],
        )
    )
    children.append(
        _report_from_claims(
            "beta(4): p^i sum C(j,i) beta_j = 0 mod p^(t+3), i >= 4",
            dict(params),
            [(f"i={i}", p**i * sum(C(j, i) * b for j, b in beta.items()), 0, t + 3) for i in range(4, r + 1)],
        )
    )
    rep = VerificationReport.combine("beta family", children, **params)
    if fam.total() != 0:
        rep.passed = False
        rep.notes.append("sum of beta_j is not exactly 0")
    return fam, rep


def check_all(p: int, r: int) -> list[VerificationReport]:
    """Every lemma/proposition applicable to r, in a fixed order."""
    out = []
    for which, (base, _, _) in _LEMMAS.items():
        if r != base and (r - base) % (p - 1) == 0:
            out.append(check_congruence_lemma(p, r, which))
    for prop, base in (("P3.4", 3), ("P3.5", 1), ("P3.6", 3), ("P3.7", 2), ("P3.8", 3)):
        if r > base and (r - base) % (p - 1) == 0:
            for part in range(1, PROP_PARTS[prop] + 1):
                out.append(check_sum_proposition(p, r, prop, part))
    if r > 3 and (r - 3) % (p - 1) == 0 and 2 * p < r - 1:
        out.append(beta_coefficients(p, r)[1])
    return out


def grid_values(p: int, base: int, ns, ts) -> list[int]:
    return sorted({base + n * (p - 1) * p**t for n in ns for t in ts})
