"""Reduction classifier for exceptional weights and the semisimple mod p LLC.

Galois-side objects are built from the mod p cyclotomic character omega,
the level-2 fundamental character omega_2 and unramified characters mu_x.
Automorphic-side objects are pi(r, lam, eta) = ind V_r / (T - lam) twisted
by eta o det.  A twist eta is carried as a pair (nu, e) meaning mu_nu omega^e.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .binom import binom_exact
from .padic import ExtScalar, PrecisionError, valuation, vp
from .report import PreconditionError, VerificationReport

HALF = Fraction(1, 2)


class OutOfScope(PreconditionError):
    """Weight or slope outside the exceptional cases handled here."""


class ConsistencyError(AssertionError):
    """Computed invariants contradict a relation they must satisfy."""


# scalars in F_p-bar


@dataclass(frozen=True)
class ScalarDatum:
    """Either an element of F_p (``value``) or the root pair {x, 1/x} of X^2 - trace X + 1."""

    p: int
    value: int | None = None
    trace: int | None = None

    def __post_init__(self):
        if (self.value is None) == (self.trace is None):
            raise ValueError("give exactly one of value, trace")
        if self.value is not None:
            object.__setattr__(self, "value", self.value % self.p)
        else:
            object.__setattr__(self, "trace", self.trace % self.p)

    @classmethod
    def of(cls, p: int, x: int) -> "ScalarDatum":
        return cls(p, value=x)

    @classmethod
    def root_pair(cls, p: int, trace: int) -> "ScalarDatum":
        return cls(p, trace=trace)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def minpoly(self) -> list[int]:
        """Coefficients, highest degree first."""
        if self.value is not None:
            return [1, -self.value % self.p]
        return [1, -self.trace % self.p, 1]

    def roots(self) -> list[int] | None:
        """Roots in F_p, or None when the minimal polynomial is irreducible."""
        if self.value is not None:
            return [self.value]
        p, d = self.p, self.trace
        rs = sorted({x for x in range(1, p) if (x * x - d * x + 1) % p == 0})
        return rs or None

    def inverse(self) -> "ScalarDatum":
        if self.value is not None:
            if self.value == 0:
                raise ZeroDivisionError("inverse of 0 in F_p")
            return ScalarDatum(self.p, value=pow(self.value, -1, self.p))
        return self

    def key(self) -> tuple:
        return ("value", self.value) if self.value is not None else ("trace", self.trace)

    def to_json(self) -> dict:
        if self.value is not None:
            return {"value": self.value}
        return {"minpoly": self.minpoly(), "roots": self.roots(), "irreducible": self.roots() is None}


@dataclass(frozen=True)
class Twist:
    """mu_nu * omega^e."""

    p: int
    nu: int = 1
    e: int = 0

    def __post_init__(self):
        if self.nu % self.p == 0:
            raise ValueError("unramified part must be non-zero")
        object.__setattr__(self, "nu", self.nu % self.p)
        object.__setattr__(self, "e", self.e % (self.p - 1))

    def times_omega(self, k: int) -> "Twist":
        return Twist(self.p, self.nu, self.e + k)

    def to_json(self) -> dict:
        return {"unramified": self.nu, "omega_power": self.e}


# Galois side


@dataclass(frozen=True)
class ReductionDescriptor:
    """ind(omega_2^c) (x) eta, or (mu_lam omega^a + mu_(1/lam) omega^b) (x) eta."""

    p: int
    kind: str
    c: int | None = None
    a: int | None = None
    b: int | None = None
    scalar: ScalarDatum | None = None
    eta: Twist | None = None

    def __post_init__(self):
        p = self.p
        if self.eta is None:
            object.__setattr__(self, "eta", Twist(p))
        if self.kind == "irreducible":
            if self.c is None or self.c % (p + 1) == 0:
                raise ValueError("irreducible exponent must not be divisible by p + 1")
            object.__setattr__(self, "c", self.c % (p * p - 1))
        elif self.kind == "reducible":
            if self.a is None or self.b is None or self.scalar is None:
                raise ValueError("reducible descriptor needs a, b and a scalar")
            if self.scalar.is_zero:
                raise ValueError("reducible scalar must be non-zero")
            object.__setattr__(self, "a", self.a % (p - 1))
            object.__setattr__(self, "b", self.b % (p - 1))
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def irreducible(cls, p: int, c: int, eta: Twist | None = None) -> "ReductionDescriptor":
        return cls(p, "irreducible", c=c, eta=eta)

    @classmethod
    def reducible(cls, p: int, a: int, b: int, scalar: ScalarDatum, eta: Twist | None = None) -> "ReductionDescriptor":
        return cls(p, "reducible", a=a, b=b, scalar=scalar, eta=eta)

    def to_json(self) -> dict:
        if self.kind == "irreducible":
            return {"kind": "irreducible", "c": self.c, "eta": self.eta.to_json(), "text": f"ind(omega_2^{self.c})"}
        return {
            "kind": "reducible",
            "a": self.a,
            "b": self.b,
            "scalar": self.scalar.to_json(),
            "eta": self.eta.to_json(),
            "text": f"mu_lam omega^{self.a} + mu_(1/lam) omega^{self.b}",
        }


# automorphic side


@dataclass(frozen=True)
class SmoothRepDescriptor:
    """pi(r, lam, eta) with 0 <= r <= p - 1."""

    p: int
    r: int
    scalar: ScalarDatum
    eta: Twist

    def __post_init__(self):
        if not 0 <= self.r <= self.p - 1:
            raise ValueError("r must lie in [0, p - 1]")

    @property
    def supersingular(self) -> bool:
        return self.scalar.is_zero

    @property
    def corner(self) -> bool:
        """(r, lam) = (0, +-1) or (p-1, +-1), where pi is not irreducible."""
        if self.r not in (0, self.p - 1):
            return False
        if self.scalar.value is not None:
            return self.scalar.value in (1, self.p - 1)
        rs = self.scalar.roots() or []
        return any(x in (1, self.p - 1) for x in rs)

    def key(self) -> tuple:
        """Invariant under the standard isomorphisms between these representations."""
        p = self.p
        if self.supersingular:
            forms = []
            for r, e in ((self.r, self.eta.e), (p - 1 - self.r, self.eta.e + self.r)):
                for nu in (self.eta.nu, (-self.eta.nu) % p):
                    forms.append((r, 0, nu, e % (p - 1)))
            return ("ss",) + min(forms)
        r = 0 if self.r == p - 1 else self.r
        return ("ps", r, self.scalar.key(), self.eta.nu, self.eta.e)

    def to_json(self) -> dict:
        return {"r": self.r, "scalar": self.scalar.to_json(), "eta": self.eta.to_json(), "corner": self.corner}


def _image_key(reps) -> tuple:
    return tuple(sorted(Counter(x.key() for x in reps).items()))


def same_image(xs, ys) -> bool:
    """Equality of two LLC images as multisets up to isomorphism."""
    return _image_key(xs) == _image_key(ys)


def llc_forward(d: ReductionDescriptor) -> list[SmoothRepDescriptor]:
    p = d.p
    if d.kind == "irreducible":
        # ind(omega_2^c) = ind(omega_2^(r+1)) (x) omega^k with 1 <= r + 1 <= p
        r1 = d.c % (p + 1)
        k = (d.c - r1) // (p + 1)
        return [SmoothRepDescriptor(p, r1 - 1, ScalarDatum.of(p, 0), d.eta.times_omega(k))]
    r = (d.a - d.b - 1) % (p - 1)
    eta = d.eta.times_omega(d.b)
    lam = d.scalar
    r2 = (p - 3 - r) % (p - 1)
    return [
        SmoothRepDescriptor(p, r, lam, eta),
        SmoothRepDescriptor(p, r2, lam.inverse(), eta.times_omega(r + 1)),
    ]


def llc_inverse(reps: list[SmoothRepDescriptor]) -> ReductionDescriptor:
    if not reps:
        raise ValueError("empty input")
    p = reps[0].p
    if len(reps) == 1:
        x = reps[0]
        if not x.supersingular:
            raise ValueError("a single representation must be supersingular")
        return ReductionDescriptor.irreducible(p, x.r + 1, x.eta)
    if len(reps) != 2:
        raise ValueError("expected one or two representations")
    for first, second in (reps, reps[::-1]):
        if first.supersingular:
            continue
        eta0 = Twist(p, first.eta.nu, 0)
        cand = ReductionDescriptor.reducible(p, first.r + 1 + first.eta.e, first.eta.e, first.scalar, eta0)
        if same_image(llc_forward(cand), reps):
            return cand
    raise ValueError("pair is not in the image of the correspondence")


def llc_map(x, direction: str = "forward"):
    if direction == "forward":
        if not isinstance(x, ReductionDescriptor):
            raise TypeError("forward input must be a Galois descriptor")
        return llc_forward(x)
    if direction == "inverse":
        if isinstance(x, SmoothRepDescriptor):
            x = [x]
        return llc_inverse(list(x))
    raise ValueError(f"unknown direction {direction!r}")


# invariants and classification


def _pad(p: int, a: ExtScalar, k: int) -> ExtScalar:
    """Treat the known digits of a as exact, extended to k digits."""
    if a.zero:
        raise PreconditionError("a_p must be non-zero")
    return ExtScalar.from_pair(p, a.vpi, *a.unit_pair(), k)


def _ratio(p: int, ap: ExtScalar, X: Fraction | int, k: int) -> ExtScalar:
    """(a_p^2 - X) / (p a_p)."""
    num = ap * ap - ExtScalar.from_fraction(p, X, k)
    if num.zero:
        raise PrecisionError("cancellation exhausts the available precision")
    return num / (ExtScalar.from_int(p, p, k) * ap)


def _residue(x: ExtScalar) -> int:
    if x.zero or x.vpi > 0:
        return 0
    if x.vpi < 0:
        raise ValueError("residue of a non-integral element")
    return x.residue()


def regime_window(tau: Fraction, t: int) -> str:
    """One of the seven windows of the nine-part picture."""
    if tau < t:
        return "tau<t"
    if tau == t:
        return "tau=t"
    if tau < t + HALF:
        return "t<tau<t+1/2"
    if tau == t + HALF:
        return "tau=t+1/2"
    if tau < t + 1:
        return "t+1/2<tau<t+1"
    if tau == t + 1:
        return "tau=t+1"
    return "tau>t+1"


WINDOWS = ("tau<t", "tau=t", "t<tau<t+1/2", "tau=t+1/2", "t+1/2<tau<t+1", "tau=t+1", "tau>t+1")


def coarse_regime(tau: Fraction, t: int) -> str:
    if tau < t:
        return "tau<t"
    if tau == t:
        return "tau=t"
    if tau < t + 1:
        return "t<tau<t+1"
    if tau == t + 1:
        return "tau=t+1"
    return "tau>t+1"


@dataclass
class InvariantBundle:
    p: int
    r: int
    b: int
    t: int
    n: int
    c: ExtScalar
    tau: Fraction
    c_tilde: ExtScalar
    tau_tilde: Fraction
    regime: str
    window: str
    checks: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "b": self.b,
            "t": self.t,
            "n": self.n,
            "tau": self.tau,
            "tau_tilde": self.tau_tilde,
            "regime": self.regime,
            "window": self.window,
            "c_leading_digits": list(self.c.digits[:6]),
            "c_vpi": self.c.vpi,
        }


def tau_relation_checks(tau: Fraction, tau_tilde: Fraction, t: int) -> list[VerificationReport]:
    h = t + HALF
    items = [
        ("tau~ < t+1/2 implies tau = tau~", tau_tilde >= h or tau == tau_tilde),
        ("tau~ >= t+1/2 implies tau >= t+1/2", tau_tilde < h or tau >= h),
        ("tau < t+1/2 implies tau~ = tau", tau >= h or tau == tau_tilde),
        ("tau >= t+1/2 implies tau~ >= t+1/2", tau < h or tau_tilde >= h),
    ]
    return [VerificationReport(name, ok, {"tau": tau, "tau_tilde": tau_tilde, "t": t}) for name, ok in items]


def default_prec() -> int:
    """p-adic digits N from the pi-adic precision K in $ZIGZAG_PREC (default 40)."""
    import os

    return (int(os.environ.get("ZIGZAG_PREC", "40")) + 1) // 2


def compute_invariants(p: int, r: int, ap: ExtScalar, prec: int | None = None) -> InvariantBundle:
    """b, t, n, c, tau, c~, tau~ for slope 3/2, with the tau/tau~ relations asserted."""
    if p < 5:
        raise PreconditionError("need p >= 5")
    if ap.zero or ap.vpi != 3:
        raise PreconditionError("need v(a_p) = 3/2")
    if (r - 3) % (p - 1) or r <= 3:
        raise PreconditionError("need r = 3 mod (p - 1) and r > 3")
    prec = default_prec() if prec is None else prec
    k = 2 * prec + 40
    ap = _pad(p, ap, k)
    t = vp(r - 3, p)
    n = (r - 3) // ((p - 1) * p**t)
    c = _ratio(p, ap, (r - 2) * binom_exact(r - 1, 2) * p**3, k)
    ct = _ratio(p, ap, binom_exact(r, 3) * p**3, k)
    tau, tau_t = valuation(c), valuation(ct)
    checks = tau_relation_checks(tau, tau_t, t)
    if not all(checks):
        bad = [x.claim for x in checks if not x]
        raise ConsistencyError(f"tau/tau~ relations violated: {bad}")
    return InvariantBundle(p, r, 3, t, n, c, tau, ct, tau_t, coarse_regime(tau, t), regime_window(tau, t), checks)


@dataclass
class Classification:
    slope: Fraction
    branch: int
    label: str
    descriptor: ReductionDescriptor
    invariants: dict
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "branch": self.branch,
            "label": self.label,
            "descriptor": self.descriptor.to_json(),
            "invariants": self.invariants,
            "notes": self.notes,
        }


SLOPES = (HALF, Fraction(1), Fraction(3, 2))


def _check_exceptional(p: int, r: int, slope: Fraction, ap: ExtScalar) -> int:
    if slope not in SLOPES:
        raise OutOfScope(f"slope {slope} not handled")
    if p < 5 and slope == Fraction(3, 2):
        raise OutOfScope("slope 3/2 needs p >= 5")
    b = int(2 * slope)
    if (r - b) % (p - 1):
        raise OutOfScope(f"r = {r} is not exceptional for slope {slope} (need r = {b} mod {p - 1})")
    if r <= b:
        raise OutOfScope(f"need r > {b}")
    if ap.zero or Fraction(ap.vpi, 2) != slope:
        raise PreconditionError(f"v(a_p) must equal the slope {slope}")
    return b


def classify(p: int, r: int, ap: ExtScalar, slope: Fraction | str = Fraction(3, 2), prec: int | None = None) -> Classification:
    """Reduction of the crystalline representation for an exceptional weight."""
    slope = Fraction(slope)
    b = _check_exceptional(p, r, slope, ap)
    prec = default_prec() if prec is None else prec
    k = 2 * prec + 40
    notes: list[str] = []
    if slope == Fraction(3, 2):
        inv = compute_invariants(p, r, ap, prec)
        t, tau, c = inv.t, inv.tau, inv.c
        if r == p + 2:
            notes.append("r = p + 2: this weight is covered by an earlier, externally known result")
        if tau < t:
            return Classification(slope, 1, "tau<t", ReductionDescriptor.irreducible(p, b + 1), inv.to_json(), notes)
        if tau == t:
            lam1 = _residue(ExtScalar.from_fraction(p, Fraction(b, b - r), k) * c)
            d = ReductionDescriptor.reducible(p, b, 1, ScalarDatum.of(p, lam1))
            return Classification(slope, 2, "tau=t", d, {**inv.to_json(), "lambda1": lam1}, notes)
        if tau < t + 1:
            return Classification(slope, 3, "t<tau<t+1", ReductionDescriptor.irreducible(p, b + p), inv.to_json(), notes)
        dbar = _residue(ExtScalar.from_fraction(p, Fraction(b - 1, (b - 1 - r) * (b - r) * p), k) * c)
        d = ReductionDescriptor.reducible(p, b - 1, 2, ScalarDatum.root_pair(p, dbar))
        return Classification(slope, 4, "tau>=t+1", d, {**inv.to_json(), "d_bar": dbar}, notes)
    apk = _pad(p, ap, k)
    if slope == HALF:
        t = vp(1 - r, p)
        x = _ratio(p, apk, r * p, k)
        tau = valuation(x)
        info = {"p": p, "r": r, "b": b, "t": t, "tau": tau}
        if tau < t:
            return Classification(slope, 1, "tau<t", ReductionDescriptor.irreducible(p, b + 1), info, notes)
        tr = _residue(ExtScalar.from_fraction(p, Fraction(1, 1 - r), k) * x)
        d = ReductionDescriptor.reducible(p, b, 1, ScalarDatum.root_pair(p, tr))
        return Classification(slope, 2, "tau>=t", d, {**info, "trace": tr}, notes)
    t = vp(2 - r, p)
    x = _ratio(p, apk, binom_exact(r, 2) * p * p, k)
    tau = valuation(x)
    info = {"p": p, "r": r, "b": b, "t": t, "tau": tau}
    if tau < t:
        return Classification(slope, 1, "tau<t", ReductionDescriptor.irreducible(p, b + 1), info, notes)
    if tau == t:
        lam = _residue(ExtScalar.from_fraction(p, Fraction(2, 2 - r), k) * x)
        d = ReductionDescriptor.reducible(p, b, 1, ScalarDatum.of(p, lam))
        return Classification(slope, 2, "tau=t", d, {**info, "lambda": lam}, notes)
    return Classification(slope, 3, "tau>t", ReductionDescriptor.irreducible(p, b + p), info, notes)


# the nine-part table


def ninepart_expectation(window: str) -> dict[str, str]:
    """Status of F_1, F_2, F_3 in a window of the tau line.

    Values: "0" (vanishes), "ind J/(poly)" (quotient of that presentation),
    "nonzero" (survives, no presentation stated) or "not asserted".
    """
    table = {
        "tau<t": {"F1": "nonzero", "F2": "0", "F3": "0"},
        "tau=t": {"F1": "ind J1/(T - 1/lambda1)", "F2": "ind J2/(T - lambda1)", "F3": "0"},
        "t<tau<t+1/2": {"F1": "0", "F2": "nonzero", "F3": "not asserted"},
        "tau=t+1/2": {"F1": "0", "F2": "ind J2/T", "F3": "ind J3/T"},
        "t+1/2<tau<t+1": {"F1": "0", "F2": "0", "F3": "ind J3/T"},
        "tau=t+1": {"F1": "0", "F2": "0", "F3": "ind J3/(T^2 - d T + 1)"},
        "tau>t+1": {"F1": "0", "F2": "0", "F3": "ind J3/(T^2 + 1)"},
    }
    if window not in table:
        raise ValueError(f"unknown window {window!r}")
    return dict(table[window])


# J_i = V_m (x) D^twist as (m, omega power)
_JH = {"F1": lambda p: (p - 4, 3), "F2": lambda p: (1, 1), "F3": lambda p: (p - 2, 2)}


def ninepart_image(p: int, window: str, lambda1: int | None = None, d_bar: int | None = None) -> list[SmoothRepDescriptor]:
    """Semisimple image assembled from the surviving factors of the table.

    A lone survivor without a stated presentation is supersingular, i.e.
    ind J/T; two factors presented as quotients by T form the same
    supersingular representation, so only one is kept.
    """
    exp = ninepart_expectation(window)
    out: list[SmoothRepDescriptor] = []
    zero = ScalarDatum.of(p, 0)
    for name in ("F1", "F2", "F3"):
        status = exp[name]
        m, e = _JH[name](p)
        eta = Twist(p, 1, e)
        if status in ("0", "not asserted"):
            continue
        if status in ("nonzero", "ind J2/T", "ind J3/T"):
            rep = SmoothRepDescriptor(p, m, zero, eta)
            if not any(x.key() == rep.key() for x in out):
                out.append(rep)
        elif status == "ind J1/(T - 1/lambda1)":
            out.append(SmoothRepDescriptor(p, m, ScalarDatum.of(p, lambda1).inverse(), eta))
        elif status == "ind J2/(T - lambda1)":
            out.append(SmoothRepDescriptor(p, m, ScalarDatum.of(p, lambda1), eta))
        else:
            tr = 0 if status.endswith("(T^2 + 1)") else d_bar
            pair = ScalarDatum.root_pair(p, tr)
            out.extend([SmoothRepDescriptor(p, m, pair, eta), SmoothRepDescriptor(p, m, pair.inverse(), eta)])
    return out


def consistency_check(p: int, r: int, ap: ExtScalar, prec: int | None = None) -> VerificationReport:
    """LLC image of the classified reduction equals the nine-part assembly."""
    cl = classify(p, r, ap, Fraction(3, 2), prec)
    inv = compute_invariants(p, r, ap, prec)
    img = llc_forward(cl.descriptor)
    expected = ninepart_image(p, inv.window, cl.invariants.get("lambda1"), cl.invariants.get("d_bar"))
    ok = same_image(img, expected)
    return VerificationReport(
        "LLC image of the classification matches the surviving factors",
        ok,
        {"p": p, "r": r, "window": inv.window, "branch": cl.branch},
        witness=None if ok else {"llc": [x.to_json() for x in img], "assembled": [x.to_json() for x in expected]},
    )
