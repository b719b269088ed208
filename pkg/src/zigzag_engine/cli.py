"""Command-line front end.

Every subcommand prints one JSON document (``schema: 1``) and exits 0 when
all checks pass, 1 when a check fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import binom, hecke, lemma_verify, symmod, zigzag
from .padic import ExtScalar, PrecisionError, format_scalar, parse_scalar, vp
from .report import PreconditionError, VerificationReport, jsonable

SCHEMA = 1


@dataclass
class RunConfig:
    subcommand: str
    p: int | None = None
    r: int | None = None
    slope: str = "3/2"
    ap: str | None = None
    prec: int = 40
    p_list: list[int] = field(default_factory=list)
    n_list: list[int] = field(default_factory=lambda: [1, 2])
    t_list: list[int] = field(default_factory=lambda: [0, 1])
    output: str | None = None
    jobs: int = 1
    target: str | None = None
    param: int | None = None
    regime: str | None = None
    radius: int = 3
    control: bool = False
    which: str = "T"
    input: str | None = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("jobs must be positive")

    @property
    def n_digits(self) -> int:
        """p-adic digits carried by tree functions."""
        return (self.prec + 1) // 2


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def env_prec() -> int:
    return int(os.environ.get("ZIGZAG_PREC", "40"))


def _raise_prec(cfg: RunConfig) -> None:
    """Precision K must be at least 2(t + 5)."""
    if cfg.p is None or cfg.r is None or cfg.r == 3:
        return
    need = 2 * (vp(cfg.r - 3, cfg.p) + 5)
    if cfg.prec < need:
        warnings.warn(f"precision {cfg.prec} raised to {need}")
        cfg.prec = need


def _ap(cfg: RunConfig) -> ExtScalar:
    if cfg.ap is None:
        raise PreconditionError("--ap is required")
    return parse_scalar(cfg.ap, cfg.p, cfg.prec + 40)


def _instance(cfg: RunConfig) -> lemma_verify.Instance:
    if cfg.regime is not None:
        if cfg.regime not in lemma_verify.REGIMES:
            raise PreconditionError(f"unknown regime {cfg.regime!r}; choose from {sorted(lemma_verify.REGIMES)}")
        inst = lemma_verify.scan_ap(cfg.p, cfg.r, lemma_verify.REGIMES[cfg.regime], prec=cfg.n_digits)
        if inst is None:
            raise PreconditionError(f"no a_p found in regime {cfg.regime} for r = {cfg.r}")
        return inst
    return lemma_verify.Instance(cfg.p, cfg.r, _ap(cfg), cfg.n_digits)


# subcommands


def cmd_classify(cfg: RunConfig) -> tuple[dict, bool]:
    ap = _ap(cfg)
    cl = zigzag.classify(cfg.p, cfg.r, ap, Fraction(cfg.slope), cfg.n_digits)
    out = cl.to_json()
    out["llc_image"] = [x.to_json() for x in zigzag.llc_forward(cl.descriptor)]
    ok = True
    if cl.slope == Fraction(3, 2):
        rep = zigzag.consistency_check(cfg.p, cfg.r, ap, cfg.n_digits)
        out["consistency"] = rep.to_json()
        ok = rep.passed
    return out, ok


def _identity_task(args: tuple[int, int]) -> tuple[tuple[int, int], list[dict], bool]:
    p, r = args
    reps = binom.check_all(p, r)
    return (p, r), [x.to_json() for x in reps], all(reps)


def cmd_check_identities(cfg: RunConfig) -> tuple[dict, bool]:
    ps = cfg.p_list or ([cfg.p] if cfg.p else [5, 7, 11])
    tasks = sorted({(p, r) for p in ps for base in (1, 2, 3) for r in binom.grid_values(p, base, cfg.n_list, cfg.t_list)})
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_identity_task, tasks))
    else:
        results = [_identity_task(t) for t in tasks]
    results.sort(key=lambda x: x[0])
    ok = all(x[2] for x in results)
    return {"grid": [{"p": k[0], "r": k[1], "reports": reps} for k, reps, _ in results], "pass": ok}, ok


def cmd_verify_lemma(cfg: RunConfig) -> tuple[dict, bool]:
    if cfg.target == "bounded-search":
        rep = lemma_verify.lemma62_bounded_search(cfg.p, cfg.radius, control=cfg.control)
        return {"report": rep.to_json()}, rep.passed
    if cfg.target not in lemma_verify.BLOCK_IDS:
        raise PreconditionError(f"unknown lemma {cfg.target!r}")
    inst = _instance(cfg)
    needs = cfg.target in ("chi_prime", "psi", "psi_prime")
    params = [cfg.param] if (cfg.param is not None or not needs) else list(range(1, cfg.p))
    reps = [lemma_verify.verify_telescoping(cfg.target, inst, x) for x in params]
    rep = reps[0] if len(reps) == 1 else VerificationReport.combine(f"{cfg.target} for every parameter", reps)
    return {"instance": inst.describe(), "report": rep.to_json()}, rep.passed


def cmd_verify_prop(cfg: RunConfig) -> tuple[dict, bool]:
    if cfg.target not in lemma_verify.PROP_IDS:
        raise PreconditionError(f"unknown proposition {cfg.target!r}")
    inst = _instance(cfg)
    rep = lemma_verify.verify_section_prop(cfg.target, inst)
    return {"instance": inst.describe(), "report": rep.to_json()}, rep.passed


def read_function(doc: dict, n: int) -> hecke.TreeFunction:
    """{p, r, vertices: [{side, depth, digits, poly: [coefficient strings]}]}."""
    p, r = int(doc["p"]), int(doc["r"])
    f = hecke.TreeFunction.zero(p, r, n)
    for item in doc["vertices"]:
        v = hecke.TreeVertex(int(item["side"]), int(item["depth"]), tuple(int(d) for d in item.get("digits", [])))
        if len(v.digits) != v.depth:
            raise PreconditionError(f"vertex {item} needs exactly depth digits")
        poly = item["poly"]
        if len(poly) != r + 1:
            raise PreconditionError("poly must list r + 1 coefficients (X^r first)")
        coeffs = {j: parse_scalar(str(s), p, 2 * n) for j, s in enumerate(poly) if str(s).strip() not in ("0", "")}
        coeffs = {j: c for j, c in coeffs.items() if not c.zero}
        if coeffs:
            f = f + hecke.TreeFunction.term(p, r, n, v, coeffs)
    return f


def write_function(f: hecke.TreeFunction) -> dict:
    out = []
    for v in sorted(f.support()):
        poly = []
        nonzero = False
        for j in range(f.r + 1):
            c = f.coefficient(v, j)
            poly.append("0" if c.zero else format_scalar(c))
            nonzero |= not c.zero
        if nonzero:
            out.append({"side": v.side, "depth": v.depth, "digits": list(v.digits), "poly": poly})
    return {"p": f.p, "r": f.r, "prec": f.prec, "vertices": out}


def cmd_hecke_apply(cfg: RunConfig) -> tuple[dict, bool]:
    if cfg.input is None:
        raise PreconditionError("--input is required")
    text = sys.stdin.read() if cfg.input == "-" else open(cfg.input).read()
    f = read_function(json.loads(text), cfg.n_digits)
    g = hecke.hecke_apply(f, cfg.which)
    return {"which": cfg.which, "image": write_function(g)}, True


def cmd_q_structure(cfg: RunConfig) -> tuple[dict, bool]:
    rep = symmod.q_structure_report(cfg.p, cfg.r)
    return {"report": rep.to_json()}, rep.passed


COMMANDS = {
    "classify": cmd_classify,
    "check-identities": cmd_check_identities,
    "verify-lemma": cmd_verify_lemma,
    "verify-prop": cmd_verify_prop,
    "hecke-apply": cmd_hecke_apply,
    "q-structure": cmd_q_structure,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zigzag", description="Reduction classifier and verifiers for slope 3/2.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(sp, need_r=True):
        sp.add_argument("--p", type=int, required=True)
        if need_r:
            sp.add_argument("--r", type=int, required=True)
        sp.add_argument("--prec", type=int, default=None, help="pi-adic precision K (default $ZIGZAG_PREC or 40)")
        sp.add_argument("--json", dest="output", default=None, help="also write the report to this path")

    sp = sub.add_parser("classify")
    common(sp)
    sp.add_argument("--ap", required=True, help='e.g. "pi^3*(1 + 2*pi)"')
    sp.add_argument("--slope", default="3/2", choices=["1/2", "1", "3/2"])

    sp = sub.add_parser("check-identities")
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--p-list", type=_ints, default=[])
    sp.add_argument("--n", dest="n_list", type=_ints, default=[1, 2])
    sp.add_argument("--t", dest="t_list", type=_ints, default=[0, 1])
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--prec", type=int, default=None)
    sp.add_argument("--json", dest="output", default=None)

    for name, ids in (("verify-lemma", lemma_verify.BLOCK_IDS + ("bounded-search",)), ("verify-prop", lemma_verify.PROP_IDS)):
        sp = sub.add_parser(name)
        sp.add_argument("target", choices=ids)
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--r", type=int, default=None)
        sp.add_argument("--ap", default=None)
        sp.add_argument("--regime", default=None, help="scan a_p into this regime instead of --ap")
        sp.add_argument("--prec", type=int, default=None)
        sp.add_argument("--json", dest="output", default=None)
        if name == "verify-lemma":
            sp.add_argument("--param", type=int, default=None, help="lambda or mu in F_p^x")
            sp.add_argument("--radius", type=int, default=3)
            sp.add_argument("--control", action="store_true")

    sp = sub.add_parser("hecke-apply")
    sp.add_argument("--input", required=True, help="JSON file, or - for stdin")
    sp.add_argument("--which", default="T", choices=["T", "T+", "T-"])
    sp.add_argument("--prec", type=int, default=None)
    sp.add_argument("--json", dest="output", default=None)

    sp = sub.add_parser("q-structure")
    common(sp)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = {k: v for k, v in vars(ns).items() if v is not None}
    cfg = RunConfig(
        subcommand=d.pop("subcommand"),
        p=d.get("p"),
        r=d.get("r"),
        slope=d.get("slope", "3/2"),
        ap=d.get("ap"),
        prec=d.get("prec", env_prec()),
        p_list=d.get("p_list", []),
        n_list=d.get("n_list", [1, 2]),
        t_list=d.get("t_list", [0, 1]),
        output=d.get("output"),
        jobs=d.get("jobs", 1),
        target=d.get("target"),
        param=d.get("param"),
        regime=d.get("regime"),
        radius=d.get("radius", 3),
        control=d.get("control", False),
        which=d.get("which", "T"),
        input=d.get("input"),
    )
    return cfg


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one configuration; returns (exit status, JSON document)."""
    if cfg.subcommand in ("verify-lemma", "verify-prop") and cfg.target != "bounded-search" and cfg.r is None:
        return 2, {"schema": SCHEMA, "command": cfg.subcommand, "error": "--r is required"}
    _raise_prec(cfg)
    try:
        body, ok = COMMANDS[cfg.subcommand](cfg)
    except (PreconditionError, PrecisionError, ValueError, KeyError) as exc:
        return 2, {"schema": SCHEMA, "command": cfg.subcommand, "error": f"{type(exc).__name__}: {exc}"}
    doc = {"schema": SCHEMA, "command": cfg.subcommand, "pass": ok, **body}
    return (0 if ok else 1), doc


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    status, doc = run(cfg)
    text = json.dumps(jsonable(doc), indent=2)
    print(text)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
