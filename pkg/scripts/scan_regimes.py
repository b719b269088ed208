#!/usr/bin/env python3
"""Find one a_p per regime for each weight, then verify every applicable block
and section proposition on it.

    python3 scripts/scan_regimes.py --p 5 --r 23 43 103
"""

import argparse
import time

from zigzag_engine.lemma_verify import (
    BLOCK_IDS,
    PROP_IDS,
    REGIMES,
    block_precondition,
    prop_precondition,
    scan_ap,
    verify_section_prop,
    verify_telescoping,
)
from zigzag_engine.report import PreconditionError
from zigzag_engine.zigzag import classify


def applicable(check, ids, inst):
    out = []
    for x in ids:
        try:
            check(x, inst)
        except PreconditionError:
            continue
        out.append(x)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=5)
    ap.add_argument("--r", type=int, nargs="+", default=[23])
    ap.add_argument("--max-len", type=int, default=8)
    args = ap.parse_args()

    for r in args.r:
        for name, want in REGIMES.items():
            t0 = time.perf_counter()
            inst = scan_ap(args.p, r, want, max_len=args.max_len)
            if inst is None:
                print(f"p={args.p} r={r} {name:10s} no a_p found")
                continue
            digits = "".join(map(str, inst.ap.digits[:6]))
            blocks = []
            for b in applicable(block_precondition, BLOCK_IDS, inst):
                rep = verify_telescoping(b, inst, param=1)
                blocks.append(f"{b}:{'ok' if rep.passed else 'FAIL'}(m={rep.margin})")
            props = []
            for pid in applicable(prop_precondition, PROP_IDS, inst):
                rep = verify_section_prop(pid, inst)
                props.append(f"{pid}:{'ok' if rep.passed else 'FAIL'}")
            branch = classify(args.p, r, inst.ap).branch
            dt = time.perf_counter() - t0
            print(
                f"p={args.p} r={r} {name:10s} a_p=pi^3*[{digits}...] t={inst.t} tau={inst.tau} "
                f"tau~={inst.tau_tilde} branch={branch} ({dt:.2f} s)"
            )
            print("    blocks: " + " ".join(blocks))
            print("    props:  " + " ".join(props))


if __name__ == "__main__":
    main()
