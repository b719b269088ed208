#!/usr/bin/env python3
"""Classify p = 5, r = 23, a_p = 5 pi and show the LLC image next to the
surviving Jordan-Holder factors."""

import json

from zigzag_engine.padic import parse_scalar
from zigzag_engine.report import jsonable
from zigzag_engine.zigzag import classify, compute_invariants, consistency_check, llc_forward, ninepart_image


def main() -> None:
    p, r = 5, 23
    ap = parse_scalar("5*pi", p, 80)
    inv = compute_invariants(p, r, ap)
    cl = classify(p, r, ap)
    print("invariants:", json.dumps(jsonable(inv.to_json())))
    print("classification:", json.dumps(jsonable(cl.to_json()), indent=2))
    print("LLC image:", [x.to_json() for x in llc_forward(cl.descriptor)])
    print("assembled:", [x.to_json() for x in ninepart_image(p, inv.window, d_bar=cl.invariants.get("d_bar"))])
    print("consistent:", consistency_check(p, r, ap).passed)


if __name__ == "__main__":
    main()
