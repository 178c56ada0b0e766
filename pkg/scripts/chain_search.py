#!/usr/bin/env python3
"""Grid search plus Newton polish for symmetric chain configurations.

    python3 scripts/chain_search.py configs/stack_2p2.json --H1 0.3 0.45 0.6 --grid 8

For each lower pressure H1 the shooting residual is scanned on a grid of
(center, phi, lengths...), the best seeds are polished by `realize`, and one
JSON line per pressure is printed with the best residual reached.
"""

import argparse
import itertools
import json
import sys

import numpy as np

from dbubble.config import RealizeSpec, load_spec, realize, shooting_residual
from dbubble.errors import DbubbleError
from dbubble.junctions import RegionPressures


def scan(spec, grid, lmax):
    k = len(spec.tree.chain()) - 1
    axes = [np.linspace(-4.0, 0.5, grid), np.linspace(0.15, 2.9, grid)]
    axes += [np.geomspace(0.05, lmax, max(grid // 2, 3))] * (k - 1)
    seeds = []
    for u in itertools.product(*axes):
        r = shooting_residual(spec, u)
        if r is not None:
            seeds.append((float(np.linalg.norm(r)), u))
    seeds.sort(key=lambda s: s[0])
    return seeds


def polish(spec, u, max_iter):
    d = spec.to_dict()
    d["shooting"] = {"center": u[0], "phi": u[1], "lengths": list(u[2:])}
    try:
        c = realize(RealizeSpec.from_dict(d), max_iter=max_iter, strict=False)
    except DbubbleError:
        return None
    return c


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--H1", type=float, nargs="+", required=True)
    ap.add_argument("--H2", type=float, default=1.0)
    ap.add_argument("--grid", type=int, default=8)
    ap.add_argument("--lmax", type=float, default=5.0)
    ap.add_argument("--polish", type=int, default=6, help="seeds handed to Newton")
    ap.add_argument("--max-iter", type=int, default=40)
    args = ap.parse_args(argv)
    base = load_spec(args.spec)
    for h1 in args.H1:
        spec = RealizeSpec(base.tree, base.n, RegionPressures(h1, args.H2))
        seeds = scan(spec, args.grid, args.lmax)
        best = None
        for _, u in seeds[: args.polish]:
            c = polish(spec, [float(v) for v in u], args.max_iter)
            if c is not None and (best is None or c.max_residual < best.max_residual):
                best = c
        row = {"H1": h1, "H2": args.H2, "seeds": len(seeds)}
        if best is not None:
            row.update(residual=best.max_residual, converged=best.converged, shooting=best.shooting)
        print(json.dumps(row), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
