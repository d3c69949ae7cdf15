"""Two-user rate region per scheme over a grid of target splits."""

import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from misofdma.config import SimConfig
from misofdma.sim import rate_region

SCHEMES = {"exhaustive-oracle": {}, "alg1-waterfill": {}, "fixed-tbar": {"tbar": 1},
           "classic-ob": {}}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/region"))
    ap.add_argument("--slots", type=int, default=5000)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    f = np.linspace(0.05, 0.95, args.points)
    grid = [(x, 1 - x) for x in f]
    base = SimConfig(K=2, t=2, M=8, n_slots=args.slots)
    with open(args.out / "region.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "phi_1", "R_1", "R_2"])
        for scheme, extra in SCHEMES.items():
            pairs = rate_region(dataclasses.replace(base, scheme=scheme, **extra), grid,
                                args.workers)
            for (p1, _), (r1, r2) in zip(grid, pairs):
                w.writerow([scheme, p1, r1, r2])
            print(scheme, [(round(a, 1), round(b, 1)) for a, b in pairs])


if __name__ == "__main__":
    main()
