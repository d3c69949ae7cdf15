"""Ergodic sum rate, operation counts and feedback per scheme against K."""

import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from misofdma.config import SimConfig
from misofdma.sim import sweep

SCHEMES = {"exhaustive-oracle": {}, "alg1-waterfill": {}, "alg1-uniform": {},
           "fixed-tbar": {"tbar": 1}, "classic-ob": {}}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/schemes"))
    ap.add_argument("--Ks", default="2,3,4,6")
    ap.add_argument("--t", type=int, default=2)
    ap.add_argument("--M", type=int, default=8)
    ap.add_argument("--slots", type=int, default=2000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    Ks = [int(k) for k in args.Ks.split(",")]

    base = SimConfig(t=args.t, M=args.M, n_slots=args.slots)
    with open(args.out / "schemes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "K", "mean_sum_rate", "stderr", "allocation_ops_per_slot",
                    "feedback_per_user_per_slot"])
        for scheme, extra in SCHEMES.items():
            cfg = dataclasses.replace(base, scheme=scheme, **extra)
            runs = [sweep(dataclasses.replace(cfg, seed=s), "K", Ks, args.workers)
                    for s in range(args.seeds)]
            for i, K in enumerate(Ks):
                rates = np.array([r[i]["ergodic_sum_rate"] for r in runs])
                row = runs[0][i]
                w.writerow([scheme, K, rates.mean(), rates.std(ddof=1) / np.sqrt(len(rates)),
                            row["ops_per_slot"]["allocation"], row["feedback_per_user_per_slot"]])
            print(scheme, np.round([np.mean([r[i]["ergodic_sum_rate"] for r in runs])
                                    for i in range(len(Ks))], 2))


if __name__ == "__main__":
    main()
