"""Fixed-tbar sum rate against tbar (and classic OB against t) over several seeds."""

import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from misofdma.config import SimConfig
from misofdma.sim import sweep


def seed_table(base, axis, values, seeds, workers):
    return np.array([[r["ergodic_sum_rate"] for r in
                      sweep(dataclasses.replace(base, seed=s), axis, values, workers)]
                     for s in seeds])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/tbar"))
    ap.add_argument("--K", type=int, default=16)
    ap.add_argument("--t", type=int, default=4)
    ap.add_argument("--slots", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    seeds = range(args.seeds)

    base = SimConfig(K=args.K, t=args.t, n_slots=args.slots, scheme="fixed-tbar")
    tbars = list(range(1, args.t + 1))
    table = seed_table(base, "tbar", tbars, seeds, args.workers)
    with open(args.out / "tbar.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tbar", "mean_sum_rate", "stderr"])
        for i, tb in enumerate(tbars):
            col = table[:, i]
            w.writerow([tb, col.mean(), col.std(ddof=1) / np.sqrt(len(col))])
    print("tbar   ", tbars)
    print("mean   ", np.round(table.mean(axis=0), 2))
    print("best tbar", tbars[int(np.argmax(table.mean(axis=0)))])

    classic = dataclasses.replace(base, scheme="classic-ob", M=16)
    ts = [1, 2, 3, 4, 6]
    table = seed_table(classic, "t", ts, seeds, args.workers)
    print("classic OB, t ", ts)
    print("mean          ", np.round(table.mean(axis=0), 2))


if __name__ == "__main__":
    main()
