"""Command-line front end: ``run``, ``sweep``, ``rate-region`` and ``verify``.

Exit codes: 0 ok, 1 usage, 2 configuration or I/O, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SimConfig, apply_overrides, load_config
from .errors import ConfigError
from .sim import SWEEP_AXES, rate_region, run, sweep

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("misofdma")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Command:
    subcommand: str
    config: SimConfig
    out: Path | None = None
    axis: str | None = None
    values: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    phi_grid: list = field(default_factory=list)
    workers: int = 1
    oracle_slots: int = 200


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="misofdma", description="MISO-OFDMA adaptive allocation simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, out_required=True):
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--out", type=Path, required=out_required, help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--slots", type=int, help="number of slots per run")

    common(sub.add_parser("run", help="one adaptive run; writes trace.csv and summary.json"))
    p = sub.add_parser("sweep", help="one summary row per axis value")
    common(p)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma separated axis values")
    p.add_argument("--seeds", help="comma separated seeds to average over")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("rate-region", help="two-user rate pairs over target splits")
    common(p)
    p.add_argument("--phi", action="append", default=[], metavar="F1,F2",
                   help="target split of user 1 and 2 (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("verify", help="oracle equivalence and invariant suite")
    common(p, out_required=False)
    return parser


def _number_list(text: str, kind=float) -> list:
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse list {text!r}") from exc


def parse_args(argv) -> Command:
    """Parse and validate. Raises UsageError or ConfigError."""
    ns = build_parser().parse_args(argv)
    cfg = load_config(ns.config) if ns.config is not None else SimConfig()
    cfg = apply_overrides(cfg, ns.overrides)
    if ns.seed is not None:
        cfg = dataclasses.replace(cfg, seed=ns.seed)
    if ns.slots is not None:
        cfg = dataclasses.replace(cfg, n_slots=ns.slots)
    cmd = Command(ns.subcommand, cfg, ns.out)
    if ns.subcommand == "sweep":
        kind = float if SWEEP_AXES[ns.axis] == "snr_db" else int
        cmd.axis = ns.axis
        cmd.values = _number_list(ns.values, kind)
        if not cmd.values:
            raise UsageError("--values is empty")
        cmd.seeds = _number_list(ns.seeds, int) if ns.seeds else [cfg.seed]
        cmd.workers = ns.workers
        # surface bad axis values before any slot runs
        from .sim import sweep_configs
        sweep_configs(cfg, cmd.axis, cmd.values)
    elif ns.subcommand == "rate-region":
        grid = [tuple(_number_list(x)) for x in ns.phi] or [(0.5, 0.5), (0.7, 0.3), (0.9, 0.1),
                                                              (0.3, 0.7), (0.1, 0.9)]
        cmd.phi_grid = grid
        cmd.workers = ns.workers
        cfg = dataclasses.replace(cfg, K=2, phi=grid[0])
        cmd.config = cfg
    elif ns.subcommand == "verify" and ns.slots is not None:
        cmd.oracle_slots = ns.slots
    if ns.subcommand != "verify":
        cfg.validate()
    return cmd


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from exc


def _outdir(cmd: Command) -> Path:
    try:
        cmd.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create {cmd.out}: {exc.strerror}") from exc
    return cmd.out


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _exec_run(cmd: Command) -> int:
    out = _outdir(cmd)
    trace = run(cmd.config)
    try:
        trace.write_csv(out / "trace.csv")
    except OSError as exc:
        raise ConfigError(f"cannot write {out / 'trace.csv'}: {exc.strerror}") from exc
    _write(out / "summary.json", _json(trace.summary()))
    s = trace.summary()
    if "ergodic_sum_rate" in s:
        print(f"sum rate {s['ergodic_sum_rate']:.4f} bit/s/Hz over all subcarriers, "
              f"mean power {s['mean_power']:.4f} W, {s['n_slots']} slots")
    return EXIT_OK


def _exec_sweep(cmd: Command) -> int:
    out = _outdir(cmd)
    per_seed = [sweep(dataclasses.replace(cmd.config, seed=s), cmd.axis, cmd.values, cmd.workers)
                for s in cmd.seeds]
    rows = []
    for i, v in enumerate(cmd.values):
        runs = [rs[i] for rs in per_seed]
        rates = np.array([r["ergodic_sum_rate"] for r in runs])
        row = dict(runs[0]) if len(runs) == 1 else {
            "ergodic_sum_rate": float(rates.mean()),
            "sum_rate_stderr": float(rates.std(ddof=1) / np.sqrt(len(rates))),
            "user_rates": np.mean([r["user_rates"] for r in runs], axis=0).tolist(),
            "mean_power": float(np.mean([r["mean_power"] for r in runs])),
            "ops_per_slot": runs[0]["ops_per_slot"],
            "feedback_per_user_per_slot": runs[0]["feedback_per_user_per_slot"],
            "per_seed_sum_rate": rates.tolist(),
        }
        row[cmd.axis] = v
        rows.append(row)
    best = cmd.values[int(np.argmax([r["ergodic_sum_rate"] for r in rows]))]
    lines = [f"{cmd.axis},ergodic_sum_rate,sum_rate_stderr,mean_power,"
             "allocation_ops_per_slot,feedback_per_user_per_slot"]
    for r in rows:
        lines.append(f"{r[cmd.axis]},{r['ergodic_sum_rate']!r},{r['sum_rate_stderr']!r},"
                     f"{r['mean_power']!r},{r['ops_per_slot']['allocation']!r},"
                     f"{r['feedback_per_user_per_slot']}")
    _write(out / "sweep.csv", "\n".join(lines) + "\n")
    summary = {"config": cmd.config.resolve().to_dict(), "axis": cmd.axis,
               "values": cmd.values, "seeds": cmd.seeds, "rows": rows, "best": best}
    _write(out / "summary.json", _json(summary))
    print(f"best {cmd.axis} = {best}")
    return EXIT_OK


def _exec_region(cmd: Command) -> int:
    out = _outdir(cmd)
    pairs = rate_region(cmd.config, cmd.phi_grid, cmd.workers)
    lines = ["phi_1,phi_2,R_1,R_2"] + [f"{f[0]!r},{f[1]!r},{r[0]!r},{r[1]!r}"
                                      for f, r in zip(cmd.phi_grid, pairs)]
    _write(out / "region.csv", "\n".join(lines) + "\n")
    summary = {"config": cmd.config.resolve().to_dict(),
               "phi_grid": [list(f) for f in cmd.phi_grid],
               "rates": [list(r) for r in pairs]}
    _write(out / "summary.json", _json(summary))
    for f, r in zip(cmd.phi_grid, pairs):
        print(f"phi=({f[0]:g},{f[1]:g}) -> R=({r[0]:.4f},{r[1]:.4f})")
    return EXIT_OK


def _exec_verify(cmd: Command) -> int:
    from .verify import run_suite
    checks = run_suite(cmd.oracle_slots, seed=cmd.config.seed)
    for c in checks:
        print(c.line())
    if cmd.out is not None:
        _outdir(cmd)
        _write(cmd.out / "verify.json",
               _json([dataclasses.asdict(c) for c in checks]))
    return EXIT_OK if all(c.ok for c in checks) else EXIT_VERIFY


EXECUTORS = {"run": _exec_run, "sweep": _exec_sweep, "rate-region": _exec_region,
             "verify": _exec_verify}


def execute(cmd: Command) -> int:
    return EXECUTORS[cmd.subcommand](cmd)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv
                        else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cmd = parse_args(argv)
        return execute(cmd)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
