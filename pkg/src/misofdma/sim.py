"""Per-slot adaptive loop, parameter sweeps and two-user rate regions."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from . import allocation as alloc
from .channel import equivalent_gains, generate_beam_set, make_fader, step_channel
from .config import SimConfig
from .dual import DualState, filter_subgradients, instantaneous_metrics, step_size, update_dual
from .errors import ConfigError
from .metrics import CostLedger, feedback_count

log = logging.getLogger(__name__)

UNIFORM_POWER_SCHEMES = ("alg1-uniform", "fixed-tbar", "classic-ob")


@dataclass
class SlotRecord:
    """Optional per-slot detail for invariant checks (kept only on request)."""

    u: np.ndarray
    p: np.ndarray
    c: np.ndarray
    lam: float
    mu: np.ndarray


@dataclass
class TraceLog:
    config: SimConfig
    lam: np.ndarray
    mu: np.ndarray  # (n, K)
    power: np.ndarray
    rates: np.ndarray  # (n, K)
    t_active_mean: np.ndarray
    active_hist: np.ndarray  # counts of subcarriers with 0..t active beams
    ledger: CostLedger
    initial: dict
    final: dict
    slots: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.lam)

    @property
    def sum_rate(self) -> np.ndarray:
        return self.rates.sum(axis=1)

    def rate_fractions(self, start: int = 0) -> np.ndarray:
        tot = self.rates[start:].sum(axis=0)
        return tot / tot.sum()

    def summary(self) -> dict:
        cfg = self.config
        n = len(self)
        out = {
            "config": cfg.to_dict(),
            "n_slots": n,
            "initial_state": self.initial,
            "final_state": self.final,
            "ledger": self.ledger.as_dict(),
            "ledger_per_slot": self.ledger.per_slot(),
            "feedback_per_user_per_slot": scheme_feedback(cfg),
            "active_beam_histogram": self.active_hist.tolist(),
        }
        if n:
            half = n // 2
            out.update({
                "ergodic_sum_rate": float(self.sum_rate.mean()),
                "ergodic_user_rates": self.rates.mean(axis=0).tolist(),
                "rate_fractions": self.rate_fractions().tolist(),
                "mean_power": float(self.power.mean()),
                "mean_power_last_half": float(self.power[half:].mean()),
                "sum_rate_stderr": float(self.sum_rate.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            })
        return out

    def write_csv(self, path) -> None:
        K = self.config.K
        header = (["n", "lambda"] + [f"mu_{k + 1}" for k in range(K)] + ["P_inst"]
                  + [f"R_{k + 1}" for k in range(K)] + ["sum_rate", "t_active_mean"])
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(len(self)):
                row = [str(i), repr(float(self.lam[i]))]
                row += [repr(float(x)) for x in self.mu[i]]
                row.append(repr(float(self.power[i])))
                row += [repr(float(x)) for x in self.rates[i]]
                row.append(repr(float(self.rates[i].sum())))
                row.append(repr(float(self.t_active_mean[i])))
                fh.write(",".join(row) + "\n")

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def scheme_feedback(cfg: SimConfig) -> int:
    if cfg.scheme in ("alg1-waterfill", "alg1-uniform", "exhaustive-oracle"):
        return feedback_count("adaptive-tprime", cfg.M, cfg.t)
    tbar = cfg.active_tbar
    return feedback_count("classic-ob" if tbar == cfg.t else "fixed-tbar", cfg.M, cfg.t)


def allocate_slot(cfg: SimConfig, c: np.ndarray, state: DualState, ledger: CostLedger):
    """Scheduling plus power allocation for one slot. Returns (u, p)."""
    K, M, t = c.shape
    V = cfg.V
    scheme = cfg.scheme
    if scheme in ("alg1-waterfill", "alg1-uniform"):
        u, _, evals = alloc.alg1_batch(c, state.mu, V)
        ledger.allocation += evals
        if scheme == "alg1-waterfill":
            p = alloc.waterfill_batch(u, c, state.mu, state.lam, V)
        else:
            p = alloc.uniform_powers(u, V)
    elif scheme in ("fixed-tbar", "classic-ob"):
        tbar = cfg.active_tbar
        j, q, gamma = alloc.user_select_batch(c, tbar, V)
        ledger.user_side += K * M * comb(t, tbar) * tbar
        u, _, scans = alloc.alg2_batch(j, q, gamma, state.mu, tbar, t)
        ledger.allocation += scans
        p = alloc.uniform_powers(u, V)
    elif scheme == "exhaustive-oracle":
        u, p, _ = alloc.exhaustive_batch(c, state.mu, state.lam, V, "optimal",
                                         cfg.power_tol, cfg.power_max_iter)
        ledger.allocation += alloc.candidate_rows(K, t).shape[0] * M
    else:  # pragma: no cover - validated earlier
        raise ConfigError(scheme)
    ledger.power += M * t
    u = np.where(p > 0, u, 0)
    p = np.where(u > 0, p, 0.0)
    return u, p


def run(config: SimConfig, keep_slots: bool = False, observer=None) -> TraceLog:
    """Adaptive allocation loop: one scheduling decision and one dual step per slot.

    ``observer(i, u, p, c, state)`` is called after each allocation with the
    dual state the allocation used.
    """
    cfg = config.resolve()
    K, t, M = cfg.K, cfg.t, cfg.M
    phi = np.asarray(cfg.phi)
    sched = cfg.schedule
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    fader = make_fader(cfg.multipath, K, t, M, cfg.subcarrier_spacing, seeds[0])
    beam_rng = np.random.default_rng(seeds[1])
    hold_lambda = cfg.scheme in UNIFORM_POWER_SCHEMES
    state = DualState.initial(phi, cfg.eps if hold_lambda else cfg.lambda0)
    initial = {"lambda": state.lam, "mu": state.mu.tolist()}

    n = cfg.n_slots
    lam_log = np.empty(n)
    mu_log = np.empty((n, K))
    power_log = np.empty(n)
    rate_log = np.empty((n, K))
    tact_log = np.empty(n)
    hist = np.zeros(t + 1, dtype=np.int64)
    ledger = CostLedger()
    slots = []
    fb = scheme_feedback(cfg)
    beams = None

    for i in range(n):
        if i % cfg.frame_len == 0 or beams is None:
            beams = generate_beam_set(t, M, cfg.beam_mode, beam_rng)
        real = step_channel(fader, cfg.slot_duration)
        c = equivalent_gains(real, beams, cfg.noise_var).c
        ledger.pooling += M * t
        lam_log[i] = state.lam
        mu_log[i] = state.mu
        u, p = allocate_slot(cfg, c, state, ledger)
        P_inst, R_inst = instantaneous_metrics(u, p, c)
        active = (u > 0).sum(axis=1)
        hist += np.bincount(active, minlength=t + 1)
        power_log[i] = P_inst
        rate_log[i] = R_inst
        tact_log[i] = active.mean()
        if observer is not None:
            observer(i, u, p, c, state)
        if keep_slots:
            slots.append(SlotRecord(u, p, c, state.lam, state.mu.copy()))

        beta, alpha = step_size(i, sched)
        state = filter_subgradients(state, P_inst, R_inst, phi, cfg.P_bar, alpha)
        state = update_dual(state, phi, beta * cfg.rho_lambda, beta * cfg.rho_mu, cfg.eps,
                            update_lambda=not hold_lambda)
        ledger.update += M * t + K + 1
        ledger.feedback += fb
        ledger.slots += 1

    if state.resets:
        log.warning("mu was reset %d times after all weights were clipped", state.resets)
    final = {"lambda": state.lam, "mu": state.mu.tolist(), "g_lambda": state.g_lam,
             "g_mu": state.g_mu.tolist(), "mu_resets": state.resets}
    return TraceLog(cfg, lam_log, mu_log, power_log, rate_log, tact_log, hist, ledger,
                    initial, final, slots)


SWEEP_AXES = {"K": "K", "t": "t", "tbar": "tbar", "SNR": "snr_db", "snr_db": "snr_db"}


def _sweep_point(cfg: SimConfig) -> dict:
    trace = run(cfg)
    s = trace.summary()
    row = {
        "ergodic_sum_rate": s.get("ergodic_sum_rate", 0.0),
        "sum_rate_stderr": s.get("sum_rate_stderr", 0.0),
        "user_rates": s.get("ergodic_user_rates", []),
        "mean_power": s.get("mean_power", 0.0),
        "ops_per_slot": s["ledger_per_slot"],
        "feedback_per_user_per_slot": s["feedback_per_user_per_slot"],
    }
    return row


def sweep_configs(template: SimConfig, axis: str, values) -> list[SimConfig]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    name = SWEEP_AXES[axis]
    out = []
    for v in values:
        changes = {name: v}
        if name == "K" and template.phi is not None and len(template.phi) != v:
            changes["phi"] = None
        if name == "t" and template.scheme == "classic-ob":
            changes["tbar"] = v
        cfg = dataclasses.replace(template, **changes)
        try:
            cfg.validate()
        except ConfigError as exc:
            raise ConfigError(f"sweep value {axis}={v}: {exc}") from exc
        out.append(cfg)
    return out


def sweep(template: SimConfig, axis: str, values, workers: int = 1) -> list[dict]:
    """One summary row per axis value."""
    cfgs = sweep_configs(template, axis, values)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_point, cfgs))
    else:
        rows = [_sweep_point(c) for c in cfgs]
    for v, row in zip(values, rows):
        row[axis] = v
    return rows


def rate_region(config: SimConfig, phi_grid, workers: int = 1) -> list[tuple[float, float]]:
    """Converged average rate pairs of a two-user system for each target split."""
    if config.K != 2:
        raise ConfigError("rate region needs K = 2")
    cfgs = []
    for pair in phi_grid:
        pair = tuple(float(x) for x in pair)
        if len(pair) != 2 or min(pair) <= 0 or abs(sum(pair) - 1) > 1e-9:
            raise ConfigError(f"bad rate-target pair {pair}")
        cfgs.append(dataclasses.replace(config, phi=pair))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            traces = list(pool.map(run, cfgs))
    else:
        traces = [run(c) for c in cfgs]
    return [tuple(float(x) for x in tr.rates.mean(axis=0)) for tr in traces]
