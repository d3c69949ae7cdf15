"""Small-instance oracle checks and invariant suite behind ``misofdma verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import allocation as alloc
from .channel import PEDESTRIAN, equivalent_gains, generate_beam_set, make_fader, step_channel
from .config import SimConfig
from .dual import instantaneous_metrics
from .sim import run


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def random_simplex_mu(rng, K):
    phi = rng.dirichlet(np.ones(K))
    mu = rng.uniform(0.2, 2.0, K)
    return mu / (phi @ mu), phi


def oracle_equivalence(n_slots=1000, K=3, t=2, M=4, snr_db=20.0, seed=0):
    """Alg1 against brute force under uniform power V on real channel draws.

    Returns (fraction equal, dominance violations, number of cases).
    """
    rng = np.random.default_rng(seed)
    fader = make_fader(PEDESTRIAN, K, t, M, 15e3, rng)
    P_bar = 1.0
    V = P_bar / (M * t)
    noise_var = P_bar / (M * 10 ** (snr_db / 10))
    equal = violations = 0
    for _ in range(n_slots):
        # decorrelate consecutive draws so the sample covers many fades
        fader.time += rng.uniform(0.0, 1.0)
        beams = generate_beam_set(t, M, "random-orthonormal", rng)
        c = equivalent_gains(step_channel(fader, 1e-3), beams, noise_var).c
        mu, _ = random_simplex_mu(rng, K)
        _, m1, _ = alloc.alg1_batch(c, mu, V)
        _, _, mx = alloc.exhaustive_batch(c, mu, 0.0, V, "uniform-V")
        tol = 1e-9 * np.maximum(1.0, np.abs(mx))
        violations += int(np.sum(m1 > mx + tol))
        equal += int(np.sum(np.abs(m1 - mx) <= tol))
    n = n_slots * M
    return equal / n, violations, n


def beam_metric(p, mu, lam, c, I):
    """Single-beam metric with fixed interference-plus-noise ``1 + I``."""
    return mu * np.log2(1.0 + p * c / (1.0 + I)) - lam * p


def waterfill_stationarity(n=10_000, seed=1, h=1e-6):
    """Largest central-difference derivative at water-filled powers p > 0."""
    rng = np.random.default_rng(seed)
    draws = []
    while sum(len(d[0]) for d in draws) < n:
        m = 2 * n
        mu = rng.uniform(0.1, 3.0, m)
        lam = rng.uniform(0.05, 5.0, m)
        c = rng.lognormal(2.0, 1.5, m)
        I = rng.uniform(0.0, 5.0, m)
        p = mu / (lam * alloc.LN2) - (1.0 + I) / c
        keep = p > 10 * h
        draws.append([a[keep] for a in (mu, lam, c, I, p)])
    mu, lam, c, I, p = (np.concatenate(col)[:n] for col in zip(*draws))
    # cross-check the closed form against the library routine
    for i in range(min(n, 50)):
        row = alloc.waterfill([1], [mu[i]], lam[i], 0.0, [[c[i] / (1.0 + I[i])]])
        if abs(row[0] - p[i]) > 1e-9 * max(1.0, p[i]):
            raise AssertionError("waterfill disagrees with the closed form")
    d = (beam_metric(p + h, mu, lam, c, I) - beam_metric(p - h, mu, lam, c, I)) / (2 * h)
    return float(np.abs(d).max()), len(p)


@dataclass
class BoundMonitor:
    """Observer counting breaches of the power and rate ceilings per slot."""

    rel_tol: float = 1e-9
    slots: int = 0
    power_violations: int = 0
    rate_violations: int = 0
    coupling_violations: int = 0
    worst_power_ratio: float = 0.0
    worst_rate_ratio: float = 0.0

    def __call__(self, i, u, p, c, state):
        B = state.power_bound()
        self.slots += 1
        if p.size:
            ratio = float(p.max() / B)
            self.worst_power_ratio = max(self.worst_power_ratio, ratio)
            self.power_violations += int(np.sum(p > B * (1 + self.rel_tol)))
        _, R = instantaneous_metrics(u, p, c)
        ceiling = B / alloc.LN2 * c.sum(axis=(1, 2))
        self.worst_rate_ratio = max(self.worst_rate_ratio, float(np.max(R / ceiling)))
        self.rate_violations += int(np.sum(R > ceiling * (1 + self.rel_tol)))
        self.coupling_violations += int(np.sum((p > 0) != (u > 0)))
        for row in u:
            act = row[row > 0]
            if len(act) != len(set(act.tolist())):
                self.coupling_violations += 1

    @property
    def violations(self) -> int:
        return self.power_violations + self.rate_violations + self.coupling_violations


def scalar_batch_agreement(n=200, seed=2):
    """Mismatches between batched allocators and their scalar references."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        K, t = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        c = rng.exponential(20.0, (K, 1, t))
        mu, _ = random_simplex_mu(rng, K)
        V = 1.0 / t
        u_b, m_b, _ = alloc.alg1_batch(c, mu, V)
        u_s, m_s = alloc.allocate_alg1(c[:, 0], mu, V)
        bad += int(not np.array_equal(u_b[0], u_s) or abs(m_b[0] - m_s) > 1e-9)
        tbar = int(rng.integers(1, t + 1))
        j, q, g = alloc.user_select_batch(c, tbar, V)
        sel = [alloc.user_select(c[k, 0], tbar, V) for k in range(K)]
        bad += int(any((j[k, 0], q[k, 0]) != sel[k][:2] for k in range(K)))
        u2b, m2b, _ = alloc.alg2_batch(j, q, g, mu, tbar, t)
        u2s, m2s = alloc.allocate_alg2(sel, mu, tbar, t)
        bad += int(not np.array_equal(u2b[0], u2s) or abs(m2b[0] - m2s) > 1e-9)
    return bad


def optimal_power_gap(n=40, seed=3, grid=300):
    """Largest shortfall of optimal_power against a dense grid on two-beam rows."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        c = rng.exponential(10.0, (2, 2))
        mu = rng.uniform(0.3, 2.0, 2)
        lam = float(rng.uniform(0.2, 3.0))
        u = np.array([1, 2])
        res = alloc.optimal_power(u, mu, lam, c)
        top = float(mu.max() / (lam * alloc.LN2))
        xs = np.linspace(0.0, top, grid)
        P1, P2 = np.meshgrid(xs, xs, indexing="ij")
        g1 = P1 * c[0, 0] / (1 + P2 * c[0, 1])
        g2 = P2 * c[1, 1] / (1 + P1 * c[1, 0])
        vals = mu[0] * np.log2(1 + g1) + mu[1] * np.log2(1 + g2) - lam * (P1 + P2)
        worst = max(worst, float(vals.max() - res.metric))
    return worst


def run_suite(n_oracle_slots=200, seed=0):
    """Every check of the verification suite, as a list of ``Check``."""
    checks = []
    frac, viol, n = oracle_equivalence(n_oracle_slots, seed=seed)
    checks.append(Check("alg1-vs-exhaustive", frac >= 0.95 and viol == 0,
                        f"equal {frac:.4f} of {n}, dominance violations {viol}"))
    worst, m = waterfill_stationarity(seed=seed + 1)
    checks.append(Check("waterfill-stationarity", worst <= 1e-6,
                        f"max |d metric/dp| {worst:.2e} over {m} instances"))
    gap = optimal_power_gap(seed=seed + 3)
    checks.append(Check("optimal-power-vs-grid", gap <= 1e-9, f"grid excess {gap:.2e}"))
    bad = scalar_batch_agreement(seed=seed + 2)
    checks.append(Check("batch-vs-scalar", bad == 0, f"{bad} mismatches"))

    monitor = BoundMonitor()
    cfg = SimConfig(K=3, t=3, M=8, n_slots=300, seed=seed, phi=(0.5, 0.3, 0.2))
    trace = run(cfg, observer=monitor)
    checks.append(Check("power-and-rate-bounds", monitor.violations == 0,
                        f"{monitor.violations} violations over {monitor.slots} slots"))
    mu_sum = np.abs(trace.mu @ np.asarray(trace.config.phi) - 1.0).max()
    lam_ok = bool(np.all(trace.lam >= trace.config.eps))
    checks.append(Check("dual-feasibility", mu_sum < 1e-9 and lam_ok,
                        f"max |mu.phi - 1| {mu_sum:.1e}, lambda >= eps {lam_ok}"))
    again = run(cfg)
    same = np.array_equal(trace.rates, again.rates) and np.array_equal(trace.lam, again.lam)
    checks.append(Check("determinism", same, "repeat run identical" if same else "runs differ"))
    return checks
