"""Dual variables, filtered subgradients and step-size schedules."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .allocation import LN2, _row_gains, row_rates
from .errors import ConfigError


@dataclass(frozen=True)
class DualState:
    lam: float
    mu: np.ndarray  # (K,)
    g_lam: float
    g_mu: np.ndarray  # (K,)
    n: int = 0
    resets: int = 0  # degenerate mu renormalisations

    @classmethod
    def initial(cls, phi, lam0: float = 1.0) -> "DualState":
        phi = np.asarray(phi, dtype=float)
        mu = np.ones_like(phi) / phi.sum()
        return cls(lam=float(lam0), mu=mu, g_lam=0.0, g_mu=np.zeros_like(phi))

    def power_bound(self) -> float:
        """B = max_k mu_k / (lambda ln 2), the ceiling on any water-filled power."""
        return float(self.mu.max() / (self.lam * LN2))


def check_targets(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1 or phi.size == 0:
        raise ConfigError("rate targets must be a non-empty vector")
    if np.any(phi <= 0):
        raise ConfigError("rate targets must be positive")
    if abs(phi.sum() - 1.0) > 1e-9:
        raise ConfigError(f"rate targets must sum to 1, got {phi.sum():.12g}")
    return phi


@dataclass(frozen=True)
class StepSchedule:
    mode: str = "diminishing"
    beta0: float = 0.1
    alpha0: float = 0.5
    beta_exp: float = 0.9
    alpha_exp: float = 0.6

    def __post_init__(self):
        if self.mode not in ("diminishing", "constant"):
            raise ConfigError(f"unknown step schedule mode {self.mode!r}")
        if self.beta0 <= 0 or self.alpha0 <= 0:
            raise ConfigError("beta0 and alpha0 must be positive")
        if self.alpha0 > 1:
            raise ConfigError("alpha0 must not exceed 1")
        if self.mode == "diminishing":
            b, a = self.beta_exp, self.alpha_exp
            # sum beta = inf needs b <= 1; sum beta^2 < inf needs b > 1/2;
            # sum alpha^2 < inf needs a > 1/2; beta/alpha -> 0 needs b > a.
            if not (0.5 < b <= 1.0):
                raise ConfigError(f"beta exponent {b} violates 1/2 < b <= 1")
            if not a > 0.5:
                raise ConfigError(f"alpha exponent {a} violates a > 1/2")
            if not b > a:
                raise ConfigError(f"beta exponent {b} must exceed alpha exponent {a}")


def step_size(n: int, sched: StepSchedule) -> tuple[float, float]:
    if n < 0:
        raise ValueError("slot index must be non-negative")
    if sched.mode == "constant":
        return sched.beta0, sched.alpha0
    return (sched.beta0 / (1.0 + n) ** sched.beta_exp,
            sched.alpha0 / (1.0 + n) ** sched.alpha_exp)


def instantaneous_metrics(u, p, c):
    """Total power and per-user rates of one slot's allocation.

    u, p: (M, t) allocation; c: (K, M, t) gains. Rates use the SNIR under
    the powers actually allocated.
    """
    u = np.asarray(u)
    p = np.asarray(p, dtype=float)
    K = c.shape[0]
    G, _ = _row_gains(u, c, np.zeros(K))
    rates = np.where(u > 0, row_rates(G, p), 0.0)
    per_user = np.bincount(u.ravel(), weights=rates.ravel(), minlength=K + 1)[1:]
    return float(p.sum()), per_user


def filter_subgradients(state: DualState, P_inst: float, R_inst, phi, P_bar: float,
                        alpha: float) -> DualState:
    if not 0 < alpha <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    R_inst = np.asarray(R_inst, dtype=float)
    resid_mu = R_inst - np.asarray(phi) * R_inst.sum()
    return replace(state,
                   g_lam=alpha * (P_bar - P_inst) + (1 - alpha) * state.g_lam,
                   g_mu=alpha * resid_mu + (1 - alpha) * state.g_mu)


def update_dual(state: DualState, phi, rho_lam: float, rho_mu: float, eps: float,
                update_lambda: bool = True) -> DualState:
    """Projected subgradient step on (lambda, mu) followed by mu renormalisation."""
    if rho_lam < 0 or rho_mu <= 0:
        raise ValueError("step sizes must be positive")
    phi = np.asarray(phi, dtype=float)
    lam = max(eps, state.lam - rho_lam * state.g_lam) if update_lambda else state.lam
    mu_hat = np.maximum(0.0, state.mu - rho_mu * state.g_mu)
    scale = float(phi @ mu_hat)
    resets = state.resets
    if scale <= 0:
        mu = np.ones_like(phi) / phi.sum()
        resets += 1
    else:
        mu = mu_hat / scale
    return replace(state, lam=float(lam), mu=mu, n=state.n + 1, resets=resets)
