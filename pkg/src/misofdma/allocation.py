"""Per-subcarrier user/beam selection and power allocation.

Conventions used throughout:

* ``c_m`` has shape ``(K, t)``: equivalent gain of user ``k`` (row ``k-1``)
  through beam ``q`` on one subcarrier.
* A user row ``u_m`` has length ``t``; entry ``q`` is the user label in
  ``1..K`` served on beam ``q``, or 0 when the beam is off.
* ``mu`` is indexed by ``label - 1``.
* Beams are 0-based. Dispositions ``(t', j)`` use 1-based ``j`` over
  lexicographically ordered beam subsets of size ``t'``.

The scalar functions are direct transcriptions of the allocation rules and
serve as references; the ``*_batch`` functions vectorise over subcarriers and
are what the simulator runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, log

import numpy as np

from .errors import SearchSpaceError

LN2 = log(2.0)
EXHAUSTIVE_LIMIT = 10**6


@dataclass(frozen=True)
class Disposition:
    t_active: int
    j: int  # 1-based
    beams: tuple[int, ...]


@lru_cache(maxsize=None)
def dispositions(t: int, t_active: int | None = None) -> tuple[Disposition, ...]:
    """All dispositions in canonical order: by t', then lexicographic subsets."""
    sizes = range(1, t + 1) if t_active is None else (t_active,)
    out = []
    for tp in sizes:
        for j, beams in enumerate(itertools.combinations(range(t), tp), start=1):
            out.append(Disposition(tp, j, beams))
    return tuple(out)


def disposition(t: int, t_active: int, j: int) -> Disposition:
    return dispositions(t, t_active)[j - 1]


@dataclass
class OpCounter:
    """Minimal counter the allocators report into (see metrics.CostLedger)."""

    rate_elements: int = 0
    snir: int = 0


def _check_row(u_m) -> None:
    active = [u for u in u_m if u != 0]
    if len(active) != len(set(active)):
        raise ValueError(f"user appears twice in allocation row {list(u_m)}")


# ---------------------------------------------------------------- scalar refs

def snir(c_m, p_m, k: int, q: int) -> float:
    """SNIR of user label ``k`` on beam ``q`` given the beam powers ``p_m``."""
    c_k = np.asarray(c_m, dtype=float)[k - 1]
    p_m = np.asarray(p_m, dtype=float)
    interference = float(p_m @ c_k - p_m[q] * c_k[q])
    return float(p_m[q] * c_k[q] / (1.0 + interference))


def weighted_metric(u_m, p_m, mu, lam: float, c_m) -> float:
    """Sum over active beams of mu_u * log2(1 + SNIR) - lam * p."""
    _check_row(u_m)
    total = 0.0
    for q, u in enumerate(u_m):
        if u == 0:
            continue
        total += mu[u - 1] * np.log2(1.0 + snir(c_m, p_m, u, q)) - lam * p_m[q]
    return float(total)


def uniform_powers(u_m, V: float) -> np.ndarray:
    return np.where(np.asarray(u_m) > 0, float(V), 0.0)


def waterfill(u_m, mu, lam: float, V: float, c_m) -> np.ndarray:
    """Water-filling powers assuming power V on every other active beam."""
    if lam <= 0:
        raise ValueError("power price must be positive")
    c_m = np.asarray(c_m, dtype=float)
    t = len(u_m)
    p = np.zeros(t)
    for q, u in enumerate(u_m):
        if u == 0:
            continue
        gain = c_m[u - 1, q]
        if gain <= 0:
            continue
        others = sum(V * c_m[u - 1, s] for s in range(t) if s != q and u_m[s] != 0)
        p[q] = max(0.0, mu[u - 1] / (lam * LN2) - (1.0 + others) / gain)
    return p


@dataclass
class PowerResult:
    p: np.ndarray
    metric: float
    iterations: int
    converged: bool


def optimal_power(u_m, mu, lam: float, c_m, tol: float = 1e-6, max_iter: int = 100,
                  V: float | None = None) -> PowerResult:
    """Approximate maximiser of the weighted metric over p >= 0 for a fixed row."""
    if lam <= 0:
        raise ValueError("power price must be positive")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    u = np.asarray(u_m)[None, :]
    G, w = _row_gains(u, np.asarray(c_m, dtype=float)[:, None, :], np.asarray(mu, dtype=float))
    p_start = None
    if V is not None:
        p_start = waterfill(u_m, mu, lam, V, c_m)[None, :]
    p, val, iters, conv = optimal_power_batch(G, w, u > 0, lam, tol, max_iter, p_start)
    return PowerResult(p=p[0], metric=float(val[0]), iterations=int(iters), converged=bool(conv[0]))


def allocate_alg1(c_m, mu, V: float, price: float = 0.0, counter: OpCounter | None = None):
    """Greedy per-disposition beam allocation over every active-beam subset.

    For each disposition the beams are visited in ascending order and each
    gets the best not-yet-served user under uniform power ``V`` on the
    disposition's beams. A beam whose best weighted rate is not positive is
    left off. ``price`` subtracts ``price * V`` per active beam, giving the
    full uniform-power metric; the default 0 keeps the pure rate metric.
    """
    c_m = np.asarray(c_m, dtype=float)
    K, t = c_m.shape
    best_u = np.zeros(t, dtype=int)
    best_metric = 0.0
    for disp in dispositions(t):
        beams = disp.beams
        used: set[int] = set()
        u = np.zeros(t, dtype=int)
        metric = 0.0
        for q in beams:
            best_k, best_val = 0, 0.0
            for k in range(1, K + 1):
                if k in used:
                    continue
                interference = V * sum(c_m[k - 1, s] for s in beams if s != q)
                gamma = V * c_m[k - 1, q] / (1.0 + interference)
                val = mu[k - 1] * np.log2(1.0 + gamma)
                if counter is not None:
                    counter.rate_elements += 1
                    counter.snir += 1
                if val > best_val:
                    best_k, best_val = k, val
            if best_k:
                used.add(best_k)
                u[q] = best_k
                metric += best_val - price * V
        if metric > best_metric:
            best_u, best_metric = u, metric
    return best_u, float(best_metric)


def user_select(c_k, tbar: int, V: float):
    """Best (disposition j, beam q, SNIR) for one user with ``tbar`` active beams."""
    c_k = np.asarray(c_k, dtype=float)
    t = c_k.size
    if not 1 <= tbar <= t:
        raise ValueError(f"tbar must lie in 1..{t}")
    best = (1, 0, -1.0)
    for q in range(t):
        for disp in dispositions(t, tbar):
            if q not in disp.beams:
                continue
            interference = V * sum(c_k[s] for s in disp.beams if s != q)
            gamma = V * c_k[q] / (1.0 + interference)
            if gamma > best[2]:
                best = (disp.j, q, gamma)
    return best


def allocate_alg2(selections, mu, tbar: int, t: int, rates=None):
    """Base-station arbitration of user-side selections for fixed ``tbar``.

    ``selections[k-1] = (j_k, q_k, gamma_k)``. ``rates[k-1]`` defaults to
    ``log2(1 + gamma_k)``, the rate the base station infers from feedback.
    """
    if rates is None:
        rates = [np.log2(1.0 + s[2]) for s in selections]
    best_u = np.zeros(t, dtype=int)
    best_metric = 0.0
    for disp in dispositions(t, tbar):
        used: set[int] = set()
        u = np.zeros(t, dtype=int)
        metric = 0.0
        for q in disp.beams:
            contenders = [k for k, s in enumerate(selections, start=1)
                          if s[0] == disp.j and s[1] == q and k not in used]
            if not contenders:
                continue
            k_star = max(contenders, key=lambda k: (mu[k - 1] * rates[k - 1], -k))
            val = mu[k_star - 1] * rates[k_star - 1]
            if val > 0:
                used.add(k_star)
                u[q] = k_star
                metric += val
        if metric > best_metric:
            best_u, best_metric = u, metric
    return best_u, float(best_metric)


def candidate_rows(K: int, t: int) -> np.ndarray:
    """Every row in {0..K}^t without a repeated nonzero user."""
    if (K + 1) ** t > EXHAUSTIVE_LIMIT:
        raise SearchSpaceError(f"(K+1)^t = {(K + 1) ** t} exceeds {EXHAUSTIVE_LIMIT}")
    rows = [r for r in itertools.product(range(K + 1), repeat=t)
            if len([x for x in r if x]) == len({x for x in r if x})]
    return np.array(rows, dtype=int).reshape(-1, t)


def allocate_exhaustive(c_m, mu, lam: float, V: float, power_mode: str = "uniform-V"):
    """Brute-force maximiser of the weighted metric over all valid rows."""
    c_m = np.asarray(c_m, dtype=float)
    K, t = c_m.shape
    if power_mode not in ("uniform-V", "optimal"):
        raise ValueError(f"unknown power mode {power_mode!r}")
    best = (np.zeros(t, dtype=int), np.zeros(t), 0.0)
    for row in candidate_rows(K, t):
        if not row.any():
            continue
        if power_mode == "uniform-V":
            p = uniform_powers(row, V)
            val = weighted_metric(row, p, mu, lam, c_m)
        else:
            res = optimal_power(row, mu, lam, c_m, V=V)
            p, val = res.p, res.metric
        if val > best[2]:
            best = (row.copy(), p, val)
    return best


# --------------------------------------------------------------- batched forms

def _row_gains(u, c, mu):
    """Gather per-row gain matrices.

    u: (..., t) labels; c: (K, ..., t) gains with the same middle shape as u.
    Returns G (..., t, t) with G[..., q, s] = c[u_q - 1, ..., s] (0 when off)
    and weights w (..., t) = mu[u_q - 1] (0 when off).
    """
    t = u.shape[-1]
    cz = np.concatenate([np.zeros((1,) + c.shape[1:]), c], axis=0)  # (K+1, ..., t)
    cz = np.moveaxis(cz, 0, -2)  # (..., K+1, t)
    idx = np.broadcast_to(u[..., :, None], u.shape + (t,))
    G = np.take_along_axis(cz, idx, axis=-2)
    muz = np.concatenate([[0.0], np.asarray(mu, dtype=float)])
    return G, muz[u]


def metric_batch(G, w, p, lam):
    """Weighted metric for rows of gain matrices G (N, t, t) and powers p (N, t)."""
    direct = np.einsum("nqq->nq", G) * p
    total_rx = np.einsum("nqs,ns->nq", G, p)
    interference = total_rx - direct
    rate = np.log2(1.0 + direct / (1.0 + interference))
    return (w * rate).sum(axis=-1) - lam * p.sum(axis=-1)


def row_rates(G, p):
    direct = np.einsum("...qq->...q", G) * p
    interference = np.einsum("...qs,...s->...q", G, p) - direct
    return np.log2(1.0 + direct / (1.0 + interference))


def _support_masks(t: int) -> np.ndarray:
    return np.array([[(s >> q) & 1 for q in range(t)] for s in range(1, 2**t)], dtype=bool)


def optimal_power_batch(G, w, active, lam, tol=1e-6, max_iter=100, p_start=None):
    """Interference-priced successive water-filling with best-iterate memory.

    Each nonempty support of the active beams is started from the
    interference-free water level and iterated with

        p_q <- [w_q / ((lam + tau_q) ln 2) - (1 + I_q) / G_qq]^+

    where I_q is the interference currently received on beam q and tau_q the
    marginal rate loss beam q inflicts on the other beams. The best metric
    seen over all supports and iterates (and over ``p_start`` and the all-off
    row) is returned.
    """
    G = np.asarray(G, dtype=float)
    w = np.asarray(w, dtype=float)
    active = np.asarray(active, dtype=bool)
    N, t = w.shape
    diag = np.einsum("nqq->nq", G)
    safe_diag = np.where(diag > 0, diag, 1.0)
    level = w / (lam * LN2)
    best_p = np.zeros((N, t))
    best_val = np.zeros(N)
    if p_start is not None:
        val = metric_batch(G, w, p_start, lam)
        better = val > best_val
        best_p[better], best_val[better] = p_start[better], val[better]
    all_converged = np.ones(N, dtype=bool)
    iters_used = 0
    for support in _support_masks(t):
        rows = np.all(active | ~support, axis=1)
        if not rows.any():
            continue
        Gs, ws, ds, sd, lv = G[rows], w[rows], diag[rows], safe_diag[rows], level[rows]
        mask = np.broadcast_to(support, ws.shape) & (ds > 0)
        p = np.where(mask, np.maximum(0.0, lv - 1.0 / sd), 0.0)
        conv = np.zeros(p.shape[0], dtype=bool)
        bp, bv = best_p[rows], best_val[rows]
        for it in range(max_iter):
            val = metric_batch(Gs, ws, p, lam)
            better = val > bv
            bp[better], bv[better] = p[better], val[better]
            p_old = p.copy()
            for q in np.flatnonzero(support):
                direct = ds * p
                inv = 1.0 + np.einsum("nqs,ns->nq", Gs, p) - direct
                # marginal loss d/dp_q of sum_{s != q} w_s log2(1 + direct_s / inv_s)
                loss = ws * direct / (inv * (inv + direct) * LN2)
                tau = np.einsum("ns,ns->n", loss, Gs[:, :, q]) - loss[:, q] * Gs[:, q, q]
                p_q = ws[:, q] / ((lam + tau) * LN2) - inv[:, q] / sd[:, q]
                p[:, q] = np.where(mask[:, q], np.maximum(0.0, p_q), 0.0)
            step = np.abs(p - p_old).max(axis=1)
            iters_used = max(iters_used, it + 1)
            conv = step < tol
            if conv.all():
                break
        val = metric_batch(Gs, ws, p, lam)
        better = val > bv
        bp[better], bv[better] = p[better], val[better]
        best_p[rows], best_val[rows] = bp, bv
        all_converged[rows] &= conv
    return best_p, best_val, iters_used, all_converged


def waterfill_batch(u, c, mu, lam, V):
    """Water-filling powers for rows u (M, t) given gains c (K, M, t)."""
    if lam <= 0:
        raise ValueError("power price must be positive")
    G, w = _row_gains(u, c, mu)
    on = u > 0
    diag = np.einsum("mqq->mq", G)
    interference = V * (np.einsum("mqs,ms->mq", G, on.astype(float)) - diag * on)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = w / (lam * LN2) - (1.0 + interference) / diag
    return np.where(on & (diag > 0), np.maximum(p, 0.0), 0.0)


@lru_cache(maxsize=None)
def _disposition_tables(t: int):
    """Beam masks (D, t) and per-position beam indices (t, D), -1 = no beam."""
    disps = dispositions(t)
    masks = np.zeros((len(disps), t))
    order = np.full((t, len(disps)), -1)
    for d, disp in enumerate(disps):
        masks[d, list(disp.beams)] = 1.0
        order[:len(disp.beams), d] = disp.beams
    return masks, order


def alg1_batch(c, mu, V, price=0.0):
    """Vectorised ``allocate_alg1`` over subcarriers and dispositions.

    c: (K, M, t). Returns (u (M, t), metric (M,), rate-element evaluations).
    """
    c = np.asarray(c, dtype=float)
    mu = np.asarray(mu, dtype=float)
    K, M, t = c.shape
    masks, order = _disposition_tables(t)
    D = masks.shape[0]
    total = np.einsum("kmt,dt->dmk", c, masks)  # received power over each disposition
    cmk = np.transpose(c, (2, 1, 0))  # (t, M, K)
    used = np.zeros((D, M, K), dtype=bool)
    u = np.zeros((D, M, t), dtype=int)
    metric = np.zeros((D, M))
    evaluations = 0
    d_idx = np.arange(D)[:, None]
    m_idx = np.arange(M)[None, :]
    for i in range(t):
        beams = order[i]
        live = beams >= 0
        if not live.any():
            break
        q = np.where(live, beams, 0)
        own = cmk[q]  # (D, M, K)
        with np.errstate(invalid="ignore"):
            gamma = V * own / (1.0 + V * (total - own))
            vals = np.where(used | ~live[:, None, None], -np.inf,
                            mu * np.log2(1.0 + gamma))
        evaluations += int((~used[live]).sum())
        k_star = np.argmax(vals, axis=2)  # (D, M)
        best = np.take_along_axis(vals, k_star[..., None], axis=2)[..., 0]
        on = best > 0
        u[d_idx, m_idx, q[:, None]] = np.where(on, k_star + 1, u[d_idx, m_idx, q[:, None]])
        metric += np.where(on, best - price * V, 0.0)
        used[d_idx, m_idx, k_star] |= on
    # first maximiser in (t', j) order; the all-off row (metric 0) wins ties
    metric_all = np.vstack([np.zeros((1, M)), metric])
    pick = np.argmax(metric_all, axis=0)
    best_u = np.vstack([np.zeros((1, M, t), dtype=int), u])[pick, np.arange(M)]
    return best_u, metric_all[pick, np.arange(M)], evaluations


def user_select_batch(c, tbar, V):
    """Vectorised ``user_select``. Returns j (K, M) 1-based, q (K, M), gamma (K, M)."""
    c = np.asarray(c, dtype=float)
    K, M, t = c.shape
    disps = dispositions(t, tbar)
    table = np.full((K, M, t, len(disps)), -np.inf)
    for d, disp in enumerate(disps):
        beams = list(disp.beams)
        sub = c[:, :, beams]
        total = sub.sum(axis=-1, keepdims=True)
        table[:, :, beams, d] = V * sub / (1.0 + V * (total - sub))
    flat = table.reshape(K, M, -1)  # beam-major, then disposition
    pick = np.argmax(flat, axis=-1)
    q, d = np.divmod(pick, len(disps))
    gamma = np.take_along_axis(flat, pick[..., None], axis=-1)[..., 0]
    return d + 1, q, gamma


def alg2_batch(j_sel, q_sel, gamma, mu, tbar, t):
    """Vectorised ``allocate_alg2``. Returns (u (M, t), metric (M,), scans)."""
    mu = np.asarray(mu, dtype=float)
    K, M = j_sel.shape
    value = mu[:, None] * np.log2(1.0 + gamma)  # (K, M)
    best_u = np.zeros((M, t), dtype=int)
    best_metric = np.zeros(M)
    cols = np.arange(M)
    for disp in dispositions(t, tbar):
        u = np.zeros((M, t), dtype=int)
        metric = np.zeros(M)
        for q in disp.beams:
            member = (j_sel == disp.j) & (q_sel == q)
            vals = np.where(member, value, -np.inf)
            k_star = np.argmax(vals, axis=0)
            best = vals[k_star, cols]
            on = best > 0
            u[:, q] = np.where(on, k_star + 1, 0)
            metric += np.where(on, best, 0.0)
        better = metric > best_metric
        best_u[better] = u[better]
        best_metric[better] = metric[better]
    return best_u, best_metric, K * M


def exhaustive_batch(c, mu, lam, V, power_mode="uniform-V", tol=1e-6, max_iter=100):
    """Vectorised ``allocate_exhaustive``. Returns (u (M, t), p (M, t), metric (M,))."""
    c = np.asarray(c, dtype=float)
    K, M, t = c.shape
    cands = candidate_rows(K, t)  # (C, t)
    C = cands.shape[0]
    u_grid = np.broadcast_to(cands[:, None, :], (C, M, t))
    cz = np.broadcast_to(c[:, None], (K, C, M, t))
    G, w = _row_gains(u_grid, cz, mu)  # (C, M, t, t), (C, M, t)
    G = G.reshape(C * M, t, t)
    w = w.reshape(C * M, t)
    on = (u_grid > 0).reshape(C * M, t)
    p_uniform = V * on
    if power_mode == "uniform-V":
        p = p_uniform
        val = metric_batch(G, w, p, lam)
    elif power_mode == "optimal":
        p, val, _, _ = optimal_power_batch(G, w, on, lam, tol, max_iter)
    else:
        raise ValueError(f"unknown power mode {power_mode!r}")
    val = val.reshape(C, M)
    # all-off row has value 0 and sits first in the candidate order
    pick = np.argmax(val, axis=0)
    cols = np.arange(M)
    u = cands[pick]
    p = p.reshape(C, M, t)[pick, cols]
    return u, p, val[pick, cols]


def alg1_rate_element_bound(K: int, t: int) -> int:
    """Worst-case rate-element count per subcarrier: K * sum_t' t' C(t, t')."""
    return K * sum(tp * comb(t, tp) for tp in range(1, t + 1))
