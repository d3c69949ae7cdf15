"""Fairness indices, running statistics and cost accounting."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


def jain_index(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("Jain's index needs at least one value")
    denom = x.size * float(np.sum(x * x))
    if denom == 0:
        raise ValueError("Jain's index is undefined for an all-zero vector")
    return float(np.sum(x)) ** 2 / denom


def modified_jain(x, x_req) -> float:
    """Jain's index of the achieved-to-requested ratios."""
    x_req = np.asarray(x_req, dtype=float)
    if np.any(x_req <= 0):
        raise ValueError("requirements must be positive")
    return jain_index(np.asarray(x, dtype=float) / x_req)


def classic_indices(x):
    """(unbiased variance, coefficient of variation, min-max ratio)."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("variance needs at least two values")
    var = float(np.var(x, ddof=1))
    mean = float(np.mean(x))
    if mean == 0:
        raise ValueError("coefficient of variation undefined for zero mean")
    if x.max() == 0:
        raise ValueError("min-max ratio undefined for zero maximum")
    return var, float(np.sqrt(var) / mean), float(x.min() / x.max())


def feedback_count(scheme: str, M: int, t: int) -> int:
    """Parameters each user feeds back per slot."""
    if scheme == "adaptive-tprime":
        return t * M
    if scheme == "fixed-tbar":
        return 3 * M
    if scheme == "classic-ob":
        return 2 * M
    raise ValueError(f"unknown feedback scheme {scheme!r}")


@dataclass
class CostLedger:
    """Operation counts per stage. Counters only grow; ledgers add."""

    pooling: int = 0
    allocation: int = 0  # rate-element evaluations at the base station
    user_side: int = 0  # SNIR evaluations done at the terminals
    power: int = 0
    update: int = 0
    feedback: int = 0  # parameters per user, summed over slots
    slots: int = 0

    def __add__(self, other: "CostLedger") -> "CostLedger":
        return CostLedger(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                             for f in fields(self)})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def per_slot(self) -> dict:
        n = max(self.slots, 1)
        return {k: v / n for k, v in self.as_dict().items() if k != "slots"}


@dataclass
class RunningStats:
    """Cumulative means of per-slot values, with an optional sliding window."""

    window: int | None = None
    _history: dict = field(default_factory=dict)

    def record(self, **values) -> None:
        for key, val in values.items():
            self._history.setdefault(key, []).append(np.asarray(val, dtype=float))

    def __len__(self) -> int:
        return max((len(v) for v in self._history.values()), default=0)

    def series(self, key) -> np.ndarray:
        return np.array(self._history.get(key, []))

    def summarize(self) -> dict:
        out = {}
        for key, vals in self._history.items():
            arr = np.array(vals)
            out[key] = arr.mean(axis=0).tolist()
            if self.window:
                out[f"{key}_window"] = arr[-self.window:].mean(axis=0).tolist()
        return out
