"""Simulation configuration: dataclass, defaults, INI-style file and overrides.

The file format is a flat ``key = value`` list grouped into cosmetic
``[sections]``; keys are unique across sections. Lists are comma separated.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from math import log
from pathlib import Path

import numpy as np

from .allocation import EXHAUSTIVE_LIMIT
from .channel import FLAT, PEDESTRIAN, MultipathProfile
from .dual import StepSchedule, check_targets
from .errors import ConfigError

SCHEMES = ("alg1-waterfill", "alg1-uniform", "fixed-tbar", "classic-ob", "exhaustive-oracle")
BEAM_MODES = ("random-orthonormal", "ula-halfwave")
PROFILES = {"pedestrian": PEDESTRIAN, "flat": FLAT}
REFERENCE_PHI = (0.3, 0.25, 0.2, 0.15, 0.1)

SECTIONS = {
    "system": ("K", "t", "M", "subcarrier_spacing", "slot_duration", "P_bar", "snr_db", "phi"),
    "channel": ("profile", "delays", "gains", "doppler_hz", "beam_mode", "frame_len"),
    "scheduler": ("scheme", "tbar", "V", "power_tol", "power_max_iter"),
    "dual": ("lambda0", "eps", "step_mode", "beta0", "alpha0", "beta_exp", "alpha_exp",
             "rho_lambda", "rho_mu"),
    "run": ("seed", "n_slots"),
}


@dataclass(frozen=True)
class SimConfig:
    K: int = 5
    t: int = 4
    M: int = 72
    subcarrier_spacing: float = 15e3
    slot_duration: float = 1e-3
    P_bar: float = 1.0
    snr_db: float = 20.0
    phi: tuple | None = None  # None -> equal shares
    profile: str = "pedestrian"  # "pedestrian" | "flat" | "custom"
    delays: tuple | None = None
    gains: tuple | None = None
    doppler_hz: float = 6.0
    beam_mode: str = "random-orthonormal"
    frame_len: int = 1
    scheme: str = "alg1-waterfill"
    tbar: int = 2
    V: float | str = "auto"
    power_tol: float = 1e-6
    power_max_iter: int = 100
    lambda0: float | str = "auto"
    eps: float = 1e-6
    step_mode: str = "diminishing"
    beta0: float = 0.1
    alpha0: float = 0.5
    beta_exp: float = 0.9
    alpha_exp: float = 0.6
    rho_lambda: float | str = "auto"
    rho_mu: float | str = "auto"
    seed: int = 0
    n_slots: int = 20000

    # ------------------------------------------------------------------ derived
    @property
    def noise_var(self) -> float:
        return self.P_bar / (self.M * 10 ** (self.snr_db / 10))

    @property
    def schedule(self) -> StepSchedule:
        return StepSchedule(self.step_mode, self.beta0, self.alpha0, self.beta_exp, self.alpha_exp)

    @property
    def multipath(self) -> MultipathProfile:
        if self.profile == "custom":
            if self.delays is None or self.gains is None:
                raise ConfigError("custom profile needs delays and gains")
            return MultipathProfile(tuple(self.delays), tuple(self.gains), self.doppler_hz)
        base = PROFILES[self.profile]
        return MultipathProfile(base.delays, base.gains, self.doppler_hz)

    @property
    def active_tbar(self) -> int:
        return self.t if self.scheme == "classic-ob" else self.tbar

    def validate(self) -> "SimConfig":
        for name in ("K", "t", "M", "frame_len", "power_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_slots < 0:
            raise ConfigError("n_slots must be >= 0")
        for name in ("subcarrier_spacing", "slot_duration", "P_bar", "eps", "power_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.beam_mode not in BEAM_MODES:
            raise ConfigError(f"unknown beam mode {self.beam_mode!r}")
        if self.profile not in (*PROFILES, "custom"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.scheme == "fixed-tbar" and not 1 <= self.tbar <= self.t:
            raise ConfigError(f"tbar must lie in 1..t, got {self.tbar}")
        if self.scheme == "exhaustive-oracle" and (self.K + 1) ** self.t > EXHAUSTIVE_LIMIT:
            raise ConfigError("exhaustive-oracle needs (K+1)^t <= 1e6")
        if self.phi is not None:
            if len(self.phi) != self.K:
                raise ConfigError(f"phi has {len(self.phi)} entries, K = {self.K}")
            check_targets(self.phi)
        for name in ("V", "lambda0", "rho_lambda", "rho_mu"):
            val = getattr(self, name)
            if val != "auto" and not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"{name} must be positive or 'auto'")
        self.multipath
        self.schedule
        return self

    def resolve(self) -> "SimConfig":
        """Validate and materialise every 'auto' and default-derived field."""
        self.validate()
        phi = tuple(self.phi) if self.phi is not None else tuple([1.0 / self.K] * self.K)
        mp = self.multipath
        V = self.P_bar / (self.M * self.t) if self.V == "auto" else float(self.V)
        # Initial price puts the water level of a unit weight at V.
        lambda0 = 1.0 / (V * log(2.0)) if self.lambda0 == "auto" else float(self.lambda0)
        rho_lambda = (20.0 * lambda0 / self.P_bar if self.rho_lambda == "auto"
                      else float(self.rho_lambda))
        snr = 10 ** (self.snr_db / 10)
        rho_mu = (10.0 / (self.M * np.log2(1 + snr)) if self.rho_mu == "auto"
                  else float(self.rho_mu))
        return dataclasses.replace(
            self, phi=phi, V=V, lambda0=lambda0, rho_lambda=rho_lambda, rho_mu=float(rho_mu),
            delays=tuple(mp.delays), gains=tuple(mp.gains))

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in dataclasses.fields(self)}


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
_INT_FIELDS = {"K", "t", "M", "frame_len", "tbar", "power_max_iter", "seed", "n_slots"}
_STR_FIELDS = {"profile", "beam_mode", "scheme", "step_mode"}
_TUPLE_FIELDS = {"phi", "delays", "gains"}
_AUTO_FIELDS = {"V", "lambda0", "rho_lambda", "rho_mu"}


def parse_value(key: str, text: str):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    text = text.strip()
    try:
        if key in _STR_FIELDS:
            return text
        if key in _INT_FIELDS:
            return int(text)
        if key in _TUPLE_FIELDS:
            if text.lower() in ("", "none", "auto"):
                return None
            return tuple(float(x) for x in text.split(","))
        if key in _AUTO_FIELDS and text.lower() == "auto":
            return "auto"
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def apply_overrides(cfg: SimConfig, overrides) -> SimConfig:
    """Apply ``key=value`` strings (or a mapping of already-typed values)."""
    if isinstance(overrides, dict):
        unknown = set(overrides) - set(FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        return dataclasses.replace(cfg, **overrides)
    changes = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        changes[key.strip()] = parse_value(key.strip(), val)
    return dataclasses.replace(cfg, **changes)


def load_config(path) -> SimConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[__top__]\n" + path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    items = []
    for section in parser.sections():
        if section != "__top__" and section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, val in parser.items(section):
            items.append(f"{key}={val}")
    return apply_overrides(SimConfig(), items)


def dump_config(cfg: SimConfig) -> str:
    """Render a config in the file format (round-trips through load_config)."""
    lines = []
    values = cfg.to_dict()
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            val = values[key]
            if val is None:
                continue
            if isinstance(val, list):
                val = ",".join(repr(float(x)) for x in val)
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def reference_config(**overrides) -> SimConfig:
    """K=5, t=4, M=72, SNR 20 dB, unequal rate targets."""
    return dataclasses.replace(SimConfig(phi=REFERENCE_PHI), **overrides)


__all__ = ["SimConfig", "load_config", "apply_overrides", "dump_config", "reference_config",
           "SCHEMES", "REFERENCE_PHI"]
