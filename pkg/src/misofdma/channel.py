"""Time-correlated frequency-selective MISO fading, beam sets and equivalent gains.

Each (user, tx antenna, tap) carries an independent unit-power complex
Gaussian process with Jakes temporal correlation, synthesised as a sum of
sinusoids (Zheng-Xiao arrival angles, per-process random rotation and
phases). The subcarrier response is the Fourier sum over the delay profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

N_OSCILLATORS = 32


@dataclass(frozen=True)
class MultipathProfile:
    delays: tuple[float, ...]  # seconds
    gains: tuple[float, ...]  # linear power
    doppler_hz: float = 6.0

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        g = np.asarray(self.gains, dtype=float)
        if d.size == 0:
            raise ConfigError("multipath profile needs at least one tap")
        if d.shape != g.shape:
            raise ConfigError("delays and gains must have the same length")
        if np.any(d < 0) or np.any(np.diff(d) <= 0):
            raise ConfigError("tap delays must be non-negative and strictly increasing")
        if np.any(g < 0):
            raise ConfigError("tap gains must be non-negative")
        if abs(g.sum() - 1.0) > 1e-9:
            raise ConfigError(f"tap gains must sum to 1, got {g.sum():.12g}")
        if self.doppler_hz < 0:
            raise ConfigError("doppler_hz must be non-negative")

    @property
    def rms_delay_spread(self) -> float:
        d = np.asarray(self.delays)
        g = np.asarray(self.gains)
        mean = float(g @ d)
        return float(np.sqrt(g @ d**2 - mean**2))


# Exponentially decaying six-tap profile with 2.3 us rms delay spread.
PEDESTRIAN = MultipathProfile(
    delays=(0.0, 0.5e-6, 1.5e-6, 3.0e-6, 5.0e-6, 8.0e-6),
    gains=(0.2427, 0.2249, 0.1932, 0.1538, 0.1135, 0.0719),
    doppler_hz=6.0,
)

FLAT = MultipathProfile(delays=(0.0,), gains=(1.0,), doppler_hz=6.0)


@dataclass
class FaderState:
    """Oscillator bank for K*t*L tap processes plus the current time."""

    profile: MultipathProfile
    K: int
    t: int
    M: int
    subcarrier_spacing: float
    freq_i: np.ndarray  # (K, t, L, N) normalised in-phase frequencies
    freq_q: np.ndarray  # (K, t, L, N) normalised quadrature frequencies
    phase_i: np.ndarray
    phase_q: np.ndarray
    tap_phasor: np.ndarray  # (L, M) sqrt(gain_l) exp(-j 2 pi f_m d_l)
    time: float = 0.0
    slot: int = 0

    def state_bytes(self) -> bytes:
        parts = [self.freq_i, self.freq_q, self.phase_i, self.phase_q, self.tap_phasor,
                 np.array([self.time, self.slot])]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # (K, M, t) complex
    slot: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise FloatingPointError("non-finite channel coefficient")


@dataclass(frozen=True)
class BeamSet:
    b: np.ndarray  # (M, q, a) complex; row q is beam vector b_{m,q}

    @property
    def gram(self) -> np.ndarray:
        return np.einsum("mqa,mra->mqr", self.b.conj(), self.b)


@dataclass(frozen=True)
class GainTable:
    c: np.ndarray  # (K, M, t) real, non-negative
    noise_var: float = field(default=1.0)


def make_fader(profile: MultipathProfile, K: int, t: int, M: int,
               subcarrier_spacing: float, seed) -> FaderState:
    if min(K, t, M) < 1:
        raise ConfigError("K, t and M must all be >= 1")
    if subcarrier_spacing <= 0:
        raise ConfigError("subcarrier spacing must be positive")
    rng = np.random.default_rng(seed)
    L = len(profile.delays)
    N = N_OSCILLATORS
    shape = (K, t, L, N)
    rotation = rng.uniform(-np.pi, np.pi, size=(K, t, L, 1))
    n = np.arange(1, N + 1)
    alpha = (2 * np.pi * n - np.pi + rotation) / (4 * N)
    phase_i = rng.uniform(-np.pi, np.pi, size=shape)
    phase_q = rng.uniform(-np.pi, np.pi, size=shape)
    f_m = subcarrier_spacing * np.arange(M)
    d = np.asarray(profile.delays)
    g = np.asarray(profile.gains)
    tap_phasor = np.sqrt(g)[:, None] * np.exp(-2j * np.pi * np.outer(d, f_m))
    return FaderState(profile, K, t, M, float(subcarrier_spacing),
                      np.cos(alpha), np.sin(alpha), phase_i, phase_q, tap_phasor)


def tap_gains(fader: FaderState, times) -> np.ndarray:
    """Tap processes at the given times, shape (K, t, L, len(times))."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    wd = 2 * np.pi * fader.profile.doppler_hz
    arg_i = wd * fader.freq_i[..., None] * times + fader.phase_i[..., None]
    arg_q = wd * fader.freq_q[..., None] * times + fader.phase_q[..., None]
    g = np.cos(arg_i) + 1j * np.cos(arg_q)
    return g.sum(axis=-2) / np.sqrt(fader.freq_i.shape[-1])


def frequency_response(fader: FaderState, taps: np.ndarray) -> np.ndarray:
    """Map tap gains (K, t, L, ...) to per-subcarrier channels (K, M, t, ...)."""
    h = np.einsum("kal...,lm->kma...", taps, fader.tap_phasor)
    return h


def step_channel(fader: FaderState, slot_duration: float) -> ChannelRealization:
    """Channel at the current time, then advance the fader by one slot."""
    taps = tap_gains(fader, [fader.time])[..., 0]
    h = frequency_response(fader, taps)
    real = ChannelRealization(h=h, slot=fader.slot)
    fader.time += slot_duration
    fader.slot += 1
    return real


def _random_unitary(rng, t: int, size: int) -> np.ndarray:
    z = (rng.standard_normal((size, t, t)) + 1j * rng.standard_normal((size, t, t))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    # Fix column phases so the distribution is Haar.
    d = np.diagonal(r, axis1=1, axis2=2)
    q = q * (d / np.abs(d))[:, None, :]
    return q


def ula_beams(t: int) -> np.ndarray:
    """Orthogonal half-wavelength ULA steering vectors, shape (q, a)."""
    sin_theta = -1.0 + 2.0 * np.arange(t) / t
    n = np.arange(t)
    return np.exp(-1j * np.pi * np.outer(sin_theta, n)) / np.sqrt(t)


def generate_beam_set(t: int, M: int, mode: str = "random-orthonormal", seed=None) -> BeamSet:
    if mode == "random-orthonormal":
        rng = np.random.default_rng(seed)
        u = _random_unitary(rng, t, M)
        # Columns of u are the beams.
        return BeamSet(b=np.transpose(u, (0, 2, 1)).copy())
    if mode == "ula-halfwave":
        return BeamSet(b=np.broadcast_to(ula_beams(t), (M, t, t)).copy())
    raise ConfigError(f"unknown beam mode {mode!r}")


def equivalent_gains(h, beams: BeamSet, noise_var: float) -> GainTable:
    if noise_var <= 0:
        raise ConfigError("noise variance must be positive")
    hh = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    if hh.shape[1:] != (beams.b.shape[0], beams.b.shape[2]):
        raise ValueError("channel and beam set shapes disagree")
    proj = np.einsum("kma,mqa->kmq", hh, beams.b)
    c = (proj.real**2 + proj.imag**2) / noise_var
    return GainTable(c=c, noise_var=float(noise_var))


def dump_trace_csv(path, realizations) -> None:
    """Write channel coefficients as rows slot,k,m,antenna,re,im."""
    with open(path, "w") as fh:
        fh.write("slot,k,m,antenna,re,im\n")
        for real in realizations:
            K, M, t = real.h.shape
            for k in range(K):
                for m in range(M):
                    for a in range(t):
                        z = real.h[k, m, a]
                        fh.write(f"{real.slot},{k},{m},{a},{z.real:.12g},{z.imag:.12g}\n")
