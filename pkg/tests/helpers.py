import numpy as np

from misofdma.channel import tap_gains


def channel_series(fader, n_slots, dt, chunk=5000):
    """Tap processes (K, t, L, n_slots) sampled every dt, computed in chunks."""
    parts = [tap_gains(fader, np.arange(s, min(s + chunk, n_slots)) * dt)
             for s in range(0, n_slots, chunk)]
    return np.concatenate(parts, axis=-1)


def autocorr(x, max_lag):
    """Time-average autocorrelation along the last axis for lags 0..max_lag."""
    n = x.shape[-1]
    f = np.fft.fft(x, 2 * n, axis=-1)
    r = np.fft.ifft(f * f.conj(), axis=-1)[..., :max_lag + 1]
    return (r / (n - np.arange(max_lag + 1))).real
