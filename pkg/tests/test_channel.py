import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from misofdma.channel import (
    FLAT, PEDESTRIAN, BeamSet, ChannelRealization, MultipathProfile, dump_trace_csv,
    equivalent_gains, frequency_response, generate_beam_set, make_fader, step_channel,
    ula_beams,
)
from misofdma.errors import ConfigError

from helpers import channel_series


def test_profile_validation():
    with pytest.raises(ConfigError):
        MultipathProfile((), ())
    with pytest.raises(ConfigError):
        MultipathProfile((0.0, 1e-6), (0.5, 0.4))
    with pytest.raises(ConfigError):
        MultipathProfile((1e-6, 0.0), (0.5, 0.5))


def test_pedestrian_delay_spread():
    assert PEDESTRIAN.rms_delay_spread == pytest.approx(2.3e-6, rel=0.01)
    assert sum(PEDESTRIAN.gains) == pytest.approx(1.0, abs=1e-12)


def test_fader_deterministic():
    a = make_fader(PEDESTRIAN, 3, 2, 8, 15e3, 7)
    b = make_fader(PEDESTRIAN, 3, 2, 8, 15e3, 7)
    assert a.state_bytes() == b.state_bytes()
    ra, rb = step_channel(a, 1e-3), step_channel(b, 1e-3)
    assert np.array_equal(ra.h, rb.h)


def test_zero_doppler_freezes_channel():
    prof = MultipathProfile((0.0,), (1.0,), doppler_hz=0.0)
    f = make_fader(prof, 2, 2, 4, 15e3, 1)
    first = step_channel(f, 1e-3).h
    for _ in range(20):
        h = step_channel(f, 1e-3).h
    np.testing.assert_array_equal(h, first)


def test_single_tap_is_flat_and_multi_tap_is_not():
    f = make_fader(FLAT, 2, 2, 16, 15e3, 3)
    h = step_channel(f, 1e-3).h
    np.testing.assert_allclose(h, np.broadcast_to(h[:, :1], h.shape), atol=1e-12)
    g = make_fader(PEDESTRIAN, 2, 2, 16, 15e3, 3)
    h = step_channel(g, 1e-3).h
    assert np.abs(h - h[:, :1]).max() > 1e-3


def test_slot_counter_advances():
    f = make_fader(FLAT, 1, 1, 1, 15e3, 0)
    assert step_channel(f, 1e-3).slot == 0
    assert step_channel(f, 1e-3).slot == 1
    assert f.time == pytest.approx(2e-3)


def test_nonfinite_channel_rejected():
    with pytest.raises(FloatingPointError):
        ChannelRealization(h=np.array([[[np.nan + 0j]]]), slot=0)


def test_user_channels_uncorrelated():
    f = make_fader(PEDESTRIAN, 2, 2, 4, 15e3, 11)
    h = frequency_response(f, channel_series(f, 20_000, 5e-3))  # (K, M, t, T)
    cross = np.mean(h[0] * h[1].conj(), axis=-1)
    # aggregate over subcarriers and antennas; single entries carry finite-sample noise
    assert abs(cross.mean()) < 0.02


def test_beam_t1_is_unit_vector():
    b = generate_beam_set(1, 5, seed=0).b
    assert b.shape == (5, 1, 1)
    np.testing.assert_allclose(np.abs(b), 1.0)


@settings(max_examples=30, deadline=None)
@given(t=st.integers(1, 6), M=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_random_beams_orthonormal(t, M, seed):
    gram = generate_beam_set(t, M, "random-orthonormal", seed).gram
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(t), gram.shape), atol=1e-10)


def test_ula_beams_weights_and_gram():
    b = ula_beams(4)
    sin_theta = np.array([-1.0, -0.5, 0.0, 0.5])
    n = np.arange(4)
    expected = 0.5 * np.exp(-1j * np.pi * np.outer(sin_theta, n))
    np.testing.assert_allclose(b, expected, atol=1e-15)
    gram = generate_beam_set(4, 3, "ula-halfwave").gram
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(4), gram.shape), atol=1e-10)


def test_unknown_beam_mode():
    with pytest.raises(ConfigError):
        generate_beam_set(2, 2, "circular")


def test_aligned_channel_gain():
    beams = generate_beam_set(3, 2, seed=4)
    # the gain is |h b|^2 with no conjugation, so conj(b) aligns with b
    h = beams.b[:, 0, :].conj()[None]
    c = equivalent_gains(h, beams, 1.0).c
    np.testing.assert_allclose(c[0, :, 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(c[0, :, 1:], 0.0, atol=1e-12)


def test_gain_scaling_and_noise_check(rng):
    beams = generate_beam_set(2, 3, seed=rng)
    h = rng.standard_normal((2, 3, 2)) + 1j * rng.standard_normal((2, 3, 2))
    c1 = equivalent_gains(h, beams, 0.5).c
    c2 = equivalent_gains(2 * h, beams, 0.5).c
    np.testing.assert_allclose(c2, 4 * c1)
    with pytest.raises(ConfigError):
        equivalent_gains(h, beams, 0.0)
    with pytest.raises(ValueError):
        equivalent_gains(h[:, :2], beams, 1.0)


@settings(max_examples=40, deadline=None)
@given(t=st.integers(1, 5), sigma2=st.floats(1e-3, 10.0), seed=st.integers(0, 2**32 - 1))
def test_parseval(t, sigma2, seed):
    rng = np.random.default_rng(seed)
    beams = generate_beam_set(t, 4, seed=rng)
    h = rng.standard_normal((3, 4, t)) + 1j * rng.standard_normal((3, 4, t))
    c = equivalent_gains(h, beams, sigma2).c
    np.testing.assert_allclose(c.sum(axis=-1) * sigma2, np.sum(np.abs(h) ** 2, axis=-1),
                               rtol=1e-10)


def test_dump_trace_csv(tmp_path):
    f = make_fader(FLAT, 1, 2, 2, 15e3, 0)
    path = tmp_path / "h.csv"
    dump_trace_csv(path, [step_channel(f, 1e-3) for _ in range(2)])
    lines = path.read_text().splitlines()
    assert lines[0] == "slot,k,m,antenna,re,im"
    assert len(lines) == 1 + 2 * 1 * 2 * 2


def test_beamset_gram_shape():
    assert BeamSet(b=np.eye(2)[None].astype(complex)).gram.shape == (1, 2, 2)
