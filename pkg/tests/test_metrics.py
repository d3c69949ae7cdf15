import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from misofdma.metrics import (
    CostLedger, RunningStats, classic_indices, feedback_count, jain_index, modified_jain,
)

positive_vectors = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=12)


def test_jain_examples():
    assert jain_index([2.5] * 4) == pytest.approx(1.0)
    assert jain_index([1, 0, 0, 0]) == pytest.approx(0.25)
    assert jain_index([1, 2, 3]) == pytest.approx(6 / 7)
    for bad in ([], [0, 0]):
        with pytest.raises(ValueError):
            jain_index(bad)


def test_modified_jain_examples():
    req = np.array([1.0, 2.0, 0.5])
    assert modified_jain(req, req) == pytest.approx(1.0)
    assert modified_jain(2 * req, req) == pytest.approx(1.0)
    assert modified_jain([1, 1], [1, 2]) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        modified_jain([1, 1], [1, 0])


def test_classic_indices_examples():
    assert classic_indices([3.0, 3.0, 3.0]) == (0.0, 0.0, 1.0)
    var, cov, mmr = classic_indices([0.0, 2.0])
    assert var == pytest.approx(2.0)
    assert cov == pytest.approx(np.sqrt(2))
    assert mmr == 0.0
    assert classic_indices([1, 2, 3])[0] == pytest.approx(1.0)
    for bad in ([1.0], [0.0, 0.0], [-1.0, 1.0]):
        with pytest.raises(ValueError):
            classic_indices(bad)


def test_feedback_counts():
    assert feedback_count("adaptive-tprime", 72, 4) == 288
    assert feedback_count("fixed-tbar", 72, 4) == 216
    assert feedback_count("classic-ob", 72, 4) == 144
    with pytest.raises(ValueError):
        feedback_count("full-csi", 72, 4)


@settings(max_examples=200)
@given(x=positive_vectors, a=st.floats(1e-3, 1e3))
def test_jain_range_and_scale_invariance(x, a):
    j = jain_index(x)
    assert 1 / len(x) - 1e-12 <= j <= 1 + 1e-12
    assert jain_index(np.asarray(x) * a) == pytest.approx(j, abs=1e-12)


@settings(max_examples=100)
@given(x=positive_vectors)
def test_jain_one_iff_equal(x):
    x = np.asarray(x)
    if np.ptp(x) > 1e-6 * x.max():
        assert jain_index(x) < 1
    assert jain_index(np.full_like(x, x[0])) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), K=st.integers(1, 8), gamma=st.floats(0.1, 1e4))
def test_balanced_rates_give_unit_modified_jain(seed, K, gamma):
    phi = np.random.default_rng(seed).dirichlet(np.ones(K))
    assert modified_jain(phi * gamma, phi * gamma) == pytest.approx(1.0, abs=1e-12)


def test_cost_ledger_add_and_per_slot():
    a = CostLedger(pooling=4, allocation=10, slots=2)
    b = CostLedger(allocation=6, feedback=8, slots=2)
    s = a + b
    assert s.allocation == 16 and s.feedback == 8 and s.slots == 4
    assert s.per_slot()["allocation"] == 4.0
    assert "slots" not in s.per_slot()
    assert CostLedger().per_slot()["pooling"] == 0.0


def test_running_stats():
    st_ = RunningStats()
    assert st_.summarize() == {}
    assert len(st_) == 0
    for v in range(1, 11):
        st_.record(x=v, c=5.0)
    out = st_.summarize()
    assert out["x"] == pytest.approx(5.5)
    assert out["c"] == 5.0
    assert len(st_) == 10
    np.testing.assert_array_equal(st_.series("x"), np.arange(1, 11))
    w = RunningStats(window=3)
    for v in range(1, 11):
        w.record(x=v)
    assert w.summarize()["x_window"] == pytest.approx(9.0)
