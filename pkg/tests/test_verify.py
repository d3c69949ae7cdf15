import numpy as np

from misofdma.config import SimConfig
from misofdma.sim import run
from misofdma.verify import BoundMonitor, oracle_equivalence, run_suite, waterfill_stationarity


def test_suite_passes():
    checks = run_suite(50)
    assert [c.name for c in checks if not c.ok] == []


def test_bound_monitor_flags_breaches():
    m = BoundMonitor()

    class S:
        def power_bound(self):
            return 0.5

    c = np.ones((1, 1, 2))
    m(0, np.array([[1, 0]]), np.array([[0.6, 0.0]]), c, S())
    assert m.power_violations == 1
    m(1, np.array([[1, 1]]), np.array([[0.1, 0.1]]), c, S())
    assert m.coupling_violations == 1
    m(2, np.array([[1, 0]]), np.array([[0.0, 0.0]]), c, S())
    assert m.coupling_violations == 2


def test_monitor_clean_on_real_run():
    m = BoundMonitor()
    run(SimConfig(K=2, t=2, M=4, n_slots=50), observer=m)
    assert m.slots == 50 and m.violations == 0
    assert 0 < m.worst_rate_ratio <= 1


def test_oracle_helpers_small():
    frac, viol, n = oracle_equivalence(20, seed=5)
    assert viol == 0 and n == 80 and frac >= 0.9
    worst, count = waterfill_stationarity(n=500, seed=9)
    assert count == 500 and worst < 1e-6
