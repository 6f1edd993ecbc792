import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.optimize import linprog

from freelip.metric_core import PointedMetricSpace

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def transport_lp(space: PointedMetricSpace, coeffs) -> float:
    """Reference free norm: the transport LP over all ordered pairs, solved by HiGHS."""
    n = space.n_points
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j]
    keep = [k for k in range(n) if k != space.base]
    a_eq = np.zeros((len(keep), len(arcs)))
    for col, (i, j) in enumerate(arcs):
        for row, k in enumerate(keep):
            if j == k:
                a_eq[row, col] += 1.0
            if i == k:
                a_eq[row, col] -= 1.0
    b_eq = np.asarray(coeffs, dtype=float)[keep]
    c = np.array([space.dist[i, j] for i, j in arcs])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


@pytest.fixture
def triangle():
    # 3-4-5 right triangle, base at the right angle
    return PointedMetricSpace(("o", "a", "b"), np.array([[0, 3, 4], [3, 0, 5], [4, 5, 0.0]]), 0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
