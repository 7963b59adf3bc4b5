import warnings

import numpy as np
import pytest

from maxcloak.errors import IllConditionedModeWarning


@pytest.fixture(autouse=True)
def _quiet_modes():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditionedModeWarning)
        yield


def fd_jacobian(f, x, h):
    """Central-difference Jacobian ``J[i, j] = d f_i / d x_j`` of a vector field."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_curl(f, x, h=1e-4):
    J = fd_jacobian(f, x, h)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_div(f, x, h=1e-4):
    return np.trace(fd_jacobian(f, x, h))


def random_points(n, r_lo, r_hi, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(r_lo, r_hi, size=n)
    return d * r[:, None]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
