import numpy as np
import pytest

from gaimfit import make_shifted_legendre


def legendre_recurrence(k: int, t):
    """Independent Legendre oracle via the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if k == 0:
        return p_prev
    p = t.copy()
    for i in range(2, k + 1):
        p_prev, p = p, ((2 * i - 1) * t * p - (i - 1) * p_prev) / i
    return p


def shifted_legendre_oracle(k: int, t):
    return legendre_recurrence(k, t) - legendre_recurrence(k, np.zeros(1))[0]


def random_unit_columns(rng, d: int, m: int) -> np.ndarray:
    a = rng.standard_normal((d, m))
    return a / np.linalg.norm(a, axis=0)


@pytest.fixture(scope="session")
def basis3():
    return make_shifted_legendre(3)
