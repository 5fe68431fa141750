import numpy as np
import pytest


def random_lasso_instance(rng, d_range=(10, 81), m_range=(10, 121), lam_range=(0.01, 2.0)):
    """Random unit-column instance; lam is drawn relative to ||A^T b||_inf
    so the solution is neither trivially zero nor dense."""
    d = int(rng.integers(*d_range))
    m = int(rng.integers(*m_range))
    A = rng.normal(size=(d, m))
    A /= np.linalg.norm(A, axis=0)
    b = rng.normal(size=d)
    b /= np.linalg.norm(b)
    lam = float(rng.uniform(*lam_range) * np.max(np.abs(A.T @ b)))
    return A, b, lam


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
