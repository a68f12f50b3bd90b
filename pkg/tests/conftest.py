import numpy as np
import pytest

from stablecap.matrices import PsdTuple


def random_sparse_matrix(rng, n, density=0.6):
    """Nonnegative matrix with random zeros but a positive diagonal (so per > 0)."""
    A = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < density)
    A[np.arange(n), np.arange(n)] = rng.uniform(0.1, 2.0, n)
    return A


def random_psd_tuple(rng, n, rank=None):
    mats = []
    for _ in range(n):
        B = rng.normal(size=(n, rank or n))
        mats.append(B @ B.T)
    return PsdTuple(tuple(mats))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
