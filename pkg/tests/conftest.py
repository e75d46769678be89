import numpy as np
import pytest

from hdpack import hypervector as hv

EDGE_DIMS = [1, 31, 32, 33, 1000, 1024, 10239, 10240]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_bits(rng, rows, dim, p=0.5):
    return (rng.random((rows, dim)) < p).astype(np.uint8)


def random_packed(rng, rows, dim):
    return hv.pack(random_bits(rng, rows, dim))
