import numpy as np
import pytest

from voxelqa.grid import VoxelGrid

SPACING = (5.0, 1.171875, 1.171875)


def fgrid(arr, spacing=(1.0, 1.0, 1.0)):
    return VoxelGrid(np.asarray(arr, dtype=np.float32), spacing)


def mgrid(arr, spacing=(1.0, 1.0, 1.0)):
    return VoxelGrid(np.asarray(arr, dtype=np.uint8), spacing)


def random_prob(rng, dims=(6, 7, 5), spacing=(1.0, 1.0, 1.0)):
    return fgrid(rng.random(dims, dtype=np.float32), spacing)


def random_mask(rng, dims=(6, 7, 5), spacing=(1.0, 1.0, 1.0), p=0.5):
    return mgrid(rng.random(dims) < p, spacing)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
