import math
import os
import shutil
import sys
import tempfile
from unittest import TestCase

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from lib.grid import PeriodicGrid, ScalarField, VectorField3  # noqa: E402


def smooth_scalar(grid, seed=0):
    """A few low Fourier modes with random phases; band-limited for n >= 16."""
    rng = np.random.default_rng(seed)
    x, y, z = grid.coordinates()
    k = grid.fundamental
    data = np.zeros(grid.shape)
    for mode in ((1, 0, 0), (0, 1, 1), (1, -1, 2), (2, 1, 0)):
        phase = rng.uniform(0, 2 * math.pi)
        data = data + rng.normal() * np.cos(k * (mode[0] * x + mode[1] * y + mode[2] * z) + phase)
    return ScalarField(grid, data)


def smooth_vector(grid, seed=0):
    """Solenoidal combination of sine/cosine modes (a perturbed ABC flow)."""
    rng = np.random.default_rng(seed)
    a, b, c = rng.uniform(0.5, 1.5, 3)
    x, y, z = grid.coordinates()
    k = grid.fundamental
    return VectorField3.from_components(
        grid,
        a * np.sin(k * z) + c * np.cos(k * y) + 0.3 * np.cos(2 * k * y),
        b * np.sin(k * x) + a * np.cos(k * z) + 0.3 * np.sin(2 * k * z),
        c * np.sin(k * y) + b * np.cos(k * x) + 0.3 * np.cos(2 * k * x),
    )


class FieldTestCase(TestCase):
    """Providing grids, smooth fields and array assertions for field tests."""

    n = 16

    def setUp(self):
        self.grid = PeriodicGrid(self.n)

    def scalar(self, seed=0, grid=None):
        return smooth_scalar(grid or self.grid, seed)

    def vector(self, seed=0, grid=None):
        return smooth_vector(grid or self.grid, seed)

    def assert_close(self, actual, expected, rtol=1e-10, atol=1e-12):
        actual = getattr(actual, "data", actual)
        expected = getattr(expected, "data", expected)
        np.testing.assert_allclose(actual, expected, rtol=rtol, atol=atol)

    def relative_l2(self, actual, expected):
        actual = np.asarray(getattr(actual, "data", actual))
        expected = np.asarray(getattr(expected, "data", expected))
        scale = max(float(np.sqrt(np.mean(expected ** 2))), 1e-300)
        return float(np.sqrt(np.mean((actual - expected) ** 2))) / scale


class TempDirTestCase(FieldTestCase):
    """Adds a scratch directory removed after each test."""

    def setUp(self):
        super(TempDirTestCase, self).setUp()
        self.tmp = tempfile.mkdtemp(prefix="yaglom-test-")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)
