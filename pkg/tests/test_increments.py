import numpy as np

from _helpers import FieldTestCase

from lib.errors import ConfigError
from lib.grid import ScalarField, VectorField3
from lib.increments import (
    FieldShifter,
    ShiftMethod,
    increment,
    increments_many,
    longitudinal,
    shifted,
    shifted_many,
)


class TestShifts(FieldTestCase):

    def test_fourier_shift_is_exact_for_band_limited_fields(self):
        f = ScalarField.from_function(self.grid, lambda x, y, z: np.cos(x) * np.sin(2 * z) + 0 * y)
        ell = (0.3, -0.2, 0.45)
        expected = ScalarField.from_function(
            self.grid, lambda x, y, z: np.cos(x + 0.3) * np.sin(2 * (z + 0.45)) + 0 * y
        )
        self.assert_close(shifted(f, ell), expected, atol=1e-12)

    def test_lattice_displacements_agree_across_methods(self):
        h = self.grid.spacing
        ell = (2 * h, -h, 3 * h)
        v = self.vector()
        fourier = shifted(v, ell, ShiftMethod.FOURIER_PHASE)
        trilinear = shifted(v, ell, "trilinear")
        rolled = np.roll(v.data, shift=(-3, 1, -2), axis=(-3, -2, -1))
        self.assert_close(trilinear, rolled, atol=1e-12, rtol=0)
        self.assert_close(fourier, rolled, atol=1e-12)

    def test_trilinear_is_second_order(self):
        f = ScalarField.from_function(self.grid, lambda x, y, z: np.cos(x) + 0 * y + 0 * z)
        ell = (0.5 * self.grid.spacing, 0.0, 0.0)
        expected = np.cos(self.grid.coordinates()[0] + ell[0])
        error = np.max(np.abs(shifted(f, ell, "trilinear").data - expected))
        assert 0 < error < 0.03

    def test_period_and_zero_shift(self):
        f = self.scalar()
        self.assert_close(shifted(f, (self.grid.length, 0.0, 0.0)), f, atol=1e-12)
        assert increment(f, np.zeros(3)).max_abs() == 0.0

    def test_many_matches_single(self):
        v = self.vector(seed=2)
        ells = [(0.1, 0.2, 0.3), (-0.4, 0.0, 0.25)]
        for one, many in zip(ells, shifted_many(v, ells)):
            self.assert_close(shifted(v, one), many)
        for one, many in zip(ells, increments_many(v, ells)):
            self.assert_close(increment(v, one), many)

    def test_increment_definition(self):
        v = self.vector(seed=4)
        ell = (0.2, 0.1, -0.3)
        self.assert_close(increment(v, ell), shifted(v, ell) - v, atol=1e-14)


class TestShifterValidation(FieldTestCase):

    def test_bad_method(self):
        with self.assertRaises(ConfigError):
            ShiftMethod.parse("cubic")

    def test_non_finite_displacement(self):
        with self.assertRaises(ConfigError):
            shifted(self.scalar(), (np.nan, 0, 0))

    def test_raw_stack_needs_grid(self):
        with self.assertRaises(ConfigError):
            FieldShifter(np.zeros((1,) + self.grid.shape))
        shifter = FieldShifter(self.scalar().stacked(), grid=self.grid)
        assert isinstance(shifter.shifted((0.1, 0, 0)), np.ndarray)


class TestLongitudinal(FieldTestCase):

    def test_projects_on_separation(self):
        v = VectorField3.from_function(self.grid, lambda x, y, z: (np.sin(x), 0 * y, 0 * z))
        a = 0.35
        along = longitudinal(v, (a, 0.0, 0.0))
        expected = ScalarField.from_function(
            self.grid, lambda x, y, z: np.sin(x + a) - np.sin(x) + 0 * y + 0 * z
        )
        self.assert_close(along, expected, atol=1e-12)
        assert longitudinal(v, (0.0, a, 0.0)).max_abs() < 1e-12

    def test_zero_separation(self):
        with self.assertRaises(ConfigError):
            longitudinal(self.vector(), (0.0, 0.0, 0.0))
