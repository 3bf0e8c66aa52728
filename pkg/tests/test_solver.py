import math

import numpy as np

from _helpers import FieldTestCase

from lib.errors import ConfigError
from lib.grid import ScalarField, VectorField3
from lib.mollifier import ball_rule, sphere_rule
from lib.solver import (
    SnapshotSeries,
    advect,
    balance_residual,
    dealias_mask,
    residual_norms,
)
from lib.synth import abc_flow


class TestAdvection(FieldTestCase):

    def test_uniform_velocity_translates(self):
        """Succeed if a uniform velocity shifts the scalar without deforming it."""
        v = VectorField3.constant(self.grid, (0.5, 0.0, 0.0))
        theta0 = ScalarField.from_function(self.grid, lambda x, y, z: np.sin(x) + 0 * y * z)
        series = advect(v, theta0, 0.05, 20)
        expected = ScalarField.from_function(self.grid, lambda x, y, z: np.sin(x - 0.5) + 0 * y * z)
        self.assert_close(series.snapshots[-1], expected, atol=1e-8)
        assert len(series) == 21
        assert math.isclose(series.times[-1], 1.0)

    def test_scalar_variance_is_conserved(self):
        v = abc_flow(self.grid, 0.5, 0.5, 0.5)
        series = advect(v, self.scalar(), 0.01, 10, stride=5)
        assert len(series) == 3
        assert math.isclose(series.spacing, 0.05)
        norms = [float(np.mean(s.data ** 2)) for s in series.snapshots]
        assert abs(norms[-1] - norms[0]) <= 1e-8 * norms[0]

    def test_reversed_velocity_returns_initial_state(self):
        v = abc_flow(self.grid, 0.5, 0.5, 0.5)
        forward = advect(v, self.scalar(), 0.005, 20)
        backward = advect(-v, forward.snapshots[-1], 0.005, 20)
        self.assert_close(backward.snapshots[-1], forward.snapshots[0], rtol=0.0, atol=1e-6)

    def test_scalar_mean_is_conserved(self):
        v = abc_flow(self.grid, 0.5, 0.5, 0.5)
        theta0 = ScalarField(self.grid, self.scalar().data + 2.0)
        series = advect(v, theta0, 0.01, 10)
        means = np.array([float(np.mean(s.data)) for s in series.snapshots])
        np.testing.assert_allclose(means, means[0], rtol=0.0, atol=1e-12)
        assert abs(means[0] - float(np.mean(theta0.data))) <= 1e-12

    def test_initial_snapshot_is_dealiased(self):
        high = ScalarField.from_function(self.grid, lambda x, y, z: np.cos(7 * x) + 0 * y * z)
        series = advect(VectorField3.constant(self.grid, (0.1, 0.0, 0.0)), high, 0.01, 1)
        assert series.snapshots[0].max_abs() < 1e-12

    def test_validation(self):
        v = abc_flow(self.grid)
        theta = self.scalar()
        with self.assertRaises(ConfigError):
            advect(v, theta, 1.0, 2)
        with self.assertRaises(ConfigError):
            advect(v, theta, -0.01, 2)
        with self.assertRaises(ConfigError):
            advect(v, theta, 0.01, 0)
        with self.assertRaises(ConfigError):
            advect(v, theta, 0.01, 2, stride=0)
        compressible = VectorField3.from_function(self.grid, lambda x, y, z: (np.sin(x), 0 * y, 0 * z))
        with self.assertRaises(ConfigError):
            advect(compressible, theta, 0.01, 2)

    def test_dealias_mask(self):
        mask = dealias_mask(self.grid)
        kx = self.grid.integer_wavenumbers()[0]
        assert not np.any(mask[np.abs(np.broadcast_to(kx, mask.shape)) >= 6])
        assert mask[0, 0, 5]
        with self.assertRaises(ConfigError):
            dealias_mask(self.grid, 1.5)


class TestSnapshotSeries(FieldTestCase):

    def test_uniform_spacing(self):
        v = abc_flow(self.grid)
        theta = self.scalar()
        with self.assertRaises(ConfigError):
            SnapshotSeries((0.0, 0.1, 0.3), (theta,) * 3, v, 0.1)
        with self.assertRaises(ConfigError):
            SnapshotSeries((0.0, 0.1), (theta,), v, 0.1)


class TestBalance(FieldTestCase):

    def setUp(self):
        super(TestBalance, self).setUp()
        self.ball = ball_rule(8, sphere_rule(16), 1.0)

    def test_uniform_velocity_has_no_dissipation(self):
        v = VectorField3.constant(self.grid, (0.4, -0.2, 0.1))
        series = advect(v, self.scalar(), 0.001, 4)
        residuals = []
        for eps in (2 * self.grid.spacing, 4 * self.grid.spacing):
            result = balance_residual(series, eps, self.ball)
            assert all(d.max_abs() < 1e-12 for d in result.dissipation_terms)
            residuals.append(max(n["L2"] for _, n in result))
        assert residuals[1] <= residuals[0] + 1e-12
        assert residuals[0] < 1e-4

    def test_residual_shrinks_with_epsilon(self):
        """Succeed if the local balance closes better as the mollifier narrows."""
        v = abc_flow(self.grid, 0.5, 0.5, 0.5)
        series = advect(v, self.scalar(), 0.005, 4)
        l2 = []
        for eps in (4 * self.grid.spacing, 2 * self.grid.spacing):
            result = balance_residual(series, eps, self.ball)
            assert result.times == series.times[1:-1]
            l2.append(float(np.mean([n["L2"] for n in result.norms])))
        assert l2[1] < l2[0]

    def test_terms_combine(self):
        v = abc_flow(self.grid, 0.5, 0.5, 0.5)
        series = advect(v, self.scalar(), 0.005, 2)
        result = balance_residual(series, 0.8, self.ball)
        expected = result.time_terms[0] + result.flux_terms[0] - result.dissipation_terms[0]
        self.assert_close(result.residuals[0], expected, atol=1e-14)
        assert result.epsilon == 0.8

    def test_needs_three_snapshots(self):
        series = advect(abc_flow(self.grid), self.scalar(), 0.01, 1)
        with self.assertRaises(ConfigError):
            balance_residual(series, 0.8, self.ball)

    def test_indices_must_be_interior(self):
        series = advect(abc_flow(self.grid), self.scalar(), 0.01, 3)
        with self.assertRaises(ConfigError):
            balance_residual(series, 0.8, self.ball, indices=[0])
        result = balance_residual(series, 0.8, self.ball, indices=[2])
        assert len(result.residuals) == 1


class TestResidualNorms(FieldTestCase):

    def test_norms(self):
        norms = residual_norms(np.array([3.0, -4.0]))
        assert norms["L1"] == 3.5
        assert math.isclose(norms["L2"], math.sqrt(12.5))
        assert norms["Linf"] == 4.0
