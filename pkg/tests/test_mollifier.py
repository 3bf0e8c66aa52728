import math

import numpy as np

from _helpers import FieldTestCase

from lib.errors import ConfigError, NumericalError
from lib.grid import PeriodicGrid, ScalarField
from lib.mollifier import (
    ball_rule,
    default_profile,
    gauss_product_rule,
    grad_kernel,
    kernel_value,
    lattice_nodes,
    make_profile,
    make_sphere,
    mollify,
    normalization_constant,
    radial_third_moment,
    sphere_nodes,
    sphere_rule,
)

MOMENT = -3.0 / (4.0 * math.pi)


class TestProfiles(FieldTestCase):

    def test_unit_integral(self):
        for name in ("bump", "quartic"):
            assert math.isclose(make_profile(name).integral(), 1.0, rel_tol=1e-10)

    def test_normalization_constant(self):
        c0 = normalization_constant(lambda r: 1.0 - r * r)
        assert math.isclose(c0, 15.0 / (8.0 * math.pi), rel_tol=1e-12)
        with self.assertRaises(NumericalError):
            normalization_constant(lambda r: 0.0 * r)

    def test_third_moment_of_normalized_profiles(self):
        """Succeed if int r^3 phi'(r) dr = -3/(4 pi) for every unit-mass profile."""
        for name in ("bump", "quartic"):
            assert abs(radial_third_moment(make_profile(name)) - MOMENT) < 1e-8

    def test_third_moment_is_linear_in_mass(self):
        scaled = default_profile().scaled(2.5)
        assert abs(radial_third_moment(scaled) - 2.5 * MOMENT) < 1e-8
        assert math.isclose(scaled.integral(), 2.5, rel_tol=1e-10)

    def test_unknown_profile(self):
        with self.assertRaises(ConfigError):
            make_profile("gaussian")

    def test_support(self):
        profile = default_profile()
        assert profile.eval(1.0) == 0.0
        assert profile.eval(1.5) == 0.0
        assert profile.eval(0.0) > 0.0
        assert profile.derivative(0.0) == 0.0


class TestKernel(FieldTestCase):

    def test_gradient_matches_finite_differences(self):
        ell = np.array([0.2, 0.1, -0.3])
        eps = 0.8
        step = 1e-6
        numeric = np.array(
            [
                (kernel_value(ell + step * e, eps) - kernel_value(ell - step * e, eps)) / (2 * step)
                for e in np.eye(3)
            ]
        )
        np.testing.assert_allclose(grad_kernel(ell, eps), numeric, rtol=1e-6)

    def test_gradient_vanishes_at_origin_and_outside(self):
        values = grad_kernel(np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), 1.0)
        assert np.all(values == 0.0)

    def test_gradient_rejects_bad_scale(self):
        with self.assertRaises(ConfigError):
            grad_kernel(np.zeros(3), 0.0)


class TestSphereRules(FieldTestCase):

    def test_fibonacci_rule_moments(self):
        sphere = sphere_rule(64)
        assert len(sphere) == 64
        assert np.all(np.abs(sphere.weights @ sphere.directions) < 1e-14)
        second = np.einsum("p,pi,pj->ij", sphere.weights, sphere.directions, sphere.directions)
        np.testing.assert_allclose(np.diag(second), np.full(3, 1.0 / 3.0), atol=0.05)
        assert math.isclose(np.trace(second), 1.0, rel_tol=1e-13)

    def test_product_rule_is_exact_for_low_degree(self):
        sphere = gauss_product_rule(6)
        second = np.einsum("p,pi,pj->ij", sphere.weights, sphere.directions, sphere.directions)
        np.testing.assert_allclose(second, np.eye(3) / 3.0, atol=1e-13)
        fourth = sphere.average(lambda d: d[:, 2] ** 4)
        assert math.isclose(fourth, 0.2, rel_tol=1e-12)

    def test_odd_counts_rejected(self):
        for count in (7, 4):
            with self.assertRaises(ConfigError):
                sphere_rule(count)
        with self.assertRaisesRegex(ConfigError, r"antipodal pairs; got 7 \(use 8\)"):
            sphere_rule(7)
        with self.assertRaises(ConfigError):
            make_sphere("lebedev")

    def test_sphere_nodes_scale(self):
        """Succeed if (1/lam) times the average of d . (lam d) is one."""
        for lam in (0.1, 0.7):
            nodes = sphere_nodes(sphere_rule(32), lam)
            assert math.isclose(nodes.integrate(lambda ell: ell), 1.0, rel_tol=1e-13)


class TestNodeFamilies(FieldTestCase):

    def test_ball_rule_annihilates_constants(self):
        nodes = ball_rule(16, sphere_rule(64), 0.5).kernel_nodes()
        assert np.all(np.abs(nodes.vectors.sum(axis=0)) < 1e-12)

    def test_ball_rule_linear_moment(self):
        """Succeed if the ball rule gives int grad(phi_eps) . ell = -3."""
        for eps in (0.3, 1.1):
            nodes = ball_rule(32, gauss_product_rule(4), eps).kernel_nodes()
            assert math.isclose(nodes.integrate(lambda ell: ell), -3.0, rel_tol=1e-4)

    def test_lattice_family_linear_moment(self):
        grid = PeriodicGrid(32)
        nodes = lattice_nodes(grid, 8 * grid.spacing)
        assert math.isclose(nodes.integrate(lambda ell: ell), -3.0, rel_tol=1e-3)
        assert np.all(np.linalg.norm(nodes.displacements, axis=1) < 8 * grid.spacing)

    def test_with_epsilon_rescales(self):
        ball = ball_rule(8, sphere_rule(16), 1.0)
        moved = ball.with_epsilon(0.25)
        assert moved.epsilon == 0.25
        np.testing.assert_allclose(
            moved.kernel_nodes().displacements, 0.25 * ball.kernel_nodes().displacements
        )


class TestMollify(FieldTestCase):

    def test_constants_and_means_preserved(self):
        eps = 3 * self.grid.spacing
        constant = ScalarField.constant(self.grid, 2.0)
        self.assert_close(mollify(constant, eps), constant)
        f = self.scalar()
        assert math.isclose(mollify(f, eps).mean(), f.mean(), abs_tol=1e-12)

    def test_smoothing_damps_high_modes(self):
        grid = self.grid
        low = ScalarField.from_function(grid, lambda x, y, z: np.cos(x) + 0 * y + 0 * z)
        high = ScalarField.from_function(grid, lambda x, y, z: np.cos(5 * x) + 0 * y + 0 * z)
        eps = 3 * grid.spacing
        assert mollify(high, eps).max_abs() < mollify(low, eps).max_abs()

    def test_scale_range(self):
        with self.assertRaises(ConfigError):
            mollify(self.scalar(), self.grid.length / 2)
