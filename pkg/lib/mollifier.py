"""Radial mollifier profiles and the node sets that integrate against them.

A profile is a radial shape on [0, 1) together with the constant ``c0`` that
gives it unit integral over the unit ball. Every evaluator consumes
displacements through :class:`KernelNodes`: a list of displacements together
with weight-carrying vectors, so that ``sum(vectors[p] . F(displacements[p]))``
approximates the integral the node family stands for.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from logging import getLogger
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ConfigError, NumericalError

LOGGER = getLogger(__name__)

# 1 - r**2 below this is treated as outside the support.
SUPPORT_CUTOFF = 1e-12
GOLDEN_RATIO = (1.0 + 5.0 ** 0.5) / 2.0


def _bump(r):
    r = np.asarray(r, dtype=float)
    s = 1.0 - r * r
    inside = s > SUPPORT_CUTOFF
    safe = np.where(inside, s, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def _bump_derivative(r):
    r = np.asarray(r, dtype=float)
    s = 1.0 - r * r
    inside = s > SUPPORT_CUTOFF
    safe = np.where(inside, s, 1.0)
    return np.where(inside, np.exp(-1.0 / safe) * (-2.0 * r / (safe * safe)), 0.0)


def _quartic(r):
    r = np.asarray(r, dtype=float)
    s = 1.0 - r * r
    return np.where(s > 0, s ** 4, 0.0)


def _quartic_derivative(r):
    r = np.asarray(r, dtype=float)
    s = 1.0 - r * r
    return np.where(s > 0, -8.0 * r * s ** 3, 0.0)


PROFILE_SHAPES = {
    "bump": (_bump, _bump_derivative),
    "quartic": (_quartic, _quartic_derivative),
}


def _quad(function, what):
    value, abserr = integrate.quad(
        lambda r: float(function(r)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200
    )
    if not math.isfinite(value) or abserr > 1e-11 * max(abs(value), 1e-300):
        raise NumericalError(
            "radial quadrature for {} did not converge (value {!r}, error {!r})".format(
                what, value, abserr
            )
        )
    return value


def normalization_constant(shape):
    """Return C0 such that 4 pi int_0^1 r^2 C0 shape(r) dr = 1.

    Parameters
    ----------
    shape : callable
        Radial profile, vectorized over ``r`` and zero for ``r >= 1``.
    """
    mass = 4.0 * math.pi * _quad(lambda r: r * r * shape(r), "profile mass")
    if mass <= 0:
        raise NumericalError("profile has non-positive mass {!r}".format(mass))
    return 1.0 / mass


@dataclass(frozen=True)
class MollifierProfile:
    """A radial kernel phi(r) = c0 * shape(r) supported in the unit ball."""

    name: str
    shape: Callable = field(repr=False)
    shape_derivative: Callable = field(repr=False)
    c0: float

    def eval(self, r):
        return self.c0 * self.shape(r)

    def derivative(self, r):
        return self.c0 * self.shape_derivative(r)

    def scaled(self, factor):
        """Same shape with total integral ``factor``."""
        return replace(self, name="{}*{:g}".format(self.name, factor), c0=self.c0 * factor)

    def integral(self):
        return 4.0 * math.pi * _quad(lambda r: r * r * self.eval(r), "profile integral")


@lru_cache(maxsize=None)
def make_profile(name="bump"):
    try:
        shape, derivative = PROFILE_SHAPES[name]
    except KeyError:
        raise ConfigError(
            "unknown mollifier profile {!r}; choose from {}".format(name, sorted(PROFILE_SHAPES))
        ) from None
    return MollifierProfile(name, shape, derivative, normalization_constant(shape))


def default_profile():
    return make_profile("bump")


def radial_third_moment(profile):
    """Return int_0^1 r^3 phi'(r) dr, which is -3/(4 pi) times the profile integral."""
    return _quad(lambda r: r ** 3 * profile.derivative(r), "third moment")


def kernel_value(ell, eps, profile=None):
    """phi_eps(ell) = eps^-3 phi(|ell|/eps) for displacements of shape (..., 3)."""
    profile = profile or default_profile()
    ell = np.asarray(ell, dtype=float)
    rho = np.linalg.norm(ell, axis=-1) / eps
    return profile.eval(rho) / eps ** 3


def grad_kernel(ell, eps, profile=None):
    """Gradient of phi_eps at displacements ``ell`` of shape (..., 3).

    Zero outside the support and at the origin.
    """
    if not eps > 0:
        raise ConfigError("mollifier scale must be positive, got {!r}".format(eps))
    profile = profile or default_profile()
    ell = np.asarray(ell, dtype=float)
    r = np.linalg.norm(ell, axis=-1)
    rho = r / eps
    active = (r > 0) & (rho < 1)
    safe = np.where(active, r, 1.0)
    scale = np.where(active, profile.derivative(np.where(active, rho, 0.0)) / (eps ** 4 * safe), 0.0)
    return scale[..., None] * ell


@dataclass(frozen=True, eq=False)
class KernelNodes:
    """Displacements with the vectors that weight an integrand at each one."""

    displacements: np.ndarray
    vectors: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("displacements", "vectors"):
            value = np.array(getattr(self, name), dtype=float).reshape(-1, 3)
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if self.displacements.shape != self.vectors.shape:
            raise ConfigError("node displacements and vectors differ in shape")

    def __len__(self):
        return len(self.displacements)

    def integrate(self, function):
        """Sum vectors[p] . function(displacements[p]) for a vectorized function."""
        values = np.asarray(function(self.displacements), dtype=float).reshape(-1, 3)
        return float(np.einsum("pi,pi->", self.vectors, values))


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Directions and weights realizing the normalized surface average."""

    directions: np.ndarray
    weights: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        directions = np.array(self.directions, dtype=float).reshape(-1, 3)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if len(weights) != len(directions) or not len(weights):
            raise ConfigError("sphere rule needs one weight per direction")
        if np.any(np.abs(np.linalg.norm(directions, axis=1) - 1.0) > 1e-14):
            raise ConfigError("sphere directions must be unit vectors")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-14:
            raise ConfigError("sphere weights must be positive and sum to 1")
        moments = np.abs(weights @ directions)
        if np.any(moments > 1e-3):
            raise ConfigError("sphere rule first moments {} exceed 1e-3".format(moments))
        directions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    def average(self, function):
        """Weighted average of a function evaluated on the directions."""
        return np.tensordot(self.weights, np.asarray(function(self.directions)), axes=1)

    def descriptor(self):
        return {"rule": self.name, "count": len(self)}


def sphere_rule(count):
    """Spiral (Fibonacci-lattice) directions with equal weights.

    The upper half of the spiral is completed by its antipodes, so ``count``
    must be even.
    """
    if count < 6 or count % 2:
        raise ConfigError(
            "sphere rule needs count >= 6, extended to even counts since directions come "
            "in antipodal pairs; got {} (use {})".format(count, max(6, count + count % 2))
        )
    indices = np.arange(count // 2, dtype=float) + 0.5
    polar = np.arccos(1.0 - 2.0 * indices / count)
    azimuth = 2.0 * np.pi * indices / GOLDEN_RATIO
    upper = np.column_stack(
        (np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar))
    )
    upper /= np.linalg.norm(upper, axis=1)[:, None]
    directions = np.concatenate((upper, -upper))
    return SphereQuadrature(directions, np.full(count, 1.0 / count), "fibonacci")


def gauss_product_rule(order):
    """Gauss-Legendre in cos(polar angle) times a uniform azimuthal rule."""
    if order < 2:
        raise ConfigError("product rule order must be >= 2, got {}".format(order))
    nodes, weights = leggauss(order)
    n_azimuth = 2 * order
    azimuth = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    sin_polar = np.sqrt(1.0 - nodes ** 2)
    directions = np.stack(
        np.broadcast_arrays(
            sin_polar[:, None] * np.cos(azimuth)[None, :],
            sin_polar[:, None] * np.sin(azimuth)[None, :],
            nodes[:, None],
        ),
        axis=-1,
    ).reshape(-1, 3)
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    w = np.repeat(weights / (2.0 * n_azimuth), n_azimuth)
    return SphereQuadrature(directions, w / w.sum(), "gauss_product")


def make_sphere(rule="fibonacci", count=64, order=8):
    if rule == "fibonacci":
        return sphere_rule(count)
    if rule == "gauss_product":
        return gauss_product_rule(order)
    raise ConfigError("unknown sphere rule {!r}".format(rule))


def sphere_nodes(sphere, lam):
    """Nodes for (1/lam) times the sphere average of a direction-weighted integrand."""
    directions = sphere.directions
    return KernelNodes(
        lam * directions,
        sphere.weights[:, None] * directions / lam,
        {"family": "sphere", "lambda": float(lam), **sphere.descriptor()},
    )


@dataclass(frozen=True, eq=False)
class BallQuadrature:
    """Gauss-Legendre radii on (0, 1) times a sphere rule, at scale epsilon."""

    radial_nodes: np.ndarray
    sphere: SphereQuadrature
    epsilon: float
    profile: MollifierProfile = field(default_factory=default_profile)

    def __post_init__(self):
        nodes = np.array(self.radial_nodes, dtype=float).reshape(-1, 2)
        if np.any(nodes[:, 0] <= 0) or np.any(nodes[:, 0] >= 1) or np.any(nodes[:, 1] <= 0):
            raise ConfigError("radial nodes must lie in (0, 1) with positive weights")
        if not self.epsilon > 0:
            raise ConfigError("ball scale must be positive, got {!r}".format(self.epsilon))
        nodes.setflags(write=False)
        object.__setattr__(self, "radial_nodes", nodes)

    @property
    def radii(self):
        return self.radial_nodes[:, 0]

    @property
    def radial_weights(self):
        return self.radial_nodes[:, 1]

    def with_epsilon(self, eps):
        return replace(self, epsilon=float(eps))

    def kernel_nodes(self):
        """Nodes for the integral of grad(phi_eps) . F over the ball."""
        eps = self.epsilon
        r = self.radii
        radial = 4.0 * math.pi * self.radial_weights * r ** 2 * self.profile.derivative(r) / eps
        directions = self.sphere.directions
        displacements = eps * r[:, None, None] * directions[None, :, :]
        vectors = (radial[:, None] * self.sphere.weights[None, :])[:, :, None] * directions[None]
        return KernelNodes(displacements, vectors, self.descriptor())

    def descriptor(self):
        return {
            "family": "ball",
            "epsilon": float(self.epsilon),
            "radial_nodes": len(self.radial_nodes),
            "profile": self.profile.name,
            **self.sphere.descriptor(),
        }


def radial_rule(radial_count):
    """Gauss-Legendre nodes mapped onto (0, 1) as (r, w) pairs."""
    if radial_count < 4:
        raise ConfigError("radial rule needs at least 4 nodes, got {}".format(radial_count))
    x, w = leggauss(radial_count)
    return np.column_stack(((x + 1.0) / 2.0, w / 2.0))


def ball_rule(radial_count, sphere, eps, profile=None):
    return BallQuadrature(radial_rule(radial_count), sphere, float(eps), profile or default_profile())


def lattice_nodes(grid, eps, profile=None):
    """Riemann sum over lattice displacements inside the ball of radius ``eps``."""
    grid.check_scale(eps, "epsilon")
    profile = profile or default_profile()
    h = grid.spacing
    reach = int(math.ceil(eps / h))
    offsets = np.arange(-reach, reach + 1)
    lattice = np.stack(np.meshgrid(offsets, offsets, offsets, indexing="ij"), axis=-1).reshape(-1, 3)
    ell = lattice * h
    r = np.linalg.norm(ell, axis=1)
    keep = (r > 0) & (r < eps)
    ell = ell[keep]
    LOGGER.debug("lattice node family at eps=%g has %d nodes", eps, len(ell))
    return KernelNodes(
        ell,
        h ** 3 * grad_kernel(ell, eps, profile),
        {"family": "lattice", "epsilon": float(eps), "profile": profile.name, "nodes": len(ell)},
    )


@lru_cache(maxsize=32)
def _mollifier_spectrum(grid, eps, profile):
    offsets = np.rint(np.fft.fftfreq(grid.n, 1.0 / grid.n)) * grid.spacing
    dx = offsets[None, None, :]
    dy = offsets[None, :, None]
    dz = offsets[:, None, None]
    rho = np.sqrt(dx ** 2 + dy ** 2 + dz ** 2) / eps
    weights = profile.eval(rho)
    total = weights.sum()
    if not total > 0:
        raise NumericalError("mollifier at eps={} misses every lattice point".format(eps))
    spectrum = grid.forward(weights / total)
    spectrum.setflags(write=False)
    return spectrum


def mollify(f, eps, profile=None):
    """Lattice convolution with phi_eps renormalized to unit discrete mass."""
    grid = f.grid
    grid.check_scale(eps, "epsilon")
    spectrum = _mollifier_spectrum(grid, float(eps), profile or default_profile())
    return f.replace_data(grid.inverse(grid.forward(f.stacked()) * spectrum))


def mollify_array(grid, array, eps, profile=None):
    spectrum = _mollifier_spectrum(grid, float(eps), profile or default_profile())
    return grid.inverse(grid.forward(array) * spectrum)
