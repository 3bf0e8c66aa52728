"""Field transforms that build the inputs of each system, plus the exponent estimator."""

import math
from dataclasses import asdict, dataclass
from logging import getLogger

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import (
    ScalarField,
    SymTensorField3,
    VectorField3,
    curl,
    laplacian,
    require_solenoidal,
    velocity_gradient,
)
from .increments import FieldShifter, ShiftMethod

LOGGER = getLogger(__name__)

PRESSURE_SOLENOIDAL_TOLERANCE = 1e-8
CLOSED_CONDITION_TOLERANCE = 1e-12
VELOCITY_NORM_ORDER = 4.5
VORTICITY_NORM_ORDER = 1.8
DEFAULT_EXPONENT_SCALES = 8
SNAPSHOT_CRITERION = "snapshot criterion"
# Increment norms below this fraction of max|f| count as zero.
DEGENERATE_RTOL = 1e-12


def _require_vector(field, name):
    if not isinstance(field, VectorField3):
        raise ConfigError("{} must be a vector field, got {}".format(name, type(field).__name__))


def elsasser(v, b):
    """Return (u, h) = (v + b, v - b)."""
    _require_vector(v, "v")
    _require_vector(b, "b")
    return v + b, v - b


def primitive(u, h):
    """Inverse of :func:`elsasser`: (v, b) = ((u + h)/2, (u - h)/2)."""
    _require_vector(u, "u")
    _require_vector(h, "h")
    return (u + h) * 0.5, (u - h) * 0.5


def vorticity(v):
    return curl(v)


def strain(v):
    """Symmetric part of the velocity gradient, stored as (xx, yy, zz, xy, xz, yz)."""
    gradient = velocity_gradient(v).data.reshape((3, 3) + v.grid.shape)
    entries = []
    for i, j in ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)):
        entries.append(0.5 * (gradient[i, j] + gradient[j, i]))
    return SymTensorField3(v.grid, np.stack(entries))


def _inverse_k_squared(grid):
    kx, ky, kz = grid.wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    return kx, ky, kz, np.divide(1.0, k2, out=np.zeros_like(k2, dtype=float), where=k2 > 0)


def _pressure_from_products(grid, products):
    """Solve -Lap(P) = d_i d_j T_ij for a product table T_ij(i, j) with zero mean."""
    kx, ky, kz, inv = _inverse_k_squared(grid)
    k = (kx, ky, kz)
    source = 0.0
    for i in range(3):
        for j in range(3):
            source = source + k[i] * k[j] * grid.forward(products(i, j))
    return ScalarField(grid, grid.inverse(-source * inv))


def pressure_poisson(v, b=None):
    """Zero-mean pressure with -Lap(P) = d_i d_j (v_i v_j - b_i b_j).

    Parameters
    ----------
    v : VectorField3
        Solenoidal velocity.
    b : VectorField3, optional
        Solenoidal magnetic field; omitted for the Euler pressure.
    """
    _require_vector(v, "v")
    require_solenoidal(v, PRESSURE_SOLENOIDAL_TOLERANCE, "v")
    vd = v.data
    if b is None:
        return _pressure_from_products(v.grid, lambda i, j: vd[i] * vd[j])
    _require_vector(b, "b")
    if b.grid != v.grid:
        raise ConfigError("v and b live on different grids")
    require_solenoidal(b, PRESSURE_SOLENOIDAL_TOLERANCE, "b")
    bd = b.data
    return _pressure_from_products(v.grid, lambda i, j: vd[i] * vd[j] - bd[i] * bd[j])


def pressure_poisson_elsasser(u, h):
    """Same pressure from the Elsasser source -Lap(P) = d_i d_j (u_j h_i)."""
    _require_vector(u, "u")
    _require_vector(h, "h")
    require_solenoidal(u, PRESSURE_SOLENOIDAL_TOLERANCE, "u")
    require_solenoidal(h, PRESSURE_SOLENOIDAL_TOLERANCE, "h")
    ud, hd = u.data, h.data
    return _pressure_from_products(u.grid, lambda i, j: ud[j] * hd[i])


def _check_alpha(alpha):
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ConfigError("alpha must be a non-negative number, got {!r}".format(alpha))
    return float(alpha)


def helmholtz_filter(v, alpha):
    """Solve (1 - alpha^2 Lap) u = v by spectral division."""
    alpha = _check_alpha(alpha)
    if alpha == 0.0:
        return v.replace_data(v.stacked())
    grid = v.grid
    kx, ky, kz = grid.wavenumbers()
    symbol = 1.0 + alpha ** 2 * (kx ** 2 + ky ** 2 + kz ** 2)
    return v.replace_data(grid.inverse(grid.forward(v.stacked()) / symbol))


def helmholtz_forward(u, alpha):
    """Apply (1 - alpha^2 Lap), the inverse of :func:`helmholtz_filter`."""
    alpha = _check_alpha(alpha)
    return u - laplacian(u) * alpha ** 2


@dataclass(frozen=True, eq=False)
class RegularityEstimate:
    """Fitted increment scaling ||f(. + l) - f||_p ~ |l|^exponent."""

    exponent: float
    norm_order: float
    lambdas: tuple
    norms: tuple
    residual: float
    prefactor: float
    prefactor_trend: float

    @property
    def fit_range(self):
        return (self.lambdas[0], self.lambdas[-1])

    def to_dict(self):
        data = asdict(self)
        data["fit_range"] = list(self.fit_range)
        data["lambdas"] = list(self.lambdas)
        data["norms"] = list(self.norms)
        return data


def default_exponent_lambdas(grid, count=DEFAULT_EXPONENT_SCALES):
    """Geometric scales over [4h, length/8]."""
    if 4 * grid.spacing >= grid.length / 8:
        raise ConfigError("default exponent window needs n > 32, got {}; set lambdas".format(grid.n))
    return tuple(np.geomspace(4 * grid.spacing, grid.length / 8, count).tolist())


def increment_norms(f, p, lambdas, sphere, method=ShiftMethod.FOURIER_PHASE):
    """Direction-averaged L^p norms (box mean of |delta f|^p)^(1/p) per scale."""
    shifter = FieldShifter(f, method)
    norms = []
    for lam in lambdas:
        moment = 0.0
        for direction, weight in zip(sphere.directions, sphere.weights):
            delta = shifter.increment_stack(lam * direction)
            magnitude = np.sqrt(np.einsum("c...,c...->...", delta, delta))
            moment += weight * float(np.mean(magnitude ** p))
        norms.append(moment ** (1.0 / p))
    return np.array(norms)


def scaling_exponent(f, p, lambdas=None, sphere=None, method=ShiftMethod.FOURIER_PHASE):
    """Least-squares log-log slope of the increment norms of ``f``.

    Parameters
    ----------
    f : Field
    p : float
        Norm order, at least 1.
    lambdas : sequence of float, optional
        Fit window inside (2h, length/4); defaults to
        :func:`default_exponent_lambdas`.
    sphere : SphereQuadrature
        Directions to average over.

    Returns
    -------
    RegularityEstimate
        ``prefactor_trend`` is the log-log slope of norm / lambda**exponent
        over the smaller half of the window; a positive value means the
        prefactor shrinks towards small separations.
    """
    if sphere is None:
        raise ConfigError("scaling_exponent needs a sphere rule")
    if not (math.isfinite(p) and p >= 1):
        raise ConfigError("norm order must be >= 1, got {!r}".format(p))
    grid = f.grid
    if lambdas is None:
        lambdas = default_exponent_lambdas(grid)
    lambdas = tuple(float(x) for x in lambdas)
    if len(lambdas) < 3:
        raise ConfigError("exponent fit needs at least 3 scales")
    if any(np.diff(lambdas) <= 0):
        raise ConfigError("exponent scales must be strictly increasing")
    if not (lambdas[0] > 2 * grid.spacing and lambdas[-1] < grid.length / 4):
        raise ConfigError(
            "exponent window [{:.4g}, {:.4g}] must lie inside ({:.4g}, {:.4g})".format(
                lambdas[0], lambdas[-1], 2 * grid.spacing, grid.length / 4
            )
        )
    norms = increment_norms(f, p, lambdas, sphere, method)
    floor = DEGENERATE_RTOL * f.max_abs()
    if not np.all(np.isfinite(norms)) or np.any(norms <= floor) or not np.any(norms > 0):
        raise NumericalError("increment norms vanish or are not finite; the field is degenerate")
    x = np.log(lambdas)
    y = np.log(norms)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    half = max(2, len(lambdas) // 2)
    trend = float(np.polyfit(x[:half], y[:half] - slope * x[:half], 1)[0])
    LOGGER.debug("L^%g increments: exponent %.4f, residual %.2e", p, slope, residual)
    return RegularityEstimate(
        float(slope),
        float(p),
        lambdas,
        tuple(norms.tolist()),
        residual,
        float(math.exp(intercept)),
        trend,
    )


@dataclass(frozen=True)
class ConservationPrediction:
    alpha: float
    beta: float
    r1: float
    r2: float
    margin: float
    uncertainty: float
    conserved: bool
    criterion: str = SNAPSHOT_CRITERION

    @property
    def verdict(self):
        return "conserved" if self.conserved else "not predicted conserved"

    def to_dict(self):
        data = asdict(self)
        data["verdict"] = self.verdict
        return data


def _exponent_and_spread(estimate):
    if isinstance(estimate, RegularityEstimate):
        return estimate.exponent, estimate.residual
    return float(estimate), 0.0


def conservation_predictor(est_v, est_omega, r1=3.0, r2=3.0):
    """Helicity criterion 2 alpha + beta >= 1 for exponents of v and curl v.

    Accepts :class:`RegularityEstimate` objects or bare exponents. The pair
    (r1, r2) must satisfy 2/r1 + 1/r2 = 1 with both in (1, inf).
    """
    r1, r2 = float(r1), float(r2)
    if not (1 < r1 < math.inf and 1 < r2 < math.inf):
        raise ConfigError("time exponents must lie in (1, inf), got ({}, {})".format(r1, r2))
    if abs(2.0 / r1 + 1.0 / r2 - 1.0) > CLOSED_CONDITION_TOLERANCE:
        raise ConfigError("time exponents must satisfy 2/r1 + 1/r2 = 1, got ({}, {})".format(r1, r2))
    alpha, spread_v = _exponent_and_spread(est_v)
    beta, spread_omega = _exponent_and_spread(est_omega)
    margin = 2.0 * alpha + beta - 1.0
    prediction = ConservationPrediction(
        alpha,
        beta,
        r1,
        r2,
        margin,
        2.0 * spread_v + spread_omega,
        margin >= -CLOSED_CONDITION_TOLERANCE,
    )
    LOGGER.info("helicity %s: 2a+b-1 = %.4f", prediction.verdict, margin)
    return prediction
