"""Pseudo-spectral advection of a passive scalar and the local energy balance check."""

import math
from dataclasses import dataclass, field
from logging import getLogger

import numpy as np

from .errors import ConfigError
from .fieldset import FieldSet
from .functionals import dissipation_direct
from .grid import ScalarField, VectorField3, divergence, require_solenoidal
from .increments import ShiftMethod

LOGGER = getLogger(__name__)

DEFAULT_DEALIAS = 2.0 / 3.0
CFL_LIMIT = 0.5
SOLENOIDAL_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    """Scalar snapshots advected by a steady velocity, spaced ``dt * stride`` apart."""

    times: tuple
    snapshots: tuple
    velocity: VectorField3
    dt: float
    stride: int = 1
    dealias: float = DEFAULT_DEALIAS

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if len(self.times) != len(self.snapshots) or not self.snapshots:
            raise ConfigError("a series needs one time per snapshot")
        steps = np.diff(self.times)
        if len(steps) and not np.allclose(steps, self.spacing, rtol=1e-12, atol=0.0):
            raise ConfigError("snapshot times must be uniformly spaced")

    @property
    def spacing(self):
        return self.dt * self.stride

    @property
    def grid(self):
        return self.velocity.grid

    def __len__(self):
        return len(self.snapshots)


def dealias_mask(grid, dealias=DEFAULT_DEALIAS):
    """Modes kept when every |k_i| stays strictly below dealias * n / 2."""
    if not 0 < dealias <= 1:
        raise ConfigError("dealias fraction must lie in (0, 1], got {!r}".format(dealias))
    cutoff = math.ceil(dealias * grid.n / 2) - 1
    kx, ky, kz = grid.integer_wavenumbers()
    return (np.abs(kx) <= cutoff) & (np.abs(ky) <= cutoff) & (np.abs(kz) <= cutoff)


def _check_cfl(v, dt):
    speed = float(np.max(np.sqrt(np.sum(v.data ** 2, axis=0))))
    limit = CFL_LIMIT * v.grid.spacing
    if speed * dt > limit:
        raise ConfigError(
            "CFL violated: max|v| dt = {:.4g} exceeds {:.4g} (0.5 h)".format(speed * dt, limit)
        )
    return speed


def advect(v, theta0, dt, steps, dealias=DEFAULT_DEALIAS, stride=1):
    """Integrate theta_t + v . grad(theta) = 0 with classical RK4.

    Parameters
    ----------
    v : VectorField3
        Steady solenoidal velocity.
    theta0 : ScalarField
        Initial scalar; its modes outside the dealiasing band are dropped.
    dt : float
    steps : int
    dealias : float
        Fraction of the Nyquist wavenumber kept in every direction.
    stride : int
        Store every ``stride``-th step, the initial state included.
    """
    if theta0.grid != v.grid:
        raise ConfigError("velocity and scalar live on different grids")
    if not (math.isfinite(dt) and dt > 0):
        raise ConfigError("time step must be positive, got {!r}".format(dt))
    if int(steps) != steps or steps < 1 or int(stride) != stride or stride < 1:
        raise ConfigError("steps and stride must be positive integers")
    steps, stride = int(steps), int(stride)
    require_solenoidal(v, SOLENOIDAL_TOLERANCE, "advecting velocity")
    speed = _check_cfl(v, dt)
    grid = v.grid
    mask = dealias_mask(grid, dealias)
    wavenumbers = grid.wavenumbers()
    velocity = v.data

    def tendency(spectrum):
        advective = 0.0
        for k, component in zip(wavenumbers, velocity):
            advective = advective + component * grid.inverse(1j * k * spectrum)
        return -mask * grid.forward(advective)

    spectrum = grid.forward(theta0.data) * mask
    times, snapshots = [0.0], [ScalarField(grid, grid.inverse(spectrum))]
    LOGGER.info("advecting %d steps at dt=%g (max|v|=%.3g)", steps, dt, speed)
    for step in range(1, steps + 1):
        k1 = tendency(spectrum)
        k2 = tendency(spectrum + 0.5 * dt * k1)
        k3 = tendency(spectrum + 0.5 * dt * k2)
        k4 = tendency(spectrum + dt * k3)
        spectrum = spectrum + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            times.append(step * dt)
            snapshots.append(ScalarField(grid, grid.inverse(spectrum)))
    return SnapshotSeries(tuple(times), tuple(snapshots), v, float(dt), stride, dealias)


def residual_norms(values):
    """Box-normalized L1, L2 and Linf norms."""
    values = np.asarray(values)
    return {
        "L1": float(np.mean(np.abs(values))),
        "L2": float(np.sqrt(np.mean(values ** 2))),
        "Linf": float(np.max(np.abs(values))),
    }


@dataclass(frozen=True, eq=False)
class BalanceResult:
    times: tuple
    residuals: tuple
    time_terms: tuple
    flux_terms: tuple
    dissipation_terms: tuple
    epsilon: float
    norms: tuple = field(default=())

    def __post_init__(self):
        if not self.norms:
            object.__setattr__(self, "norms", tuple(residual_norms(r.data) for r in self.residuals))

    def __iter__(self):
        return iter(zip(self.residuals, self.norms))


def balance_residual(series, eps, ball, method=ShiftMethod.FOURIER_PHASE, indices=None):
    """R = d_t(theta^2/2) + div(v theta^2/2) - D_eps(v, theta) at interior snapshots.

    The time derivative is the centered difference across the neighbouring
    stored snapshots. ``indices`` restricts the evaluation to a subset of the
    interior snapshots.
    """
    if len(series) < 3:
        raise ConfigError("balance check needs at least 3 snapshots, got {}".format(len(series)))
    grid = series.grid
    eps = grid.check_scale(eps, "epsilon")
    interior = range(1, len(series) - 1)
    if indices is None:
        indices = interior
    elif any(i not in interior for i in indices):
        raise ConfigError("balance indices must be interior snapshots 1..{}".format(len(series) - 2))
    v = series.velocity
    energies = [0.5 * s.data ** 2 for s in series.snapshots]
    times, residuals, time_terms, flux_terms, dissipation_terms = [], [], [], [], []
    for i in indices:
        rate = (energies[i + 1] - energies[i - 1]) / (2.0 * series.spacing)
        flux = divergence(VectorField3(grid, v.data * energies[i])).data
        fields = FieldSet.of(v=v, theta=series.snapshots[i])
        d_eps = dissipation_direct(fields, "TEMP", eps, ball, method).values.data
        times.append(series.times[i])
        time_terms.append(ScalarField(grid, rate))
        flux_terms.append(ScalarField(grid, flux))
        dissipation_terms.append(ScalarField(grid, d_eps))
        residuals.append(ScalarField(grid, rate + flux - d_eps))
        LOGGER.debug("balance at t=%g: L2 residual %.3e", times[-1], residual_norms(residuals[-1].data)["L2"])
    return BalanceResult(
        tuple(times),
        tuple(residuals),
        tuple(time_terms),
        tuple(flux_terms),
        tuple(dissipation_terms),
        eps,
    )
