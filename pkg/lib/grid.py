"""Periodic lattices, immutable field containers and spectral operators.

Arrays are stored with z slowest and x fastest, so ``data[..., iz, iy, ix]``
ravels in the order the field files use. Vector components are ordered
(x, y, z); spectral work happens transiently through :mod:`scipy.fft`.
"""

import math
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from scipy import fft

from .errors import ConfigError

LOGGER = getLogger(__name__)

AXIS_NAMES = ("x", "y", "z")
SYM_COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
SYM_INDEX = ((0, 3, 4), (3, 1, 5), (4, 5, 2))
SPATIAL_AXES = (-3, -2, -1)


def axis_index(axis):
    """Map 'x', 'y', 'z' (or 0, 1, 2) onto a component index."""
    if isinstance(axis, str):
        try:
            return AXIS_NAMES.index(axis)
        except ValueError:
            raise ConfigError("unknown axis {!r}".format(axis)) from None
    if axis not in (0, 1, 2):
        raise ConfigError("unknown axis {!r}".format(axis))
    return int(axis)


@dataclass(frozen=True)
class PeriodicGrid:
    """A cubic lattice of ``n`` points per axis on a box of period ``length``."""

    n: int
    length: float = 2 * math.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise ConfigError("grid size must be an even integer >= 4, got {}".format(self.n))
        if not (math.isfinite(self.length) and self.length > 0):
            raise ConfigError("grid length must be positive, got {}".format(self.length))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self):
        return self.length / self.n

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def size(self):
        return self.n ** 3

    @property
    def kmax(self):
        """Largest integer wavenumber kept by the 2/3 rule (strictly below n/3)."""
        return (self.n - 1) // 3

    @property
    def fundamental(self):
        return 2 * math.pi / self.length

    def coordinates(self):
        """Return the (x, y, z) lattice coordinates as broadcastable arrays."""
        axis = np.arange(self.n) * self.spacing
        return axis[None, None, :], axis[None, :, None], axis[:, None, None]

    def integer_wavenumbers(self, real=True):
        """Integer wavenumbers (kx, ky, kz) broadcastable over a spectrum.

        ``real`` selects the half-spectrum layout of :func:`scipy.fft.rfftn`.
        """
        full = np.rint(fft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)
        kx = np.rint(fft.rfftfreq(self.n, 1.0 / self.n)).astype(np.int64) if real else full
        return kx[None, None, :], full[None, :, None], full[:, None, None]

    def wavenumbers(self, real=True):
        """Physical wavenumbers with the Nyquist planes zeroed.

        Zeroing the Nyquist planes keeps spectral derivatives of real fields
        real and odd.
        """
        half = self.n // 2
        result = []
        for k in self.integer_wavenumbers(real):
            result.append(np.where(np.abs(k) == half, 0, k) * self.fundamental)
        return tuple(result)

    def band_mask(self, real=True):
        kx, ky, kz = self.integer_wavenumbers(real)
        kmax = self.kmax
        return (np.abs(kx) <= kmax) & (np.abs(ky) <= kmax) & (np.abs(kz) <= kmax)

    def forward(self, data):
        """Real-to-complex transform over the three spatial axes."""
        return fft.rfftn(data, axes=SPATIAL_AXES)

    def inverse(self, spectrum):
        return fft.irfftn(spectrum, s=self.shape, axes=SPATIAL_AXES)

    def check_scale(self, value, name="scale"):
        """Require ``0 < value < length/2``, the range where kernels never wrap."""
        if not (math.isfinite(value) and 0 < value < self.length / 2):
            raise ConfigError(
                "{} must lie in (0, {:.6g}), got {!r}".format(name, self.length / 2, value)
            )
        return float(value)


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable samples of a field on a :class:`PeriodicGrid`.

    Subclasses fix the number of components. ``data`` carries a leading
    component axis unless the field is scalar.
    """

    grid: PeriodicGrid
    data: np.ndarray

    ncomp = 1
    component_names = ("",)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        expected = self._expected_shape()
        if data.shape != expected:
            raise ConfigError(
                "{} expects data of shape {}, got {}".format(
                    type(self).__name__, expected, data.shape
                )
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def _expected_shape(self):
        return (self.ncomp,) + self.grid.shape

    def stacked(self):
        """Return the data with a leading component axis."""
        return self.data

    @classmethod
    def from_stacked(cls, grid, stack):
        return cls(grid, stack)

    def replace_data(self, stack):
        return self.from_stacked(self.grid, stack)

    def _check_other(self, other):
        if type(other) is not type(self):
            raise ConfigError(
                "cannot combine {} with {}".format(type(self).__name__, type(other).__name__)
            )
        if other.grid != self.grid:
            raise ConfigError("fields live on different grids")

    def __add__(self, other):
        self._check_other(other)
        return self.replace_data(self.stacked() + other.stacked())

    def __sub__(self, other):
        self._check_other(other)
        return self.replace_data(self.stacked() - other.stacked())

    def __neg__(self):
        return self.replace_data(-self.stacked())

    def __mul__(self, factor):
        if not np.isscalar(factor):
            return NotImplemented
        return self.replace_data(self.stacked() * float(factor))

    __rmul__ = __mul__

    def __truediv__(self, factor):
        return self * (1.0 / float(factor))

    def component(self, index):
        return ScalarField(self.grid, self.stacked()[index])

    @property
    def components(self):
        return tuple(self.component(i) for i in range(self.ncomp))

    def mean(self):
        return self.stacked().mean(axis=SPATIAL_AXES)

    def max_abs(self):
        return float(np.max(np.abs(self.data)))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.data)))


@dataclass(frozen=True, eq=False)
class ScalarField(Field):
    def _expected_shape(self):
        return self.grid.shape

    def stacked(self):
        return self.data[None]

    @classmethod
    def from_stacked(cls, grid, stack):
        return cls(grid, stack[0])

    def mean(self):
        return float(self.data.mean())

    def component(self, index):
        if index != 0:
            raise IndexError(index)
        return self

    @classmethod
    def from_function(cls, grid, function):
        x, y, z = grid.coordinates()
        return cls(grid, np.broadcast_to(function(x, y, z), grid.shape))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True, eq=False)
class VectorField3(Field):
    ncomp = 3
    component_names = AXIS_NAMES

    @classmethod
    def from_components(cls, grid, *components):
        arrays = [
            np.broadcast_to(c.data if isinstance(c, ScalarField) else c, grid.shape)
            for c in components
        ]
        return cls(grid, np.stack(arrays))

    @classmethod
    def from_function(cls, grid, function):
        x, y, z = grid.coordinates()
        return cls.from_components(grid, *function(x, y, z))

    @classmethod
    def constant(cls, grid, vector):
        return cls(grid, np.broadcast_to(np.asarray(vector, float)[:, None, None, None],
                                         (3,) + grid.shape))

    def dot(self, other):
        self._check_other(other)
        return ScalarField(self.grid, np.einsum("i...,i...->...", self.data, other.data))


@dataclass(frozen=True, eq=False)
class SymTensorField3(Field):
    """Symmetric tensor stored as (xx, yy, zz, xy, xz, yz)."""

    ncomp = 6
    component_names = SYM_COMPONENTS
    # Frobenius contraction counts each off-diagonal entry twice.
    frobenius_weights = (1.0, 1.0, 1.0, 2.0, 2.0, 2.0)

    def entry(self, i, j):
        return self.component(SYM_INDEX[i][j])

    def trace(self):
        return ScalarField(self.grid, self.data[0] + self.data[1] + self.data[2])


@dataclass(frozen=True, eq=False)
class TensorField3(Field):
    """General 3x3 tensor; component ``3*k + j`` holds entry (k, j)."""

    ncomp = 9
    component_names = tuple(a + b for a in AXIS_NAMES for b in AXIS_NAMES)

    def entry(self, k, j):
        return self.component(3 * k + j)


def _derivative(grid, stack, index):
    k = grid.wavenumbers()[index]
    return grid.inverse(1j * k * grid.forward(stack))


def spectral_derivative(f, axis):
    """Spectral derivative of a scalar field along ``axis``."""
    index = axis_index(axis)
    return ScalarField(f.grid, _derivative(f.grid, f.data, index))


def gradient(f):
    grid = f.grid
    spectrum = grid.forward(f.data)
    return VectorField3(grid, np.stack([grid.inverse(1j * k * spectrum) for k in grid.wavenumbers()]))


def velocity_gradient(v):
    """Tensor of derivatives, entry (k, j) = d_k v_j."""
    grid = v.grid
    spectrum = grid.forward(v.data)
    rows = [grid.inverse(1j * k * spectrum) for k in grid.wavenumbers()]
    return TensorField3(grid, np.concatenate(rows))


def divergence(v):
    grid = v.grid
    spectrum = grid.forward(v.data)
    kx, ky, kz = grid.wavenumbers()
    return ScalarField(grid, grid.inverse(1j * (kx * spectrum[0] + ky * spectrum[1] + kz * spectrum[2])))


def curl(v):
    grid = v.grid
    sx, sy, sz = grid.forward(v.data)
    kx, ky, kz = grid.wavenumbers()
    spectrum = np.stack(
        [
            1j * (ky * sz - kz * sy),
            1j * (kz * sx - kx * sz),
            1j * (kx * sy - ky * sx),
        ]
    )
    return VectorField3(grid, grid.inverse(spectrum))


def laplacian(f):
    grid = f.grid
    kx, ky, kz = grid.wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    return f.replace_data(grid.inverse(-k2 * grid.forward(f.stacked())))


def project_divfree(v):
    """Leray projection; the mean mode passes through unchanged."""
    grid = v.grid
    spectrum = grid.forward(v.data)
    kx, ky, kz = grid.wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    inv = np.divide(1.0, k2, out=np.zeros_like(k2, dtype=float), where=k2 > 0)
    kdots = (kx * spectrum[0] + ky * spectrum[1] + kz * spectrum[2]) * inv
    projected = np.stack([spectrum[0] - kx * kdots, spectrum[1] - ky * kdots, spectrum[2] - kz * kdots])
    return VectorField3(grid, grid.inverse(projected))


def band_limit(f):
    """Zero every mode outside the 2/3-rule band."""
    grid = f.grid
    return f.replace_data(grid.inverse(grid.forward(f.stacked()) * grid.band_mask()))


def is_band_limited(f, tol=1e-10):
    grid = f.grid
    spectrum = grid.forward(f.stacked()) / grid.size
    outside = np.abs(np.where(grid.band_mask(), 0, spectrum))
    scale = max(float(np.max(np.abs(spectrum))), 1.0)
    return bool(np.max(outside) <= tol * scale)


def max_divergence(v):
    return divergence(v).max_abs()


def require_solenoidal(v, tol, name="velocity"):
    worst = max_divergence(v)
    if worst > tol:
        raise ConfigError(
            "{} field is not solenoidal: max |div| = {:.3e} > {:.1e}".format(name, worst, tol)
        )
    LOGGER.debug("%s divergence %.3e within %.1e", name, worst, tol)
    return worst
