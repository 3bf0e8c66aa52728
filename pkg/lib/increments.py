"""Shifted fields and increments at arbitrary real displacements."""

from enum import Enum
from itertools import product
from logging import getLogger

import numpy as np

from .errors import ConfigError
from .grid import SPATIAL_AXES, Field, ScalarField

LOGGER = getLogger(__name__)


class ShiftMethod(str, Enum):
    FOURIER_PHASE = "fourier_phase"
    TRILINEAR = "trilinear"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(
                "unknown shift method {!r}; choose from {}".format(value, [m.value for m in cls])
            ) from None


def _as_displacement(ell):
    ell = np.asarray(ell, dtype=float).reshape(3)
    if not np.all(np.isfinite(ell)):
        raise ConfigError("displacement must be finite, got {}".format(ell))
    return ell


class FieldShifter(object):
    """Serve shifts of one field from a single cached transform.

    Parameters
    ----------
    field : Field
        The field to shift. Raw component stacks are accepted together with
        ``grid`` for internal callers.
    method : ShiftMethod or str
        ``fourier_phase`` is exact for band-limited data; ``trilinear``
        blends the eight neighbouring lattice shifts.
    """

    def __init__(self, field, method=ShiftMethod.FOURIER_PHASE, grid=None):
        if isinstance(field, Field):
            self.field = field
            self.grid = field.grid
            self.stack = field.stacked()
        else:
            if grid is None:
                raise ConfigError("a raw component stack needs its grid")
            self.field = None
            self.grid = grid
            self.stack = np.asarray(field, dtype=float)
        self.method = ShiftMethod.parse(method)
        self._spectrum = None
        self._wavenumbers = None

    def _spectral(self):
        if self._spectrum is None:
            self._spectrum = self.grid.forward(self.stack)
            self._spectrum.setflags(write=False)
            scale = self.grid.fundamental
            self._wavenumbers = tuple(k * scale for k in self.grid.integer_wavenumbers())
        return self._spectrum, self._wavenumbers

    def _fourier(self, ell):
        spectrum, (kx, ky, kz) = self._spectral()
        phase = np.exp(1j * kx * ell[0]) * np.exp(1j * ky * ell[1]) * np.exp(1j * kz * ell[2])
        return self.grid.inverse(spectrum * phase)

    def _trilinear(self, ell):
        s = ell / self.grid.spacing
        base = np.floor(s)
        frac = s - base
        base = base.astype(np.int64)
        result = None
        for corner in product((0, 1), repeat=3):
            weight = 1.0
            for c, t in zip(corner, frac):
                weight *= t if c else 1.0 - t
            if weight == 0.0:
                continue
            shift = tuple(-(int(b) + c) for b, c in zip(base, corner))
            # component order (x, y, z) against array axes (z, y, x)
            rolled = np.roll(self.stack, shift=shift[::-1], axis=SPATIAL_AXES)
            term = rolled if weight == 1.0 else weight * rolled
            result = term if result is None else result + term
        return result

    def shifted_stack(self, ell):
        ell = _as_displacement(ell)
        if not np.any(ell):
            return self.stack.copy()
        if self.method is ShiftMethod.FOURIER_PHASE:
            return self._fourier(ell)
        return self._trilinear(ell)

    def increment_stack(self, ell):
        return self.shifted_stack(ell) - self.stack

    def _wrap(self, stack):
        if self.field is None:
            return stack
        return self.field.replace_data(stack)

    def shifted(self, ell):
        return self._wrap(self.shifted_stack(ell))

    def increment(self, ell):
        return self._wrap(self.increment_stack(ell))


def shifted(f, ell, method=ShiftMethod.FOURIER_PHASE):
    """Samples of f(. + ell) with periodic wrap."""
    return FieldShifter(f, method).shifted(ell)


def shifted_many(f, displacements, method=ShiftMethod.FOURIER_PHASE):
    shifter = FieldShifter(f, method)
    return [shifter.shifted(ell) for ell in displacements]


def increment(f, ell, method=ShiftMethod.FOURIER_PHASE):
    """f(. + ell) - f."""
    return FieldShifter(f, method).increment(ell)


def increments_many(f, displacements, method=ShiftMethod.FOURIER_PHASE):
    shifter = FieldShifter(f, method)
    return [shifter.increment(ell) for ell in displacements]


def longitudinal(v, ell, method=ShiftMethod.FOURIER_PHASE):
    """Component of the increment of ``v`` along ``ell``."""
    ell = _as_displacement(ell)
    norm = np.linalg.norm(ell)
    if norm == 0:
        raise ConfigError("longitudinal increment needs a nonzero displacement")
    delta = FieldShifter(v, method).increment_stack(ell)
    return ScalarField(v.grid, np.tensordot(ell / norm, delta, axes=1))
