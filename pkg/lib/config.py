"""Run configuration sections.

Each section is a traitlets ``Configurable``; a JSON run-config file holds one
object per section keyed by its class name, e.g.::

    {"GridConfig": {"n": 64}, "FunctionalConfig": {"entry": "TEMP", ...}}
"""

import math

import numpy as np
from traitlets import (
    Bool,
    CaselessStrEnum,
    Dict,
    Float,
    Integer,
    List,
    TraitError,
    Unicode,
    validate,
)
from traitlets.config import Configurable

from .catalog import CATALOG
from .errors import ConfigError
from .grid import PeriodicGrid
from .increments import ShiftMethod
from .mollifier import PROFILE_SHAPES, ball_rule, make_profile, make_sphere

DEFAULT_SWEEP_POINTS = 6


def _positive(value, name):
    if not (math.isfinite(value) and value > 0):
        raise TraitError("{} must be positive, got {!r}".format(name, value))
    return value


def _increasing(values, name):
    values = [float(v) for v in values]
    if any(not (math.isfinite(v) and v > 0) for v in values):
        raise TraitError("{} must hold positive numbers".format(name))
    if any(b <= a for a, b in zip(values, values[1:])):
        raise TraitError("{} must be strictly increasing".format(name))
    return values


def check_scales(grid, values, name):
    """Cross-section check that every scale fits the box."""
    for value in values:
        grid.check_scale(value, name)
    return tuple(values)


def default_scales(grid, cells, name):
    """Geometric sweep from ``cells`` lattice spacings up to length/4."""
    lower, upper = cells * grid.spacing, grid.length / 4
    if lower >= upper:
        raise ConfigError(
            "a {}^3 grid is too coarse for the default {} sweep; list the scales explicitly".format(
                grid.n, name
            )
        )
    return np.geomspace(lower, upper, DEFAULT_SWEEP_POINTS).tolist()


class GridConfig(Configurable):
    n = Integer(32, config=True, help="Lattice points per axis (even).")
    length = Float(2 * math.pi, config=True, help="Box period.")

    @validate("n")
    def _valid_n(self, proposal):
        n = proposal["value"]
        if n < 4 or n % 2:
            raise TraitError("grid size must be an even integer >= 4, got {}".format(n))
        return n

    @validate("length")
    def _valid_length(self, proposal):
        return _positive(proposal["value"], "length")

    def grid(self):
        return PeriodicGrid(self.n, self.length)


class MollifierConfig(Configurable):
    profile = CaselessStrEnum(sorted(PROFILE_SHAPES), "bump", config=True)
    radial_nodes = Integer(16, config=True, help="Gauss-Legendre radial nodes of the ball rule.")

    @validate("radial_nodes")
    def _valid_radial(self, proposal):
        if proposal["value"] < 4:
            raise TraitError("radial_nodes must be >= 4")
        return proposal["value"]

    def profile_object(self):
        return make_profile(self.profile.lower())


class SphereConfig(Configurable):
    rule = CaselessStrEnum(["fibonacci", "gauss_product"], "fibonacci", config=True)
    count = Integer(64, config=True, help="Directions of the spiral rule (even).")
    order = Integer(8, config=True, help="Gauss-Legendre order of the product rule.")

    @validate("count")
    def _valid_count(self, proposal):
        count = proposal["value"]
        if count < 6 or count % 2:
            raise TraitError("sphere count must be an even integer >= 6, got {}".format(count))
        return count

    @validate("order")
    def _valid_order(self, proposal):
        if proposal["value"] < 2:
            raise TraitError("product rule order must be >= 2")
        return proposal["value"]

    def sphere(self):
        return make_sphere(self.rule.lower(), self.count, self.order)

    def ball(self, mollifier, eps=1.0):
        return ball_rule(mollifier.radial_nodes, self.sphere(), eps, mollifier.profile_object())


class SweepConfig(Configurable):
    epsilons = List(Float(), config=True, help="Mollifier scales; empty selects [4h, L/4].")
    lambdas = List(Float(), config=True, help="Structure separations; empty selects [2h, L/4].")
    plateau_window = Integer(3, config=True)
    ratio_tolerance = Float(0.15, config=True, help="Relative tolerance on S/D = -4/3.")
    plateau_tolerance = Float(0.25, config=True, help="Largest flatness accepted as a plateau.")
    noise_floor = Float(1e-9, config=True)

    @validate("epsilons", "lambdas")
    def _valid_scales(self, proposal):
        return _increasing(proposal["value"], proposal["trait"].name)

    @validate("plateau_window")
    def _valid_window(self, proposal):
        if proposal["value"] < 2:
            raise TraitError("plateau_window must be >= 2")
        return proposal["value"]

    @validate("ratio_tolerance", "plateau_tolerance", "noise_floor")
    def _valid_tolerance(self, proposal):
        return _positive(proposal["value"], proposal["trait"].name)

    def epsilon_values(self, grid):
        values = self.epsilons or default_scales(grid, 4, "epsilon")
        return check_scales(grid, values, "epsilon")

    def lambda_values(self, grid):
        values = self.lambdas or default_scales(grid, 2, "lambda")
        return check_scales(grid, values, "lambda")


class FunctionalConfig(Configurable):
    entry = Unicode("TEMP", config=True, help="Catalog id of the 4/3 law.")
    slots = Dict(config=True, help="Slot name -> field file, generator spec or derived spec.")
    alpha = Float(0.0, config=True, help="Filter length of the alpha models.")
    method = CaselessStrEnum([m.value for m in ShiftMethod], "fourier_phase", config=True)
    family = CaselessStrEnum(["ball", "lattice"], "ball", config=True)

    @validate("entry")
    def _valid_entry(self, proposal):
        if proposal["value"] not in CATALOG:
            raise TraitError(
                "unknown catalog entry {!r}; choose from {}".format(proposal["value"], sorted(CATALOG))
            )
        return proposal["value"]

    @validate("alpha")
    def _valid_alpha(self, proposal):
        alpha = proposal["value"]
        if not (math.isfinite(alpha) and alpha >= 0):
            raise TraitError("alpha must be non-negative")
        return alpha

    def shift_method(self):
        return ShiftMethod.parse(self.method.lower())

    def require_slots(self):
        entry = CATALOG[self.entry]
        missing = [s for s in entry.required_fields if s != "alpha" and s not in self.slots]
        if missing:
            raise ConfigError("{} needs field slots {}".format(self.entry, ", ".join(missing)))
        return entry


class SolverConfig(Configurable):
    dt = Float(1e-3, config=True)
    steps = Integer(100, config=True)
    stride = Integer(1, config=True)
    dealias = Float(2.0 / 3.0, config=True)
    epsilons = List(Float(), config=True, help="Balance-check scales; empty selects 2h, 4h, 8h.")
    velocity_slot = Unicode("v", config=True)
    scalar_slot = Unicode("theta", config=True)

    @validate("dt")
    def _valid_dt(self, proposal):
        return _positive(proposal["value"], "dt")

    @validate("steps", "stride")
    def _valid_counts(self, proposal):
        if proposal["value"] < 1:
            raise TraitError("{} must be >= 1".format(proposal["trait"].name))
        return proposal["value"]

    @validate("dealias")
    def _valid_dealias(self, proposal):
        if not 0 < proposal["value"] <= 1:
            raise TraitError("dealias must lie in (0, 1]")
        return proposal["value"]

    @validate("epsilons")
    def _valid_scales(self, proposal):
        return _increasing(proposal["value"], "epsilons")

    def epsilon_values(self, grid):
        values = self.epsilons or [2 * grid.spacing, 4 * grid.spacing, 8 * grid.spacing]
        return check_scales(grid, values, "epsilon")


class ExponentConfig(Configurable):
    velocity_slot = Unicode("v", config=True)
    vorticity_slot = Unicode("omega", config=True)
    velocity_order = Float(4.5, config=True)
    vorticity_order = Float(1.8, config=True)
    lambdas = List(Float(), config=True, help="Fit window; empty selects [4h, L/8].")
    r1 = Float(3.0, config=True)
    r2 = Float(3.0, config=True)

    @validate("velocity_order", "vorticity_order")
    def _valid_order(self, proposal):
        if not proposal["value"] >= 1:
            raise TraitError("norm orders must be >= 1")
        return proposal["value"]

    @validate("lambdas")
    def _valid_scales(self, proposal):
        return _increasing(proposal["value"], "lambdas")


class OutputConfig(Configurable):
    directory = Unicode("yaglom-out", config=True)
    formats = List(CaselessStrEnum(["json", "csv"]), ["json", "csv"], config=True)
    write_fields = Bool(False, config=True, help="Also store resolved input fields.")


SECTIONS = (
    GridConfig,
    MollifierConfig,
    SphereConfig,
    SweepConfig,
    FunctionalConfig,
    SolverConfig,
    ExponentConfig,
    OutputConfig,
)


def section_values(section):
    """Current values of a section's configurable traits."""
    return {name: getattr(section, name) for name in sorted(section.traits(config=True))}
