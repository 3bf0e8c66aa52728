"""Resolve the field slots of a run config into fields.

A slot spec is one of

* a path to a field file;
* ``{"generator": name, ...parameters}``, with ``"part"`` selecting one field
  of a pair generator;
* ``{"derive": op, "of": slot or [slots], ...}`` computed from other slots.
"""

import os
from logging import getLogger

from . import synth
from .errors import ConfigError, YaglomError
from .fieldio import content_hash, read_field
from .grid import ScalarField, VectorField3, curl
from .systems import elsasser, helmholtz_filter, primitive, strain

LOGGER = getLogger(__name__)


def _spectrum(grid, params):
    return synth.SpectrumSpec(
        float(params.get("slope", 5.0 / 3.0)),
        float(params.get("k_min", 1.0)),
        float(params.get("k_max", min(8, grid.kmax))),
        int(params.get("seed", 0)),
        float(params.get("amplitude", 1.0)),
    )


def _cascade_kwargs(params):
    return dict(
        hurst=float(params.get("hurst", 1.0 / 3.0)),
        seed=int(params.get("seed", 0)),
        shells=params.get("shells"),
        transfer=float(params.get("transfer", 1.0)),
    )


GENERATORS = {
    "gaussian_scalar": lambda grid, p: synth.gaussian_scalar(grid, _spectrum(grid, p)),
    "gaussian_divfree": lambda grid, p: synth.gaussian_divfree(grid, _spectrum(grid, p)),
    "abc": lambda grid, p: synth.abc_flow(
        grid, float(p.get("a", 1.0)), float(p.get("b", 1.0)), float(p.get("c", 1.0))
    ),
    "taylor_green": lambda grid, p: synth.taylor_green(grid),
    "fractional_scalar": lambda grid, p: synth.fractional_scalar(
        grid, float(p["holder"]), int(p.get("seed", 0)), float(p.get("amplitude", 1.0))
    ),
    "fractional_divfree": lambda grid, p: synth.fractional_divfree(
        grid, float(p["holder"]), int(p.get("seed", 0)), float(p.get("amplitude", 1.0))
    ),
    "constant_scalar": lambda grid, p: ScalarField.constant(grid, float(p.get("value", 0.0))),
    "constant_vector": lambda grid, p: VectorField3.constant(grid, p.get("value", (0.0, 0.0, 0.0))),
    "cascade_passive": lambda grid, p: synth.cascade_passive(grid, **_cascade_kwargs(p)),
    "cascade_elsasser": lambda grid, p: synth.cascade_elsasser(grid, **_cascade_kwargs(p)),
}
PAIR_PARTS = {
    "cascade_passive": ("v", "theta"),
    "cascade_elsasser": ("u", "h", "v", "b"),
}
SEEDED = {
    "gaussian_scalar",
    "gaussian_divfree",
    "fractional_scalar",
    "fractional_divfree",
    "cascade_passive",
    "cascade_elsasser",
}


def _derive_curl(sources, params):
    return curl(sources[0])


def _derive_helmholtz(sources, params):
    return helmholtz_filter(sources[0], float(params["alpha"]))


def _derive_strain(sources, params):
    return strain(sources[0])


def _derive_elsasser_plus(sources, params):
    return elsasser(*sources)[0]


def _derive_elsasser_minus(sources, params):
    return elsasser(*sources)[1]


def _derive_primitive_v(sources, params):
    return primitive(*sources)[0]


def _derive_primitive_b(sources, params):
    return primitive(*sources)[1]


DERIVATIONS = {
    "curl": (1, _derive_curl),
    "helmholtz": (1, _derive_helmholtz),
    "strain": (1, _derive_strain),
    "elsasser_plus": (2, _derive_elsasser_plus),
    "elsasser_minus": (2, _derive_elsasser_minus),
    "primitive_v": (2, _derive_primitive_v),
    "primitive_b": (2, _derive_primitive_b),
}


class SlotResolver(object):
    """Turn slot specs into fields on one grid, remembering file hashes.

    Parameters
    ----------
    specs : dict
        Slot name -> spec.
    grid : PeriodicGrid
    seed : int, optional
        Replaces the ``seed`` of every seeded generator.
    alpha : float
        Default filter length of ``helmholtz`` derivations.
    base_dir : str
        Directory relative field-file paths are resolved against.
    """

    def __init__(self, specs, grid, seed=None, alpha=0.0, base_dir="."):
        self.specs = dict(specs)
        self.grid = grid
        self.seed = seed
        self.alpha = alpha
        self.base_dir = base_dir
        self.hashes = {}
        self._fields = {}
        self._generated = {}
        self._pending = set()

    def resolve(self, names=None):
        names = sorted(self.specs) if names is None else names
        return {name: self[name] for name in names}

    def __getitem__(self, name):
        if name in self._fields:
            return self._fields[name]
        if name not in self.specs:
            raise ConfigError("slot {!r} has no spec".format(name))
        if name in self._pending:
            raise ConfigError("slot {!r} depends on itself".format(name))
        self._pending.add(name)
        try:
            value = self._build(name, self.specs[name])
        except YaglomError as error:
            if str(error).startswith("slot "):
                raise
            raise type(error)("slot {!r}: {}".format(name, error)) from error
        finally:
            self._pending.discard(name)
        if value.grid != self.grid:
            raise ConfigError(
                "slot {!r} lives on a {}^3 grid, config asks for {}^3".format(
                    name, value.grid.n, self.grid.n
                )
            )
        self._fields[name] = value
        LOGGER.debug("resolved slot %s as %s", name, type(value).__name__)
        return value

    def _build(self, name, spec):
        if isinstance(spec, str):
            path = spec if os.path.isabs(spec) else os.path.join(self.base_dir, spec)
            field = read_field(path)
            self.hashes[name] = content_hash(path)
            return field
        if not isinstance(spec, dict):
            raise ConfigError("spec must be a file path or an object, got {!r}".format(spec))
        if "generator" in spec:
            return self._generate(spec)
        if "derive" in spec:
            return self._derive(spec)
        raise ConfigError("spec needs a 'generator' or a 'derive' key")

    def _generate(self, spec):
        params = dict(spec)
        name = params.pop("generator")
        part = params.pop("part", None)
        if name not in GENERATORS:
            raise ConfigError("unknown generator {!r}; choose from {}".format(name, sorted(GENERATORS)))
        if self.seed is not None and name in SEEDED:
            params["seed"] = self.seed
        key = (name, tuple(sorted((k, repr(v)) for k, v in params.items())))
        if key not in self._generated:
            self._generated[key] = GENERATORS[name](self.grid, params)
        result = self._generated[key]
        if name in PAIR_PARTS:
            if part not in PAIR_PARTS[name]:
                raise ConfigError("{} needs 'part' in {}".format(name, PAIR_PARTS[name]))
            return getattr(result, part)
        if part is not None:
            raise ConfigError("{} produces a single field".format(name))
        return result

    def _derive(self, spec):
        op = spec["derive"]
        if op not in DERIVATIONS:
            raise ConfigError("unknown derivation {!r}; choose from {}".format(op, sorted(DERIVATIONS)))
        arity, function = DERIVATIONS[op]
        sources = spec.get("of")
        sources = [sources] if isinstance(sources, str) else list(sources or ())
        if len(sources) != arity:
            raise ConfigError("{} takes {} source slot(s)".format(op, arity))
        params = dict(spec)
        params.setdefault("alpha", self.alpha)
        return function([self[s] for s in sources], params)
