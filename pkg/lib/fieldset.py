"""Named field slots and the contraction patterns of the catalog terms."""

from dataclasses import dataclass
from logging import getLogger
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .catalog import (
    GRADIENT_PREFIX,
    SCALAR_SLOTS,
    SLOTS,
    TENSOR_SLOTS,
    Contraction,
    expression_slot,
)
from .errors import ConfigError
from .grid import ScalarField, SymTensorField3, VectorField3, velocity_gradient

LOGGER = getLogger(__name__)


def _slot_type(slot):
    if slot in SCALAR_SLOTS:
        return ScalarField
    if slot in TENSOR_SLOTS:
        return SymTensorField3
    return VectorField3


@dataclass(frozen=True, eq=False)
class FieldSet:
    """Fields bound to catalog slots (v, b, theta, omega, tau, u, h, H) plus alpha."""

    slots: Mapping
    alpha: float = 0.0

    def __post_init__(self):
        slots = dict(self.slots)
        grid = None
        for name, value in slots.items():
            if name not in SLOTS:
                raise ConfigError("unknown field slot {!r}; choose from {}".format(name, SLOTS))
            expected = _slot_type(name)
            if not isinstance(value, expected):
                raise ConfigError(
                    "slot {!r} holds a {}, expected {}".format(
                        name, type(value).__name__, expected.__name__
                    )
                )
            if grid is None:
                grid = value.grid
            elif value.grid != grid:
                raise ConfigError("slot {!r} lives on a different grid".format(name))
        if not slots:
            raise ConfigError("a field set needs at least one slot")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigError("alpha must be a non-negative number, got {!r}".format(self.alpha))
        object.__setattr__(self, "slots", MappingProxyType(slots))
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def of(cls, alpha=0.0, **slots):
        return cls(slots, alpha)

    @property
    def grid(self):
        return next(iter(self.slots.values())).grid

    def __getitem__(self, slot):
        try:
            return self.slots[slot]
        except KeyError:
            raise ConfigError("field slot {!r} is not bound".format(slot)) from None

    def __contains__(self, slot):
        return slot in self.slots

    def require(self, terms):
        missing = sorted({s for term in terms for s in term.slots} - set(self.slots))
        if missing:
            raise ConfigError("missing field slots {}".format(", ".join(missing)))

    def negated(self):
        return FieldSet({name: -value for name, value in self.slots.items()}, self.alpha)


class FactorTable(object):
    """Component stacks and pair weights of every expression a term list reads.

    Gradient expressions are differentiated before any shift is taken.
    """

    def __init__(self, fields, terms):
        fields.require(terms)
        self.grid = fields.grid
        self.stacks = {}
        self.pair_weights = {}
        for term in terms:
            for expression in (term.transport, term.factor_a, term.factor_b):
                if expression not in self.stacks:
                    self._resolve(fields, expression)
            if self.stacks[term.transport].shape[0] != 3:
                raise ConfigError("transport {!r} must be a vector field".format(term.transport))
            if self.stacks[term.factor_a].shape[0] != self.stacks[term.factor_b].shape[0]:
                raise ConfigError("factors of {} do not contract".format(term.label()))

    def _resolve(self, fields, expression):
        field = fields[expression_slot(expression)]
        if expression.startswith(GRADIENT_PREFIX):
            if not isinstance(field, VectorField3):
                raise ConfigError("gradient factors need a vector slot")
            stack = velocity_gradient(field).data
        else:
            stack = field.stacked()
        weights = getattr(field, "frobenius_weights", None)
        if weights is None or expression.startswith(GRADIENT_PREFIX):
            weights = np.ones(stack.shape[0])
        self.stacks[expression] = stack
        self.pair_weights[expression] = np.asarray(weights, dtype=float)

    @property
    def expressions(self):
        return tuple(self.stacks)

    def component(self, expression, index):
        return self.stacks[expression][index]


def contract(term, direction, deltas, pair_weights):
    """Pointwise integrand of one term for a single direction vector.

    ``deltas`` maps expressions to increment stacks; any trailing shape is
    carried through.
    """
    transport = deltas[term.transport]
    a = deltas[term.factor_a]
    b = deltas[term.factor_b]
    if term.contraction is Contraction.SCALAR_PAIR:
        along = np.tensordot(direction, transport, axes=1)
        weights = pair_weights[term.factor_a]
        return along * np.tensordot(weights, a * b, axes=1)
    ga = a.reshape((3, 3) + a.shape[1:])
    gb = b.reshape((3, 3) + b.shape[1:])
    along = np.tensordot(direction, ga, axes=([0], [1]))
    carried = np.einsum("j...,kj...->k...", transport, gb)
    return np.einsum("k...,k...->...", along, carried)


def component_triples(term, table):
    """Expand a term into weighted scalar triples.

    Yields ``(i, A, B, C, weight, dropped)`` where A, B, C are
    ``(expression, component)`` keys, ``i`` the direction index, and
    ``dropped`` names which of A/B/C carries the index whose divergence the
    solenoidal reduction removes.
    """
    if term.contraction is Contraction.SCALAR_PAIR:
        weights = table.pair_weights[term.factor_a]
        for i in range(3):
            for q, w in enumerate(weights):
                yield (
                    i,
                    (term.transport, i),
                    (term.factor_a, q),
                    (term.factor_b, q),
                    float(w),
                    "A",
                )
    else:
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    yield (
                        i,
                        (term.transport, j),
                        (term.factor_a, 3 * k + i),
                        (term.factor_b, 3 * k + j),
                        1.0,
                        "B",
                    )
