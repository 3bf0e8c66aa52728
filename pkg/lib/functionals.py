"""Dissipation fields, structure densities and the 4/3 verdict.

Two evaluation paths share the catalog terms and the node families of
:mod:`lib.mollifier`:

* pointwise: increments of every factor are formed per node and contracted
  on the lattice, giving fields D_eps(x) and G(x, lambda);
* mean: box averages come from :class:`lib.correlation.CorrelationEngine`,
  which is exact for band-limited data and much cheaper for sweeps.

The structure density weights term k by -sigma_k = 4 c_k. Since the radial
moment of grad(phi) is -3, box means then satisfy G / D -> -4/3 whenever the
sphere densities settle to a plateau.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from logging import getLogger
from typing import Optional

import numpy as np

from .catalog import CATALOG, FunctionalCatalogEntry, get_entry
from .correlation import CorrelationEngine
from .errors import ConfigError, NumericalError
from .fieldset import FactorTable, component_triples, contract
from .grid import ScalarField, require_solenoidal
from .increments import FieldShifter, ShiftMethod
from .mollifier import (
    default_profile,
    lattice_nodes,
    mollify_array,
    sphere_nodes,
)

LOGGER = getLogger(__name__)

FOUR_THIRDS = 4.0 / 3.0
DEFAULT_NOISE_FLOOR = 1e-9
DEFAULT_RATIO_TOLERANCE = 0.15
DEFAULT_PLATEAU_TOLERANCE = 0.25
DEFAULT_PLATEAU_WINDOW = 3
SOLENOIDAL_TOLERANCE = 1e-10


class Verdict(str, Enum):
    CONSISTENT = "consistent_4_3"
    CONSERVATIVE = "conservative"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class DissipationField:
    values: ScalarField
    epsilon: float
    entry_id: str
    quadrature: dict
    terms: tuple = ()

    def __post_init__(self):
        if not self.values.is_finite():
            raise NumericalError("non-finite dissipation values at eps={}".format(self.epsilon))

    def mean(self):
        return float(self.values.mean())


@dataclass(frozen=True, eq=False)
class StructureCurve:
    lambdas: tuple
    g_values: np.ndarray
    term_values: np.ndarray
    entry_id: str
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        _check_scales(self.lambdas, "lambda")
        object.__setattr__(self, "g_values", np.asarray(self.g_values, dtype=float))
        object.__setattr__(self, "term_values", np.asarray(self.term_values, dtype=float))

    def __len__(self):
        return len(self.lambdas)


@dataclass(frozen=True, eq=False)
class DissipationSweep:
    epsilons: tuple
    d_values: np.ndarray
    term_values: np.ndarray
    entry_id: str
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(x) for x in self.epsilons))
        object.__setattr__(self, "d_values", np.asarray(self.d_values, dtype=float))
        object.__setattr__(self, "term_values", np.asarray(self.term_values, dtype=float))

    def __iter__(self):
        return iter(zip(self.epsilons, self.d_values.tolist()))

    def __len__(self):
        return len(self.epsilons)


@dataclass(frozen=True)
class Plateau:
    start: int
    scales: tuple
    value: float
    flatness: float


@dataclass(frozen=True, eq=False)
class LawReport:
    entry_id: str
    d_extrapolated: float
    s_extrapolated: float
    ratio: Optional[float]
    verdict: Verdict
    diagnostics: dict
    notes: tuple = ()
    prediction: Optional[dict] = None

    def to_dict(self):
        return {
            "entry_id": self.entry_id,
            "d_extrapolated": self.d_extrapolated,
            "s_extrapolated": self.s_extrapolated,
            "ratio": self.ratio,
            "verdict": self.verdict.value,
            "diagnostics": self.diagnostics,
            "notes": list(self.notes),
            "prediction": self.prediction,
        }


def _check_scales(scales, name):
    if not scales:
        raise ConfigError("{} sweep is empty".format(name))
    values = np.asarray(scales, dtype=float)
    if np.any(values <= 0) or np.any(np.diff(values) <= 0):
        raise ConfigError("{} values must be positive and strictly increasing".format(name))


def _entry(entry):
    if isinstance(entry, FunctionalCatalogEntry):
        return entry
    return get_entry(entry)


class PointwiseEvaluator(object):
    """Per-node increments of every factor of a term list, contracted on the lattice."""

    def __init__(self, fields, terms, method=ShiftMethod.FOURIER_PHASE):
        self.terms = tuple(terms)
        self.grid = fields.grid
        self.method = ShiftMethod.parse(method)
        self.table = FactorTable(fields, self.terms)
        self.coefficients = [t.value(fields.alpha) for t in self.terms]
        self.shifters = {
            expression: FieldShifter(stack, self.method, self.grid)
            for expression, stack in self.table.stacks.items()
        }

    def term_sums(self, nodes, active=None):
        """Per-term sums over nodes of the pointwise integrand, without coefficients."""
        if active is None:
            active = [c != 0.0 for c in self.coefficients]
        sums = [np.zeros(self.grid.shape) for _ in self.terms]
        needed = {
            e
            for term, on in zip(self.terms, active)
            if on
            for e in (term.transport, term.factor_a, term.factor_b)
        }
        if not needed:
            return sums
        for ell, vector in zip(nodes.displacements, nodes.vectors):
            deltas = {e: self.shifters[e].increment_stack(ell) for e in needed}
            for index, (term, on) in enumerate(zip(self.terms, active)):
                if on:
                    sums[index] += contract(term, vector, deltas, self.table.pair_weights)
        return sums

    def combine(self, sums, factor=1.0):
        """Coefficient-weighted term fields and their total."""
        parts = [factor * c * s for c, s in zip(self.coefficients, sums)]
        total = parts[0].copy()
        for part in parts[1:]:
            total += part
        return total, parts


def structure_density(fields, entry, lam, sphere, method=ShiftMethod.FOURIER_PHASE):
    """G(x, lambda): sum_k (-sigma_k) (1/lambda) times the sphere average of term k.

    Parameters
    ----------
    fields : FieldSet
    entry : FunctionalCatalogEntry or str
    lam : float
        Separation, in (0, length/2).
    sphere : SphereQuadrature
    method : ShiftMethod
    """
    entry = _entry(entry)
    lam = fields.grid.check_scale(lam, "lambda")
    evaluator = PointwiseEvaluator(fields, entry.d_terms, method)
    total, _ = evaluator.combine(evaluator.term_sums(sphere_nodes(sphere, lam)), 4.0)
    return ScalarField(fields.grid, total)


def _kernel_nodes(grid, eps, ball, family):
    if family == "ball":
        return ball.with_epsilon(eps).kernel_nodes()
    if family == "lattice":
        return lattice_nodes(grid, eps, ball.profile)
    raise ConfigError("unknown node family {!r}".format(family))


def _dissipation_field(evaluator, entry, eps, sums, descriptor):
    total, parts = evaluator.combine(sums)
    grid = evaluator.grid
    return DissipationField(
        ScalarField(grid, total),
        eps,
        entry.id,
        descriptor,
        tuple(ScalarField(grid, p) for p in parts),
    )


def dissipation_direct(
    fields, entry, eps, ball, method=ShiftMethod.FOURIER_PHASE, family="ball"
):
    """D_eps(x) as a quadrature of grad(phi_eps) against the term integrands.

    ``family`` selects the ball rule (``"ball"``) or the lattice Riemann sum
    (``"lattice"``) as node set.
    """
    entry = _entry(entry)
    eps = fields.grid.check_scale(eps, "epsilon")
    nodes = _kernel_nodes(fields.grid, eps, ball, family)
    evaluator = PointwiseEvaluator(fields, entry.d_terms, method)
    LOGGER.debug("%s: direct D_eps at eps=%g over %d nodes", entry.id, eps, len(nodes))
    return _dissipation_field(evaluator, entry, eps, evaluator.term_sums(nodes), nodes.descriptor)


def dissipation_radial(
    fields, entry, eps, sphere, radial_nodes, method=ShiftMethod.FOURIER_PHASE, profile=None
):
    """D_eps(x) through the radial representation.

    Sums 4 pi w_m r_m^3 phi'(r_m) times the sphere densities at lambda = r_m eps.
    """
    entry = _entry(entry)
    eps = fields.grid.check_scale(eps, "epsilon")
    profile = profile or default_profile()
    radial_nodes = np.asarray(radial_nodes, dtype=float).reshape(-1, 2)
    evaluator = PointwiseEvaluator(fields, entry.d_terms, method)
    sums = [np.zeros(fields.grid.shape) for _ in entry.d_terms]
    for r, w in radial_nodes:
        weight = 4.0 * math.pi * w * r ** 3 * float(profile.derivative(r))
        if weight == 0.0:
            continue
        for total, part in zip(sums, evaluator.term_sums(sphere_nodes(sphere, r * eps))):
            total += weight * part
    descriptor = {
        "family": "radial",
        "epsilon": eps,
        "radial_nodes": len(radial_nodes),
        "profile": profile.name,
        **sphere.descriptor(),
    }
    return _dissipation_field(evaluator, entry, eps, sums, descriptor)


def structure_curve(fields, entry, lambdas, sphere, method=ShiftMethod.FOURIER_PHASE):
    """Box means of the structure density over a lambda sweep, with per-term parts."""
    entry = _entry(entry)
    method = ShiftMethod.parse(method)
    lambdas = tuple(float(x) for x in lambdas)
    _check_scales(lambdas, "lambda")
    for lam in lambdas:
        fields.grid.check_scale(lam, "lambda")
    coefficients = np.array([4.0 * t.value(fields.alpha) for t in entry.d_terms])
    rows = []
    if method is ShiftMethod.FOURIER_PHASE:
        engine = CorrelationEngine(fields, entry.d_terms)
        for lam in lambdas:
            rows.append(coefficients * engine.term_sums(sphere_nodes(sphere, lam)))
    else:
        evaluator = PointwiseEvaluator(fields, entry.d_terms, method)
        for lam in lambdas:
            sums = evaluator.term_sums(sphere_nodes(sphere, lam))
            rows.append(coefficients * np.array([s.mean() for s in sums]))
    terms = np.array(rows)
    LOGGER.info("%s: structure curve over %d scales", entry.id, len(lambdas))
    return StructureCurve(
        lambdas,
        terms.sum(axis=1),
        terms,
        entry.id,
        {"method": method.value, **sphere.descriptor()},
    )


def dissipation_sweep(
    fields, entry, epsilons, ball, method=ShiftMethod.FOURIER_PHASE, family="ball"
):
    """Box means of D_eps over an epsilon sweep, with per-term parts."""
    entry = _entry(entry)
    method = ShiftMethod.parse(method)
    epsilons = tuple(float(x) for x in epsilons)
    _check_scales(epsilons, "epsilon")
    for eps in epsilons:
        fields.grid.check_scale(eps, "epsilon")
    coefficients = np.array([t.value(fields.alpha) for t in entry.d_terms])
    engine = CorrelationEngine(fields, entry.d_terms) if method is ShiftMethod.FOURIER_PHASE else None
    evaluator = None if engine else PointwiseEvaluator(fields, entry.d_terms, method)
    rows = []
    for eps in epsilons:
        nodes = _kernel_nodes(fields.grid, eps, ball, family)
        if engine is not None:
            sums = engine.term_sums(nodes)
        else:
            sums = np.array([s.mean() for s in evaluator.term_sums(nodes)])
        rows.append(coefficients * sums)
    terms = np.array(rows)
    LOGGER.info("%s: dissipation sweep over %d scales", entry.id, len(epsilons))
    return DissipationSweep(
        epsilons,
        terms.sum(axis=1),
        terms,
        entry.id,
        {"method": method.value, **ball.descriptor()},
    )


def find_plateau(scales, values, window=DEFAULT_PLATEAU_WINDOW):
    """Flattest run of ``window`` consecutive values, summarized by its median.

    Flatness is the largest deviation from the median relative to the median.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < window:
        raise ConfigError("plateau search needs at least {} scales".format(window))
    best = None
    for start in range(len(values) - window + 1):
        chunk = values[start:start + window]
        median = float(np.median(chunk))
        spread = float(np.max(np.abs(chunk - median)))
        if median != 0.0:
            flatness = spread / abs(median)
        else:
            flatness = 0.0 if spread == 0.0 else math.inf
        if best is None or flatness < best.flatness:
            best = Plateau(start, tuple(scales[start:start + window]), median, flatness)
    return best


def law_check(
    curve,
    d_sweep,
    ratio_tolerance=DEFAULT_RATIO_TOLERANCE,
    noise_floor=DEFAULT_NOISE_FLOOR,
    window=DEFAULT_PLATEAU_WINDOW,
    plateau_tolerance=DEFAULT_PLATEAU_TOLERANCE,
    prediction=None,
):
    """Extrapolate both sweeps and compare S/D with -4/3.

    ``d_sweep`` is any iterable of (epsilon, mean D_eps) pairs.
    """
    pairs = list(d_sweep)
    if len(curve) < 4 or len(pairs) < 4:
        raise ConfigError("law check needs at least 4 scales in each sweep")
    epsilons = [float(e) for e, _ in pairs]
    d_values = [float(d) for _, d in pairs]
    s_plateau = find_plateau(curve.lambdas, curve.g_values, window)
    d_plateau = find_plateau(epsilons, d_values, window)
    d, s = d_plateau.value, s_plateau.value
    diagnostics = {
        "s_window": list(s_plateau.scales),
        "s_flatness": s_plateau.flatness,
        "d_window": list(d_plateau.scales),
        "d_flatness": d_plateau.flatness,
        "noise_floor": noise_floor,
        "ratio_tolerance": ratio_tolerance,
        "plateau_tolerance": plateau_tolerance,
        "target_ratio": -FOUR_THIRDS,
    }
    ratio = s / d if d != 0.0 else None
    if abs(d) <= noise_floor and abs(s) <= noise_floor:
        verdict = Verdict.CONSERVATIVE
    elif max(s_plateau.flatness, d_plateau.flatness) > plateau_tolerance:
        verdict = Verdict.INCONCLUSIVE
        diagnostics["reason"] = "no plateau within tolerance"
    elif abs(d) <= noise_floor:
        verdict = Verdict.INCONCLUSIVE
        diagnostics["reason"] = "dissipation below noise floor"
    elif abs(ratio + FOUR_THIRDS) <= ratio_tolerance * FOUR_THIRDS:
        verdict = Verdict.CONSISTENT
    else:
        verdict = Verdict.INCONCLUSIVE
        diagnostics["reason"] = "ratio outside tolerance"
    entry = CATALOG.get(curve.entry_id)
    notes = entry.notes_for_report() if entry else ()
    LOGGER.info("%s: S=%.6g D=%.6g verdict %s", curve.entry_id, s, d, verdict.value)
    return LawReport(curve.entry_id, d, s, ratio, verdict, diagnostics, notes, prediction)


def decomposition_sides(fields, term, eps, ball, method=ShiftMethod.FOURIER_PHASE):
    """Both sides of the mollified commutator identity for one term.

    The left side is the ball quadrature of grad(phi_eps) against the term
    integrand (coefficient 1). The right side is assembled from lattice-
    mollified products and spectral derivatives, with the divergence of the
    direction-carrying factor dropped.
    """
    grid = fields.grid
    eps = grid.check_scale(eps, "epsilon")
    transport = fields[term.transport]
    require_solenoidal(transport, SOLENOIDAL_TOLERANCE, term.transport)
    evaluator = PointwiseEvaluator(fields, (term,), method)
    ball = ball.with_epsilon(eps)
    (lhs,) = evaluator.term_sums(ball.kernel_nodes(), active=[True])

    table = evaluator.table
    wavenumbers = grid.wavenumbers()
    profile = ball.profile

    def d_moll(values, i):
        spectrum = grid.forward(mollify_array(grid, values, eps, profile))
        return grid.inverse(1j * wavenumbers[i] * spectrum)

    rhs = np.zeros(grid.shape)
    for i, ka, kb, kc, weight, dropped in component_triples(term, table):
        a, b, c = table.component(*ka), table.component(*kb), table.component(*kc)
        part = (
            -d_moll(a * b * c, i)
            + c * d_moll(a * b, i)
            + b * d_moll(a * c, i)
            + a * d_moll(b * c, i)
        )
        if dropped != "A":
            part -= b * c * d_moll(a, i)
        if dropped != "B":
            part -= a * c * d_moll(b, i)
        part -= a * b * d_moll(c, i)
        rhs += weight * part
    return ScalarField(grid, lhs), ScalarField(grid, rhs)


def decomposition_residual(fields, term, eps, ball, method=ShiftMethod.FOURIER_PHASE):
    lhs, rhs = decomposition_sides(fields, term, eps, ball, method)
    return lhs - rhs


@lru_cache(maxsize=None)
def cross_helicity_sign(samples=64, seed=0):
    """Sign s with D_CH = s * (D(ELSASSER_PLUS) - D(ELSASSER_MINUS)) / 2.

    Found by evaluating the three integrands on random increment vectors.
    """
    rng = np.random.default_rng(seed)
    dv, db = rng.standard_normal((2, 3, samples))
    direction = rng.standard_normal(3)
    deltas = {"v": dv, "b": db, "u": dv + db, "h": dv - db}
    weights = {key: np.ones(3) for key in deltas}

    def integrand(entry_id):
        entry = CATALOG[entry_id]
        total = np.zeros(samples)
        for term in entry.d_terms:
            total += float(term.coefficient) * contract(term, direction, deltas, weights)
        return total

    cross = integrand("MHD_CROSS")
    half_difference = 0.5 * (integrand("ELSASSER_PLUS") - integrand("ELSASSER_MINUS"))
    for sign in (1, -1):
        if np.allclose(cross, sign * half_difference, rtol=1e-12, atol=1e-12):
            return sign
    raise NumericalError("cross-helicity integrand is not a multiple of the Elsasser difference")
