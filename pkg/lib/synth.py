"""Deterministic synthetic fields with known spectra, symmetries and third moments.

Random numbers come from a counter-based Philox stream keyed on
``(seed, component)``; spectral modes are filled in a canonical order, so the
output does not depend on how the lattice is traversed.
"""

import math
from dataclasses import dataclass, field
from logging import getLogger
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigError, NumericalError
from .grid import ScalarField, VectorField3, project_divfree
from .mollifier import default_profile
from .systems import primitive

LOGGER = getLogger(__name__)

UINT64_LIMIT = 1 << 64
# Minimum |sin| between a factor wavevector and the transport wavevector of its triad.
MIN_TRIAD_ANGLE = 0.3
# Minimum overlap of consecutive polarizations in vector chains.
MIN_POLARIZATION_OVERLAP = 0.3
MAX_CHAIN_ATTEMPTS = 500
MAX_SHELL_DRAWS = 64
PASSIVE_STREAM, ELSASSER_STREAM = 10, 11
FRACTIONAL_FIT_SCALES = 32
# integer |k|**2 of the shells with their own gain in the band compensation
LOW_SHELLS = (1, 2, 3, 4, 5)
# widths of the nested top bands, in integer wavenumbers below k_max
TOP_BANDS = (1, 2, 4, 8)


def _check_seed(seed):
    if int(seed) != seed or not 0 <= seed < UINT64_LIMIT:
        raise ConfigError("seed must be an unsigned 64-bit integer, got {!r}".format(seed))
    return int(seed)


def philox(seed, stream=0):
    """Counter-based generator for one (seed, stream) pair."""
    key = np.array([_check_seed(seed), stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SpectrumSpec:
    """Isotropic power law E(k) ~ k**-slope on the shells k_min <= |k| <= k_max."""

    slope: float
    k_min: float = 1.0
    k_max: float = 8.0
    seed: int = 0
    amplitude: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ConfigError("spectral slope must be finite")
        if not self.k_min >= 1:
            raise ConfigError("k_min must be >= 1, got {!r}".format(self.k_min))
        if not self.k_max >= self.k_min:
            raise ConfigError("k_max must be >= k_min, got {!r}".format(self.k_max))
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ConfigError("amplitude must be a non-negative number")
        object.__setattr__(self, "seed", _check_seed(self.seed))

    def check(self, grid):
        if self.k_max > grid.kmax:
            raise ConfigError(
                "spectral band reaches k_max={} but the {}^3 grid keeps |k| <= {}".format(
                    self.k_max, grid.n, grid.kmax
                )
            )


def _canonical_modes(grid, spec):
    """Indices, wavevectors and magnitudes of the half-space modes in the band, canonically ordered."""
    kx, ky, kz = np.broadcast_arrays(*grid.integer_wavenumbers())
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    upper = (kx > 0) | ((kx == 0) & ((ky > 0) | ((ky == 0) & (kz > 0))))
    active = upper & (k2 >= spec.k_min ** 2) & (k2 <= spec.k_max ** 2)
    iz, iy, ix = np.nonzero(active)
    order = np.lexsort((kx[iz, iy, ix], ky[iz, iy, ix], kz[iz, iy, ix], k2[iz, iy, ix]))
    iz, iy, ix = iz[order], iy[order], ix[order]
    if not len(iz):
        raise ConfigError("spectral band [{}, {}] holds no modes".format(spec.k_min, spec.k_max))
    vectors = np.stack([kx[iz, iy, ix], ky[iz, iy, ix], kz[iz, iy, ix]]).astype(float)
    return (iz, iy, ix), vectors, np.sqrt(k2[iz, iy, ix]) * grid.fundamental


def _assemble(grid, index, coefficients):
    iz, iy, ix = index
    spectrum = np.zeros(grid.forward(np.zeros(grid.shape)).shape, dtype=complex)
    spectrum[iz, iy, ix] = coefficients
    # the kx = 0 plane stores both members of each conjugate pair
    plane = ix == 0
    spectrum[(-iz[plane]) % grid.n, (-iy[plane]) % grid.n, 0] = np.conj(coefficients[plane])
    return grid.inverse(spectrum)


def _random_component(grid, spec, component):
    index, _, k = _canonical_modes(grid, spec)
    draws = philox(spec.seed, component).standard_normal((len(k), 2))
    coefficients = (draws[:, 0] + 1j * draws[:, 1]) * k ** (-(spec.slope + 2.0) / 2.0)
    return _assemble(grid, index, coefficients)


def _normalized(stack, amplitude):
    rms = math.sqrt(float(np.mean(np.sum(stack ** 2, axis=0))))
    if rms == 0.0:
        raise NumericalError("generated field vanishes identically")
    return stack * (amplitude / rms)


def gaussian_scalar(grid, spec):
    """Gaussian scalar with shell spectrum ~ k**-slope and RMS ``spec.amplitude``."""
    spec.check(grid)
    if spec.amplitude == 0.0:
        return ScalarField.constant(grid, 0.0)
    data = _random_component(grid, spec, 0)
    return ScalarField(grid, _normalized(data[None], spec.amplitude)[0])


def gaussian_divfree(grid, spec):
    """Solenoidal Gaussian vector field; RMS of |v| equals ``spec.amplitude``."""
    spec.check(grid)
    if spec.amplitude == 0.0:
        return VectorField3.constant(grid, (0.0, 0.0, 0.0))
    raw = VectorField3(grid, np.stack([_random_component(grid, spec, c) for c in range(3)]))
    projected = project_divfree(raw)
    return VectorField3(grid, _normalized(projected.data, spec.amplitude))


def abc_flow(grid, a=1.0, b=1.0, c=1.0):
    """Arnold-Beltrami-Childress flow (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)."""
    return VectorField3.from_function(
        grid,
        lambda x, y, z: (
            a * np.sin(z) + c * np.cos(y),
            b * np.sin(x) + a * np.cos(z),
            c * np.sin(y) + b * np.cos(x),
        ),
    )


def taylor_green(grid):
    """Steady Taylor-Green cell (sin x cos y cos z, -cos x sin y cos z, 0).

    Each horizontal component carries energy 1/16 of the box measure,
    the integral of v_x^2 / 2 being (2 pi)^3 / 16; the mean kinetic energy is 1/8.
    """
    return VectorField3.from_function(
        grid,
        lambda x, y, z: (
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x * y * z),
        ),
    )


def _check_holder(target):
    if not 0 < target < 1:
        raise ConfigError("Hölder target must lie in (0, 1), got {!r}".format(target))
    return float(target)


def fractional_spec(grid, holder_target, seed=0, amplitude=1.0):
    """Full-band spectrum whose increments scale like |l|**holder_target."""
    holder_target = _check_holder(holder_target)
    return SpectrumSpec(2.0 * holder_target + 1.0, 1.0, float(grid.kmax), seed, amplitude)


def continuum_structure(holder_target, lambdas, fundamental=1.0):
    """Direction-averaged structure function of the unbounded lattice power law.

    Per-mode variance |k|**(-2H-3) over the whole half lattice gives
    (2 pi / f**3) * I * lambda**(2H), where
    I = pi / (2 Gamma(1 + 2H) sin(pi H) (1 + 2H)).
    """
    s = 2.0 * holder_target
    integral = math.pi / (2.0 * math.gamma(1.0 + s) * math.sin(math.pi * holder_target) * (1.0 + s))
    return 2.0 * math.pi / fundamental ** 3 * integral * np.asarray(lambdas, dtype=float) ** s


def band_gains(grid, k, holder_target):
    """Per-mode variance gains that put the band's structure function on lambda**(2H).

    The finite band misses the energy above k_max and below the first shell.
    Non-negative weights on the whole band, its lowest shells and nested top
    bands are fitted to the unbounded power law over [2h, length/4].
    """
    wavenumber = k / grid.fundamental
    lambdas = np.geomspace(2 * grid.spacing, grid.length / 4, FRACTIONAL_FIT_SCALES)
    target = continuum_structure(holder_target, lambdas, grid.fundamental)
    response = k ** (-2.0 * holder_target - 3.0) * (1.0 - np.sinc(np.outer(lambdas, k) / math.pi))
    shells = np.rint(wavenumber ** 2)
    top = wavenumber.max()
    basis = [np.ones_like(k)]
    basis += [(shells == shell).astype(float) for shell in LOW_SHELLS]
    basis += [(wavenumber > top - width).astype(float) for width in TOP_BANDS]
    basis = np.stack([column for column in basis if column.any()], axis=1)
    design = response @ basis / target[:, None]
    scale = np.linalg.norm(design, axis=0)
    weights, misfit = optimize.nnls(design / scale, np.ones(len(lambdas)))
    gains = basis @ (weights / scale)
    if not np.all(gains > 0):
        raise NumericalError("band compensation switched off part of the spectrum")
    LOGGER.debug(
        "Hölder %.3f band gains in [%.3g, %.3g], rms misfit %.2e",
        holder_target,
        gains.min(),
        gains.max(),
        misfit / math.sqrt(len(lambdas)),
    )
    return gains


def _fractional_modes(grid, spec, holder_target):
    index, vectors, k = _canonical_modes(grid, spec)
    modulus = np.sqrt(2.0 * band_gains(grid, k, holder_target)) * k ** (-(spec.slope + 2.0) / 2.0)
    return index, vectors, modulus


def fractional_scalar(grid, holder_target, seed=0, amplitude=1.0):
    """Random-phase scalar whose increments scale like |l|**holder_target.

    Mode moduli are fixed, so box-mean squared increments do not depend on
    the seed; only the phases are drawn.
    """
    spec = fractional_spec(grid, holder_target, seed, amplitude)
    spec.check(grid)
    if spec.amplitude == 0.0:
        return ScalarField.constant(grid, 0.0)
    index, _, modulus = _fractional_modes(grid, spec, holder_target)
    phases = philox(spec.seed, 0).uniform(0.0, 2.0 * math.pi, len(modulus))
    data = _assemble(grid, index, modulus * np.exp(1j * phases))
    return ScalarField(grid, _normalized(data[None], spec.amplitude)[0])


def fractional_divfree(grid, holder_target, seed=0, amplitude=1.0):
    spec = fractional_spec(grid, holder_target, seed, amplitude)
    spec.check(grid)
    if spec.amplitude == 0.0:
        return VectorField3.constant(grid, (0.0, 0.0, 0.0))
    index, vectors, modulus = _fractional_modes(grid, spec, holder_target)
    draws = [philox(spec.seed, c).standard_normal((len(modulus), 2)) for c in range(3)]
    polarization = np.stack([d[:, 0] + 1j * d[:, 1] for d in draws])
    unit = vectors / np.linalg.norm(vectors, axis=0)
    polarization -= unit * np.sum(unit * polarization, axis=0)
    length = np.sqrt(np.sum(np.abs(polarization) ** 2, axis=0))
    if np.any(length == 0.0):
        raise NumericalError("random polarization is parallel to its wavevector")
    polarization *= modulus / length
    stack = np.stack([_assemble(grid, index, component) for component in polarization])
    return VectorField3(grid, _normalized(stack, spec.amplitude))


def sphere_bessel_ratio(x):
    """(sin x - x cos x) / x**3, the sphere average kernel of odd cascade terms."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 / 3.0 - x ** 2 / 30.0, (np.sin(safe) - safe * np.cos(safe)) / safe ** 3)


@dataclass(frozen=True, eq=False)
class TriadChain:
    """Factor modes q_0..q_J closed pairwise by transport modes p_j = q_{j+1} - q_j.

    Factor wave j is A_j f_j cos(q_j . x + a_j); transport wave j is
    B_j e_j cos(p_j . x + b_j) with b_j = pi/2 + a_{j+1} - a_j. Each triad then
    carries the same transfer, so the box-mean structure density is
    transfer * (psi(lam |q_0|) - psi(lam |q_J|)).
    """

    factor_modes: np.ndarray
    transport_modes: np.ndarray
    factor_phases: np.ndarray
    factor_amplitudes: np.ndarray
    transport_amplitudes: np.ndarray
    transport_directions: np.ndarray
    polarizations: Optional[np.ndarray]
    transfer: float
    fundamental: float = 1.0

    @property
    def shells(self):
        return len(self.factor_modes)

    @property
    def transport_phases(self):
        phases = self.factor_phases
        return np.pi / 2 + phases[1:] - phases[:-1]

    def _magnitudes(self):
        return np.linalg.norm(self.factor_modes, axis=1) * self.fundamental

    def expected_structure(self, lam):
        """Box mean of the structure density at separation ``lam``."""
        q = self._magnitudes()
        return self.transfer * (
            sphere_bessel_ratio(np.multiply(lam, q[0])) - sphere_bessel_ratio(np.multiply(lam, q[-1]))
        )

    def expected_dissipation(self, eps, profile=None):
        """Box mean of D_eps from the radial representation of the structure density."""
        profile = profile or default_profile()
        value, _ = integrate.quad(
            lambda r: math.pi * r ** 3 * float(profile.derivative(r))
            * float(self.expected_structure(r * eps)),
            0.0,
            1.0,
            epsabs=1e-14,
            epsrel=1e-12,
            limit=200,
        )
        return value

    def _waves(self, grid, modes, phases):
        x, y, z = grid.coordinates()
        k = modes * self.fundamental
        return [np.cos(kk[0] * x + kk[1] * y + kk[2] * z + phase) for kk, phase in zip(k, phases)]

    def factor_stack(self, grid):
        waves = self._waves(grid, self.factor_modes, self.factor_phases)
        if self.polarizations is None:
            total = sum(a * w for a, w in zip(self.factor_amplitudes, waves))
            return np.broadcast_to(total, grid.shape)[None]
        total = np.zeros((3,) + grid.shape)
        for a, f, w in zip(self.factor_amplitudes, self.polarizations, waves):
            total += a * f[:, None, None, None] * w
        return total

    def transport_stack(self, grid):
        total = np.zeros((3,) + grid.shape)
        waves = self._waves(grid, self.transport_modes, self.transport_phases)
        for b, e, w in zip(self.transport_amplitudes, self.transport_directions, waves):
            total += b * e[:, None, None, None] * w
        return total


def default_shells(grid):
    """Number of factor shells |q_j| ~ 2**j that fit the band with room for the p_j."""
    top = int(math.floor(math.log2(0.8 * grid.kmax)))
    if top < 2:
        raise ConfigError("a {}^3 grid is too coarse for a triad cascade".format(grid.n))
    return top + 1


def _unit(vector):
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else None


def _draw_modes(rng, grid, shells, start):
    """One attempt at factor modes, transport modes, directions and polarizations."""
    kmax = grid.kmax
    modes, directions, polarizations = [], [], []
    for j in range(shells):
        for _ in range(MAX_SHELL_DRAWS):
            q = np.rint(2.0 ** j * _unit(rng.standard_normal(3))).astype(np.int64)
            if not q.any() or np.max(np.abs(q)) > kmax:
                continue
            f = None
            if start is not None:
                reference = start if j == 0 else polarizations[-1]
                f = _unit(reference - (reference @ q) / (q @ q) * q)
                if f is None or abs(f @ reference) < MIN_POLARIZATION_OVERLAP:
                    continue
            if j > 0:
                previous = modes[-1]
                p = q - previous
                if not p.any() or np.max(np.abs(p)) > kmax:
                    continue
                e = previous - (previous @ p) / (p @ p) * p
                if np.linalg.norm(e) < MIN_TRIAD_ANGLE * np.linalg.norm(previous):
                    continue
                directions.append(e / np.linalg.norm(e))
            modes.append(q)
            polarizations.append(f)
            break
        else:
            return None
    factor_modes = np.array(modes)
    return (
        factor_modes,
        np.diff(factor_modes, axis=0),
        np.array(directions),
        None if start is None else np.array(polarizations),
    )


def _build_chain(rng, grid, shells, hurst, transfer, start=None):
    drawn = _draw_modes(rng, grid, shells, start)
    if drawn is None:
        return None
    factor_modes, transport_modes, directions, polarizations = drawn
    scale = grid.fundamental
    q = factor_modes * scale
    amplitudes = np.linalg.norm(q, axis=1) ** (-hurst)
    gain = np.einsum("ji,ji->j", directions, q[:-1])
    if polarizations is not None:
        gain = gain * np.einsum("ji,ji->j", polarizations[:-1], polarizations[1:])
    transport = transfer / (amplitudes[:-1] * amplitudes[1:] * gain)
    return TriadChain(
        factor_modes,
        transport_modes,
        rng.uniform(0.0, 2.0 * np.pi, shells),
        amplitudes,
        transport,
        directions,
        polarizations,
        float(transfer),
        scale,
    )


def _canonical(mode):
    mode = tuple(int(c) for c in mode)
    negated = tuple(-c for c in mode)
    return max(mode, negated)


def _distinct(*groups):
    seen = set()
    for group in groups:
        for mode in group:
            key = _canonical(mode)
            if key in seen:
                return False
            seen.add(key)
    return True


def _closes_only_designed(transport, factors, designed):
    """True when the only closed triples p + s q_a + t q_b = 0 are the designed ones."""
    for m, p in enumerate(transport):
        for a in range(len(factors)):
            for b in range(a, len(factors)):
                for s in (1, -1):
                    for t in (1, -1):
                        if not np.any(p + s * factors[a] + t * factors[b]):
                            if (m, a, b) not in designed:
                                return False
    return True


def _chain_triples(chain):
    return {(j, j, j + 1) for j in range(len(chain.transport_modes))}


def _search(grid, seed, stream, build, accept, what):
    rng = philox(seed, stream)
    for attempt in range(MAX_CHAIN_ATTEMPTS):
        result = build(rng)
        if result is not None and accept(result):
            LOGGER.debug("%s: accepted chain after %d attempts", what, attempt + 1)
            return result
    raise NumericalError("{}: no resonance-free chain after {} attempts".format(what, MAX_CHAIN_ATTEMPTS))


def _check_hurst(hurst):
    if not 0 < hurst < 1:
        raise ConfigError("cascade Hölder exponent must lie in (0, 1), got {!r}".format(hurst))
    return float(hurst)


@dataclass(frozen=True, eq=False)
class PassiveCascade:
    v: VectorField3
    theta: ScalarField
    chain: TriadChain = field(repr=False)


@dataclass(frozen=True, eq=False)
class ElsasserCascade:
    u: VectorField3
    h: VectorField3
    plus_chain: TriadChain = field(repr=False)
    minus_chain: TriadChain = field(repr=False)

    @property
    def primitive(self):
        return primitive(self.u, self.h)

    @property
    def v(self):
        return self.primitive[0]

    @property
    def b(self):
        return self.primitive[1]


def cascade_passive(grid, hurst=1.0 / 3.0, seed=0, shells=None, transfer=1.0):
    """Velocity and temperature with a constant-flux chain of triads.

    Parameters
    ----------
    grid : PeriodicGrid
    hurst : float
        Amplitudes of the temperature shells scale like |q|**-hurst.
    seed : int
    shells : int, optional
        Number of temperature shells; :func:`default_shells` by default.
    transfer : float
        Common transfer of every triad; the structure plateau is transfer/3.
    """
    hurst = _check_hurst(hurst)
    shells = shells or default_shells(grid)

    def build(rng):
        return _build_chain(rng, grid, shells, hurst, transfer)

    def accept(chain):
        return _distinct(chain.factor_modes, chain.transport_modes) and _closes_only_designed(
            chain.transport_modes, chain.factor_modes, _chain_triples(chain)
        )

    chain = _search(grid, seed, PASSIVE_STREAM, build, accept, "passive cascade")
    theta = ScalarField(grid, chain.factor_stack(grid)[0])
    v = VectorField3(grid, chain.transport_stack(grid))
    return PassiveCascade(v, theta, chain)


def cascade_elsasser(grid, hurst=1.0 / 3.0, seed=0, shells=None, transfer=1.0):
    """Elsasser pair carrying one triad chain per direction of transfer.

    The plus chain moves u energy with h as transport; the minus chain moves
    h energy with u as transport. Both are drawn jointly so that no triple
    across the two chains closes.
    """
    hurst = _check_hurst(hurst)
    shells = shells or default_shells(grid)
    ex, ey = np.eye(3)[0], np.eye(3)[1]

    def build(rng):
        plus = _build_chain(rng, grid, shells, hurst, transfer, ex)
        minus = _build_chain(rng, grid, shells, hurst, transfer, ey) if plus else None
        return (plus, minus) if minus else None

    def accept(pair):
        plus, minus = pair
        if not _distinct(
            plus.factor_modes, plus.transport_modes, minus.factor_modes, minus.transport_modes
        ):
            return False
        u_modes = np.concatenate((plus.factor_modes, minus.transport_modes))
        h_modes = np.concatenate((minus.factor_modes, plus.transport_modes))
        transport_plus = np.concatenate((plus.transport_modes, minus.factor_modes))
        transport_minus = np.concatenate((minus.transport_modes, plus.factor_modes))
        return _closes_only_designed(
            transport_plus, u_modes, _chain_triples(plus)
        ) and _closes_only_designed(transport_minus, h_modes, _chain_triples(minus))

    plus, minus = _search(grid, seed, ELSASSER_STREAM, build, accept, "Elsasser cascade")
    u = VectorField3(grid, plus.factor_stack(grid) + minus.transport_stack(grid))
    h = VectorField3(grid, minus.factor_stack(grid) + plus.transport_stack(grid))
    return ElsasserCascade(u, h, plus, minus)
