"""Box means of increment triples through two-point cross-spectra.

For real periodic fields the box mean of dA dB dC at displacement l is

    - R(AB, C) - R(AC, B) + R(A, BC) - R(BC, A) + R(B, AC) + R(C, AB)

with R(X, Y)(l) = sum_k X_k conj(Y_k) exp(i k.l) the cross-correlation of
normalized spectra. In every pair one side is a single field, so the sums
only run over modes the single-component spectra carry. Evaluating them at
arbitrary real displacements is exact for band-limited data.
"""

from logging import getLogger

import numpy as np
from scipy import fft

from .fieldset import FactorTable, component_triples

LOGGER = getLogger(__name__)

# Spectral amplitudes below this fraction of the largest one are dropped.
SUPPORT_RTOL = 1e-13
# Upper bound on the phase matrix size evaluated at once.
CHUNK_ELEMENTS = 1 << 22


class CorrelationEngine(object):
    """Mean term integrands of a term list at any set of displacements.

    Parameters
    ----------
    fields : FieldSet
    terms : sequence of TermSpec
    support_rtol : float
        Relative amplitude under which a mode counts as absent.
    """

    def __init__(self, fields, terms, support_rtol=SUPPORT_RTOL):
        self.terms = tuple(terms)
        self.coefficients = np.array([t.value(fields.alpha) for t in self.terms])
        table = FactorTable(fields, self.terms)
        grid = table.grid
        self.grid = grid
        size = float(grid.size)

        active = [t for t, c in zip(self.terms, self.coefficients) if c != 0.0]
        triples = {t: list(component_triples(t, table)) for t in active}
        keys = sorted({key for rows in triples.values() for row in rows for key in row[1:4]})

        singles = {key: fft.fftn(table.component(*key)) / size for key in keys}
        peak = max((float(np.max(np.abs(s))) for s in singles.values()), default=0.0)
        if peak > 0:
            mask = np.zeros(grid.shape, dtype=bool)
            for spectrum in singles.values():
                mask |= np.abs(spectrum) > support_rtol * peak
        else:
            mask = np.zeros(grid.shape, dtype=bool)
        iz, iy, ix = np.nonzero(mask)
        freq = np.rint(fft.fftfreq(grid.n, 1.0 / grid.n)) * grid.fundamental
        self.wavevectors = np.column_stack((freq[ix], freq[iy], freq[iz]))
        LOGGER.debug("correlation support holds %d of %d modes", len(ix), grid.size)

        compressed = {key: s[mask] for key, s in singles.items()}
        del singles
        products = {}

        def product(first, second):
            pair = tuple(sorted((first, second)))
            if pair not in products:
                values = table.component(*pair[0]) * table.component(*pair[1])
                products[pair] = (fft.fftn(values) / size)[mask]
            return products[pair]

        spectra = np.zeros((len(ix), len(self.terms), 3), dtype=complex)
        for index, term in enumerate(self.terms):
            for i, ka, kb, kc, weight, _ in triples.get(term, ()):
                a, b, c = compressed[ka], compressed[kb], compressed[kc]
                ab, ac, bc = product(ka, kb), product(ka, kc), product(kb, kc)
                spectra[:, index, i] += weight * (
                    -ab * np.conj(c)
                    - ac * np.conj(b)
                    + a * np.conj(bc)
                    - bc * np.conj(a)
                    + b * np.conj(ac)
                    + c * np.conj(ab)
                )
        self.spectra = spectra

    @property
    def mode_count(self):
        return len(self.wavevectors)

    def mean_triples(self, displacements):
        """Mean direction-resolved integrands, shape (P, terms, 3)."""
        displacements = np.asarray(displacements, dtype=float).reshape(-1, 3)
        modes = self.mode_count
        out = np.zeros((len(displacements), len(self.terms), 3))
        if not modes:
            return out
        flat = self.spectra.reshape(modes, -1)
        step = max(1, CHUNK_ELEMENTS // modes)
        for start in range(0, len(displacements), step):
            chunk = displacements[start:start + step]
            phase = np.exp(1j * (chunk @ self.wavevectors.T))
            out[start:start + step] = (phase @ flat).real.reshape(len(chunk), len(self.terms), 3)
        return out

    def term_sums(self, nodes):
        """Per-term sum over nodes of the mean integrand against the node vectors."""
        triples = self.mean_triples(nodes.displacements)
        return np.einsum("pti,pi->t", triples, nodes.vectors)
