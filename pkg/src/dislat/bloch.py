"""Complex Bloch bands of the dissipative lattice.

The Bloch mode psi_k(x) = exp(i*k*x) * sum_n C_n(k) exp(-i*n*x) turns the
wave equation into a dense eigenproblem for the truncated operator

    L[n, m](k) = 0.5*(k - n)**2 * delta_nm + v_fourier(n-m) - i*gamma_fourier(n-m),

with n, m running over -n_trunc .. n_trunc.  L is complex symmetric, not
Hermitian: eigenvalues mu = E - i*gamma carry a decay rate gamma >= 0,
and eigenvectors of distinct eigenvalues are orthogonal under the plain
(unconjugated) product sum_n C'_n C_n.  A vanishing self product
sum_n C_n C_{-n} signals the approach of an exceptional point where two
eigenvectors coalesce and the plain product loses rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, NumericsError
from .lattice import LatticeSpec, dissipation_fourier, potential_fourier

#: eigenpair backward error allowed relative to the Frobenius norm of L
RESIDUAL_REL_TOL = 1e-10

#: eigenvalues closer than this are treated as numerically degenerate
DEGENERACY_TOL = 1e-8

DEFAULT_BANDS_KEPT = 8


def wrap_quasimomentum(k: float) -> float:
    """Fold k into the Brillouin zone [-1/2, 1/2] by an integer shift."""
    return float(k - round(k))


@dataclass(frozen=True)
class BlochOperator:
    """Truncated plane-wave matrix at one quasimomentum."""

    k: float
    n_trunc: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return 2 * self.n_trunc + 1

    @property
    def fourier_indices(self) -> np.ndarray:
        return np.arange(-self.n_trunc, self.n_trunc + 1)


@dataclass(frozen=True)
class BlochEigenpair:
    """One eigenvalue mu = E - i*gamma with its Fourier coefficients.

    coefficients[j] is C_n for n = j - n_trunc; the vector has unit L2
    norm and its largest entry is rotated to the positive real axis.
    """

    k: float
    n_trunc: int
    mu: complex
    coefficients: np.ndarray

    @property
    def energy(self) -> float:
        return self.mu.real

    @property
    def gamma(self) -> float:
        """Decay rate, -Im mu."""
        return -self.mu.imag

    def cell_profile(self, x):
        """Periodic part u(x) = sum_n C_n exp(-i*n*x) at the samples x."""
        n = np.arange(-self.n_trunc, self.n_trunc + 1)
        return np.exp(-1j * np.outer(np.asarray(x, dtype=float), n)) @ self.coefficients


def default_truncation(spec: LatticeSpec) -> int:
    """Default plane-wave cutoff: resolves the dissipation comb and keeps
    a healthy margin of free bands for small sigma."""
    return max(64, spec.truncation_floor())


def build_operator(k: float, spec: LatticeSpec, n_trunc: Optional[int] = None) -> BlochOperator:
    """Assemble the truncated Bloch matrix at quasimomentum k.

    k is folded into the Brillouin zone first.  n_trunc below the spec's
    truncation floor would silently drop dissipation harmonics, so it is
    rejected.
    """
    if n_trunc is None:
        n_trunc = default_truncation(spec)
    if n_trunc < 2:
        raise ConfigurationError("n_trunc must be at least 2")
    floor = spec.truncation_floor()
    if spec.g0 > 0.0 and n_trunc < floor:
        raise ConfigurationError(
            f"n_trunc={n_trunc} cannot resolve sigma={spec.sigma:g}: "
            f"the dissipation comb needs n_trunc >= {floor}")
    k = wrap_quasimomentum(k)
    n = np.arange(-n_trunc, n_trunc + 1)
    offsets = np.arange(0, 2 * n_trunc + 1)
    coupling = potential_fourier(offsets, spec) - 1j * dissipation_fourier(offsets, spec)
    # coefficients are even in the index, so the matrix is complex symmetric;
    # toeplitz must be told so or it fills the upper triangle with conjugates
    matrix = sla.toeplitz(coupling, coupling).astype(complex)
    matrix[np.diag_indices_from(matrix)] += 0.5 * (k - n) ** 2
    matrix.setflags(write=False)
    return BlochOperator(k=k, n_trunc=n_trunc, matrix=matrix)


def eigenpairs(op: BlochOperator) -> List[BlochEigenpair]:
    """All eigenpairs of the truncated operator, sorted by ascending
    Re mu with ties broken by ascending decay rate.

    Eigenvectors are L2-normalized and phase-fixed.  Every pair is
    residual-checked against RESIDUAL_REL_TOL * ||L||_F; offenders get one
    inverse-iteration polish and are rejected if still out of tolerance.
    """
    L = op.matrix
    try:
        values, vectors = sla.eig(L)
    except sla.LinAlgError as exc:
        raise NumericsError(
            f"dense eigensolver failed at k={op.k}, n_trunc={op.n_trunc}: {exc}") from exc

    order = np.lexsort((-values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]
    vectors /= np.linalg.norm(vectors, axis=0, keepdims=True)

    norm_l = np.linalg.norm(L)
    bound = RESIDUAL_REL_TOL * norm_l
    residuals = np.linalg.norm(L @ vectors - vectors * values, axis=0)
    for j in np.flatnonzero(residuals > 0.1 * bound):
        mu, vec = _polish(L, values[j], vectors[:, j])
        res = np.linalg.norm(L @ vec - mu * vec)
        if res < residuals[j]:
            values[j], vectors[:, j], residuals[j] = mu, vec, res
    bad = np.flatnonzero(residuals > bound)
    if bad.size:
        worst = residuals[bad].max()
        raise NumericsError(
            f"eigenpair residual {worst:.2e} exceeds {bound:.2e} at "
            f"k={op.k}, n_trunc={op.n_trunc}")

    pairs = []
    for j in range(values.size):
        vec = vectors[:, j]
        lead = np.argmax(np.abs(vec))
        phase = vec[lead] / abs(vec[lead])
        vec = vec / phase
        vec.setflags(write=False)
        pairs.append(BlochEigenpair(k=op.k, n_trunc=op.n_trunc,
                                    mu=complex(values[j]), coefficients=vec))
    return pairs


def _polish(L, mu, vec):
    """One inverse-iteration step with a conjugated Rayleigh update."""
    n = L.shape[0]
    try:
        refined = sla.solve(L - mu * np.eye(n), vec)
    except (sla.LinAlgError, ValueError):
        return mu, vec
    scale = np.linalg.norm(refined)
    if not np.isfinite(scale) or scale == 0.0:
        return mu, vec
    refined = refined / scale
    return complex(np.vdot(refined, L @ refined)), refined


@dataclass(frozen=True)
class BandStructure:
    """Lowest bands over a quasimomentum grid."""

    spec: LatticeSpec
    n_trunc: int
    k_values: np.ndarray
    pairs: Tuple[Tuple[BlochEigenpair, ...], ...]   # [k index][band index]

    @property
    def bands_kept(self) -> int:
        return len(self.pairs[0])

    def band(self, band_index: int) -> List[BlochEigenpair]:
        return [row[band_index] for row in self.pairs]

    def mu_band(self, band_index: int) -> np.ndarray:
        return np.array([row[band_index].mu for row in self.pairs])

    def gamma_band(self, band_index: int) -> np.ndarray:
        return np.array([row[band_index].gamma for row in self.pairs])


def band_scan(spec: LatticeSpec, k_values: Sequence[float],
              n_trunc: Optional[int] = None,
              bands_kept: int = DEFAULT_BANDS_KEPT) -> BandStructure:
    """Diagonalize the lattice on a grid of quasimomenta, keeping the
    lowest bands_kept bands at each point."""
    if n_trunc is None:
        n_trunc = default_truncation(spec)
    if bands_kept < 1 or bands_kept > 2 * n_trunc + 1:
        raise ConfigurationError(
            f"bands_kept={bands_kept} outside 1..{2 * n_trunc + 1}")
    k_values = np.asarray(k_values, dtype=float)
    rows = []
    for k in k_values:
        pairs = eigenpairs(build_operator(k, spec, n_trunc))
        rows.append(tuple(pairs[:bands_kept]))
    return BandStructure(spec=spec, n_trunc=n_trunc,
                         k_values=k_values, pairs=tuple(rows))


def min_decay(k_values, gammas) -> Tuple[float, float]:
    """Locate the decay-rate minimum of one band.

    Picks the grid minimum (smallest |k| on exact ties) and sharpens it
    with a parabola through the neighboring samples when the minimum is
    interior.  Returns (k_star, gamma_min).
    """
    k_values = np.asarray(k_values, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if k_values.shape != gammas.shape or k_values.ndim != 1:
        raise ValueError("k_values and gammas must be matching 1-D arrays")
    if k_values.size < 3:
        raise ValueError("need at least 3 samples to locate a minimum")
    lowest = gammas.min()
    ties = np.flatnonzero(gammas == lowest)
    i = ties[np.argmin(np.abs(k_values[ties]))]
    if i == 0 or i == k_values.size - 1:
        return float(k_values[i]), float(gammas[i])
    ka, kb, kc = k_values[i - 1:i + 2]
    ga, gb, gc = gammas[i - 1:i + 2]
    quad = np.polyfit([ka, kb, kc], [ga, gb, gc], 2)
    if quad[0] <= 0.0:
        return float(kb), float(gb)
    k_star = -quad[1] / (2.0 * quad[0])
    if not (min(ka, kc) <= k_star <= max(ka, kc)):
        return float(kb), float(gb)
    return float(k_star), float(np.polyval(quad, k_star))


def biorthogonality_residual(pair_a: BlochEigenpair, pair_b: BlochEigenpair) -> float:
    """|sum_n C'_n C_n| for two eigenpairs of the same operator.

    Exactly zero in exact arithmetic for distinct eigenvalues.  Feeding
    the same eigenpair twice returns its plain self product, which is
    the exceptional-point indicator.  Distinct pairs closer than
    DEGENERACY_TOL are rejected: there the plain product is not a valid
    pairing (generalized eigenvectors take over).
    """
    if pair_a.n_trunc != pair_b.n_trunc:
        raise ValueError("eigenpairs come from different truncation orders")
    if pair_a.k != pair_b.k:
        raise ValueError("eigenpairs come from different quasimomenta")
    if pair_a.mu == pair_b.mu and np.array_equal(pair_a.coefficients,
                                                 pair_b.coefficients):
        return exceptional_indicator(pair_a)
    if abs(pair_a.mu - pair_b.mu) <= DEGENERACY_TOL:
        raise ValueError(
            f"eigenvalues {pair_a.mu} and {pair_b.mu} are numerically degenerate")
    return float(abs(np.dot(pair_a.coefficients, pair_b.coefficients)))


def exceptional_indicator(pair: BlochEigenpair) -> float:
    """|sum_n C_n^2|, the plain self product of one eigenvector.

    This is the cell overlap of the eigenvector with its reflected
    partner (coefficients reversed under k -> -k), so it extends the
    pairing behind biorthogonality_residual to a single eigenpair.
    Order one for a healthy band; a vanishing value flags coalescing
    eigenvectors (an exceptional point), where the eigenbasis must be
    completed by generalized vectors.
    """
    c = pair.coefficients
    return float(abs(np.dot(c, c)))
