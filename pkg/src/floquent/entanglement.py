"""Correlation matrix of a filled state on a subsystem, its spectrum, the
entanglement entropy, and an exact Fock-space oracle for small systems.

Conventions: C_mn = <n|P|m> for m, n in A, so the transpose of C is the plain
restriction of the occupied projector to A; eigenmodes are eigenvectors of
C^T.  The entanglement eigenvalues obey xi = ln(1/zeta - 1).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import xlogy

from .errors import ConfigError, ContractViolationError, NumericsError
from .numerics import hermitian_eig, max_abs

ZETA_CLAMP = 1e-12
ZETA_RANGE_TOL = 1e-6
PROJECTOR_PROBE_TOL = 1e-7
DEFAULT_HALF_DELTA = 1e-4
ORACLE_MAX_DIM = 14


@dataclass(frozen=True)
class Partition:
    """Contiguous block of whole cells forming subsystem A.

    The cut axis has ``n_cells`` cells; A occupies cells [start, start +
    a_cells).  ``cols`` counts transverse cells per cut-axis slice (1 for
    chains and momentum slices, L_perp for a 2D torus cut), ``internals`` the
    states per cell.  Under a periodic cut axis both ends of A are
    entanglement cuts; under OBC an end is a cut only if it adjoins B.
    """

    n_cells: int
    a_cells: int
    start: int = 0
    cols: int = 1
    internals: int = 1
    periodic: bool = True

    def __post_init__(self):
        if not 0 < self.a_cells < self.n_cells:
            raise ConfigError(
                f"A must be a nonempty proper subset: a_cells={self.a_cells}, "
                f"n_cells={self.n_cells}"
            )
        if not 0 <= self.start or self.start + self.a_cells > self.n_cells:
            raise ConfigError("A must be a contiguous, non-wrapping cell block")

    @classmethod
    def half(cls, n_cells, cols=1, internals=1, periodic=True):
        """Default partition: the first half of the cut axis."""
        return cls(n_cells, n_cells // 2, 0, cols, internals, periodic)

    @property
    def per_cell(self) -> int:
        return self.cols * self.internals

    @property
    def dim(self) -> int:
        return self.a_cells * self.per_cell

    def indices(self) -> np.ndarray:
        lo = self.start * self.per_cell
        return np.arange(lo, lo + self.dim)

    def complement_indices(self) -> np.ndarray:
        total = self.n_cells * self.per_cell
        mask = np.ones(total, dtype=bool)
        mask[self.indices()] = False
        return np.flatnonzero(mask)

    def complement(self) -> "Partition":
        """Complement as a Partition (only when B is itself contiguous)."""
        if self.periodic and not (self.start == 0 or self.start + self.a_cells == self.n_cells):
            raise ConfigError("complement of an interior block wraps; use complement_indices")
        start = (self.start + self.a_cells) % self.n_cells
        return replace(self, a_cells=self.n_cells - self.a_cells, start=start)

    def cut_ends(self):
        left = self.periodic or self.start > 0
        right = self.periodic or self.start + self.a_cells < self.n_cells
        return left, right

    def cut_weights(self, modes):
        """Per-mode probability within ceil(a_cells/10) cells of each cut.

        Returns (left, right) weight arrays; a side that is a physical
        boundary rather than a cut contributes zero.
        """
        w = math.ceil(self.a_cells / 10)
        prob = np.abs(modes) ** 2
        prob = prob.reshape(self.a_cells, self.per_cell, -1).sum(axis=1)
        left_is_cut, right_is_cut = self.cut_ends()
        left = prob[:w].sum(axis=0) if left_is_cut else np.zeros(prob.shape[1])
        right = prob[self.a_cells - w :].sum(axis=0) if right_is_cut else np.zeros(prob.shape[1])
        return left, right


@dataclass(frozen=True)
class EntanglementReport:
    """Correlation spectrum, entanglement spectrum and eigenmodes on A."""

    zeta: np.ndarray
    xi: np.ndarray
    modes: np.ndarray
    partition: Partition
    cut_weight: np.ndarray
    cut_side: np.ndarray
    entropy: float | None = None
    n_half: int | None = None

    def with_entropy(self, delta=DEFAULT_HALF_DELTA):
        return replace(
            self,
            entropy=entanglement_entropy(self.zeta),
            n_half=count_maximally_entangled(self.zeta, delta),
        )


def _check_projector(p):
    p = np.asarray(p, dtype=complex)
    n = p.shape[0]
    herm = max_abs(p - p.conj().T)
    if herm > 1e-8:
        raise ContractViolationError(f"projector is not Hermitian: {herm:.3e}")
    rng = np.random.default_rng(1234)
    probes = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    probes /= np.linalg.norm(probes, axis=0)
    pv = p @ probes
    res = max_abs(p @ pv - pv)
    if res > PROJECTOR_PROBE_TOL:
        raise ContractViolationError(
            f"projector fails idempotency probe: residual {res:.3e}"
        )
    return p


def correlation_matrix(projector, partition: Partition, indices=None):
    """C_mn = <n|P|m> restricted to subsystem A (or to explicit indices)."""
    p = _check_projector(projector)
    idx = partition.indices() if indices is None else np.asarray(indices)
    return p[np.ix_(idx, idx)].T


def entanglement_spectrum(c, partition: Partition, eps_zeta=ZETA_CLAMP) -> EntanglementReport:
    """Diagonalize a correlation matrix into an EntanglementReport.

    zeta is ascending and clamped to [eps_zeta, 1 - eps_zeta] before the
    logarithm; eigenmodes are eigenvectors of C^T, i.e. of the restricted
    projector itself.
    """
    c = np.asarray(c, dtype=complex)
    if c.shape[0] != partition.dim:
        raise ConfigError(
            f"correlation matrix dim {c.shape[0]} != partition dim {partition.dim}"
        )
    dec = hermitian_eig(c.T)
    zeta = dec.values
    if zeta.min() < -ZETA_RANGE_TOL or zeta.max() > 1 + ZETA_RANGE_TOL:
        raise ContractViolationError(
            f"correlation spectrum outside [0, 1]: [{zeta.min():.3e}, {zeta.max():.3e}]"
        )
    zeta = np.clip(zeta, eps_zeta, 1 - eps_zeta)
    xi = np.log(1.0 / zeta - 1.0)
    left, right = partition.cut_weights(dec.vectors)
    return EntanglementReport(
        zeta=zeta,
        xi=xi,
        modes=dec.vectors,
        partition=partition,
        cut_weight=left + right,
        cut_side=np.where(left >= right, "left", "right"),
    )


def entanglement_entropy(zeta) -> float:
    """Binary-entropy sum over correlation eigenvalues, with 0 ln 0 = 0."""
    z = np.clip(np.asarray(zeta, dtype=float), 0.0, 1.0)
    return float(-(xlogy(z, z) + xlogy(1 - z, 1 - z)).sum())


def count_maximally_entangled(zeta, delta=DEFAULT_HALF_DELTA) -> int:
    """Number of correlation eigenvalues within delta of 1/2."""
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    return int(np.count_nonzero(np.abs(np.asarray(zeta) - 0.5) <= delta))


@dataclass(frozen=True)
class OracleResult:
    """Exact Fock-space entanglement data for cross-checking the projector route.

    ``rho_a_eigenvalues`` is the reduced density matrix spectrum (descending),
    ``corr_fock`` the correlation matrix <Psi|c_m^dag c_n|Psi> on A evaluated
    with Fock-space operators, and ``z`` the entanglement partition function
    prod(1 + exp(-xi)) of the spectrum of ``corr_fock``.
    """

    rho_a_eigenvalues: np.ndarray
    entropy: float
    corr_fock: np.ndarray
    z: float


def _popcount_parity(values):
    return np.bitwise_count(values.astype(np.uint64)).astype(np.int64) & 1


def _apply_creation(psi, amplitudes, dim):
    """psi -> (sum_n a_n c_n^dag) psi on the 2^dim Fock vector."""
    out = np.zeros_like(psi)
    s = np.arange(psi.size, dtype=np.int64)
    for n in range(dim):
        a = amplitudes[n]
        if a == 0:
            continue
        empty = (s >> n) & 1 == 0
        src = s[empty]
        sign = 1.0 - 2.0 * _popcount_parity(src & ((1 << n) - 1))
        out[src | (1 << n)] += a * sign * psi[src]
    return out


def _apply_annihilation(psi, n):
    out = np.zeros_like(psi)
    s = np.arange(psi.size, dtype=np.int64)
    occ = (s >> n) & 1 == 1
    src = s[occ]
    sign = 1.0 - 2.0 * _popcount_parity(src & ((1 << n) - 1))
    out[src ^ (1 << n)] = sign * psi[src]
    return out


def manybody_oracle(occupied, partition: Partition, indices=None) -> OracleResult:
    """Exact many-body reduction: build the filled state in the Fock basis,
    trace out B, and return the reduced spectrum, entropy and Fock-space
    correlation matrix.

    ``occupied`` holds the filled single-particle orbitals as columns.  The
    total single-particle dimension is capped at 14 (Fock space 2^14).
    """
    occupied = np.asarray(occupied, dtype=complex)
    dim = occupied.shape[0]
    if dim > ORACLE_MAX_DIM:
        raise ConfigError(f"oracle dimension {dim} exceeds cap {ORACLE_MAX_DIM}")
    a_idx = partition.indices() if indices is None else np.asarray(indices)
    mask = np.zeros(dim, dtype=bool)
    mask[a_idx] = True
    b_idx = np.flatnonzero(~mask)
    order = np.concatenate([a_idx, b_idx])
    orbs = occupied[order, :]
    n_a = a_idx.size

    psi = np.zeros(1 << dim, dtype=complex)
    psi[0] = 1.0
    for col in range(orbs.shape[1]):
        psi = _apply_creation(psi, orbs[:, col], dim)
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise NumericsError("filled orbitals are linearly dependent; state vanished")
    psi = psi / norm

    amp = psi.reshape(1 << (dim - n_a), 1 << n_a).T
    rho_a = amp @ amp.conj().T
    evals = np.linalg.eigvalsh(rho_a)[::-1]
    evals = np.clip(evals, 0.0, None)
    entropy = float(-xlogy(evals, evals).sum())

    corr = np.zeros((n_a, n_a), dtype=complex)
    lowered = [_apply_annihilation(psi, n) for n in range(n_a)]
    for m in range(n_a):
        for n in range(n_a):
            corr[m, n] = np.vdot(lowered[m], lowered[n])
    zeta = np.clip(np.linalg.eigvalsh(corr), ZETA_CLAMP, 1 - ZETA_CLAMP)
    xi = np.log(1.0 / zeta - 1.0)
    z = float(np.prod(1.0 + np.exp(-xi)))
    return OracleResult(
        rho_a_eigenvalues=evals, entropy=entropy, corr_fock=corr, z=z
    )


def rho_a_from_zeta(zeta) -> np.ndarray:
    """Reduced-density eigenvalue multiset {prod_s zeta prod_!s (1-zeta)}
    implied by a correlation spectrum, descending."""
    vals = np.array([1.0])
    for z in np.asarray(zeta, dtype=float):
        vals = np.concatenate([vals * (1 - z), vals * z])
    return np.sort(vals)[::-1]
