"""Momentum-block route to correlation matrices of translation-invariant
periodic geometries.

Under full PBC a filled Floquet state's projector is block diagonal over the
momentum grid, so the restricted correlation matrix is assembled from the
inverse Fourier transform of the small per-momentum projectors.  This is an
exact identity; the dense real-space route stays available and the two are
cross-checked in the test suite.
"""

import numpy as np

from . import models
from .errors import ConfigError
from .floquet import FillingWindow, band_membership, find_bands, occupied_indices
from .numerics import exp_hermitian, unitary_eig


def bloch_factors(spec, k, frame="original"):
    """Time-ordered per-momentum factor blocks of the 1D models."""
    if spec.kind == "ordkr":
        h1, h2 = models.ordkr_bloch(spec.params["K1"], spec.params["K2"], k)
        d1 = d2 = 1.0
    elif spec.kind == "pql":
        h1, h2 = models.pql_bloch(
            spec.params["Jx"], spec.params["Jy"], spec.params["Jd"], spec.params["V"], k
        )
        d1 = d2 = 0.5
    else:
        raise ConfigError(f"no 1D momentum blocks for model kind {spec.kind!r}")
    if frame == "original":
        return [(h1, d1), (h2, d2)]
    if frame == "frame1":
        return [(h1, d1 / 2), (h2, d2), (h1, d1 / 2)]
    if frame == "frame2":
        return [(h2, d2 / 2), (h1, d1), (h2, d2 / 2)]
    raise ConfigError(f"unknown time frame {frame!r}")


def _product(factors):
    u = None
    for h, duration in factors:
        step = exp_hermitian(h, duration)
        u = step if u is None else step @ u
    return u


def bloch_unitary(spec, k, frame="original"):
    """One-period Bloch block of the 1D models at momentum k."""
    return _product(bloch_factors(spec, k, frame))


def khm_slice_cell_blocks(spec, k_y):
    """(kick, hop(kx)) blocks of the kicked Harper chain over magnetic cells.

    The chain at fixed k_y is periodic under translation by q sites; grouping
    x = q*X + s gives q x q blocks with the kick diagonal and the hop
    carrying the cell-boundary phase exp(+-i q kx).
    """
    q = int(spec.params["q"])
    lam = models.khm_lambda(spec)
    v = float(spec.params["V"])
    j = float(spec.params["J"])
    s = np.arange(q)
    kick = np.diag(v * np.cos(lam * s - k_y)).astype(complex)

    def hop(kx):
        h = np.zeros((q, q), dtype=complex)
        for i in range(q - 1):
            h[i, i + 1] = j / 2
            h[i + 1, i] = j / 2
        h[q - 1, 0] += (j / 2) * np.exp(1j * kx)
        h[0, q - 1] += (j / 2) * np.exp(-1j * kx)
        return h

    return kick, hop


def momentum_grid(n):
    """Translation eigenphases 2*pi*m/n of an n-cell periodic chain."""
    return 2 * np.pi * np.arange(n) / n


def filled_projector_grid(unitaries, window: FillingWindow):
    """Per-momentum occupied projectors (n_k, ni, ni) for a window filling.

    Band-resolved windows identify the band arcs from the pooled phases of
    all blocks.  Returns (p_grid, phases_list, proximity).
    """
    decs = [unitary_eig(u) for u in unitaries]
    phases = [d.phases for d in decs]
    proximity = False
    if window.band is not None:
        bands = find_bands(np.concatenate(phases), window.n_bands)
        masks = [band_membership(d.phases, bands, window.band) for d in decs]
    else:
        masks = []
        for d in decs:
            mask, prox = occupied_indices(d.phases, window)
            proximity = proximity or prox
            masks.append(mask)
    ni = unitaries[0].shape[0]
    p_grid = np.empty((len(unitaries), ni, ni), dtype=complex)
    for i, (d, mask) in enumerate(zip(decs, masks)):
        occ = d.vectors[:, mask]
        p_grid[i] = occ @ occ.conj().T
    return p_grid, phases, proximity


def correlation_from_grid_1d(p_grid, a_cells):
    """Correlation matrix C (= transposed restricted projector) of a
    contiguous a_cells block, from the per-momentum projectors of an L-cell
    ring."""
    n_k, ni, _ = p_grid.shape
    if not 0 < a_cells < n_k:
        raise ConfigError("a_cells must be a proper nonempty block")
    table = np.fft.ifft(p_grid, axis=0)
    idx = np.arange(a_cells)
    d = (idx[:, None] - idx[None, :]) % n_k
    blocks = table[d]
    p_a = np.transpose(blocks, (0, 2, 1, 3)).reshape(a_cells * ni, a_cells * ni)
    return p_a.T


def correlation_from_grid_2d(p_grid, a2_cells):
    """Correlation matrix of the block {n2 < a2_cells} of an L1 x L2 torus.

    ``p_grid`` has shape (L1, L2, ni, ni) over the momentum grid; the cell
    flat order is n1 + L1*n2 to match the real-space builders.
    """
    l1, l2, ni, _ = p_grid.shape
    if not 0 < a2_cells < l2:
        raise ConfigError("a2_cells must be a proper nonempty block")
    table = np.fft.ifft2(p_grid, axes=(0, 1))
    cells = np.arange(l1 * a2_cells)
    n1 = cells % l1
    n2 = cells // l1
    d1 = (n1[:, None] - n1[None, :]) % l1
    d2 = (n2[:, None] - n2[None, :]) % l2
    blocks = table[d1, d2]
    dim = cells.size * ni
    p_a = np.transpose(blocks, (0, 2, 1, 3)).reshape(dim, dim)
    return p_a.T


def chain_projector_grid(spec, frame="original", window=None):
    """Filled per-momentum projectors of a 1D model on its natural grid."""
    if spec.boundaries[0] != "pbc":
        raise ConfigError("the momentum route requires PBC")
    if window is None:
        window = FillingWindow()
    (length,) = spec.lengths
    ks = momentum_grid(length)
    unitaries = [bloch_unitary(spec, k, frame) for k in ks]
    return filled_projector_grid(unitaries, window)


def pqghm_torus_projector_grid(spec, window):
    """Filled per-momentum projectors of the quenched Haldane torus."""
    if spec.boundaries != ("pbc", "pbc"):
        raise ConfigError("the torus momentum route requires PBC along both directions")
    l1, l2 = spec.lengths
    t1_dur = float(spec.params["T1"])
    t2_dur = float(spec.params["T2"])
    ep1, ep2 = models._pqghm_episode_params(spec)
    k1s = momentum_grid(l1)
    k2s = momentum_grid(l2)
    unitaries = []
    for k1 in k1s:
        for k2 in k2s:
            h1 = models.pqghm_bloch(*ep1[:2], ep1[2], ep1[3], k1, k2)
            h2 = models.pqghm_bloch(*ep2[:2], ep2[2], ep2[3], k1, k2)
            unitaries.append(
                exp_hermitian(h2, t2_dur) @ exp_hermitian(h1, t1_dur)
            )
    p_flat, phases, proximity = filled_projector_grid(unitaries, window)
    p_grid = p_flat.reshape(l1, l2, 2, 2)
    return p_grid, phases, proximity


def khm_slice_projector_grid(spec, k_y, window):
    """Filled per-momentum projectors of the Harper chain at fixed k_y,
    over magnetic cells of q sites."""
    if spec.boundaries[0] != "pbc":
        raise ConfigError("the momentum route requires PBC along x")
    q = int(spec.params["q"])
    n_cells = spec.lengths[0] // q
    kick, hop = khm_slice_cell_blocks(spec, k_y)
    ks = momentum_grid(n_cells)
    unitaries = [exp_hermitian(kick, 1.0) @ exp_hermitian(hop(k), 1.0) for k in ks]
    return filled_projector_grid(unitaries, window)
