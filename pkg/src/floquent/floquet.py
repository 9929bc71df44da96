"""One-period evolution operators, quasienergy spectra, fillings and edge modes.

Every function here is pure; per-momentum slices and per-parameter points can
be evaluated concurrently and assembled in any order.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import models
from .errors import ConfigError, GapClosedError, NumericsError, ProximityWarning
from .numerics import exp_hermitian, max_abs, unitary_eig

FLOQUET_UNITARITY_TOL = 1e-9
DEFAULT_EPS_E = 1e-3
DEFAULT_W_MIN = 0.6
DEFAULT_EDGE_FRACTION = 0.1
WINDOW_SNAP_TOL = 1e-9
WINDOW_WARN_TOL = 1e-6

TIME_FRAMES = ("original", "frame1", "frame2")


def wrap_phase(x):
    """Map angles to [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, 2 * np.pi) - np.pi


@dataclass(frozen=True)
class FillingWindow:
    """Half-open quasienergy window [lower, upper), or an explicit band index.

    With ``band`` set, ``n_bands`` must give the total number of quasienergy
    bands so the band arcs can be identified from the spectrum.
    """

    lower: float = -np.pi
    upper: float = 0.0
    band: int | None = None
    n_bands: int | None = None

    def __post_init__(self):
        if self.band is not None:
            if self.n_bands is None or not 0 <= self.band < self.n_bands:
                raise ConfigError(
                    f"band index {self.band} requires 0 <= band < n_bands "
                    f"(n_bands={self.n_bands})"
                )


@dataclass(frozen=True)
class FloquetSpectrum:
    """Quasienergies in [-pi, pi), eigenvectors and edge localization data.

    ``left_weight``/``right_weight`` are the probability weights on the outer
    edge regions of the chain of ``n_cells`` cells with ``n_internal`` states
    per cell; ``edge_weight`` is their sum.
    """

    phases: np.ndarray
    vectors: np.ndarray
    n_cells: int
    n_internal: int
    boundary: str
    edge_cells: int
    left_weight: np.ndarray
    right_weight: np.ndarray

    @property
    def edge_weight(self):
        return self.left_weight + self.right_weight

    @property
    def sides(self):
        return np.where(self.left_weight >= self.right_weight, "left", "right")


def floquet_operator(factors):
    """Product of exponentials exp(-i H t), rightmost factor first in time.

    ``factors`` is an ordered list of (Hermitian matrix, duration) pairs in
    time order.
    """
    if not factors:
        raise ConfigError("factor list is empty")
    u = None
    for h, duration in factors:
        step = exp_hermitian(h, float(duration))
        u = step if u is None else step @ u
    res = max_abs(u.conj().T @ u - np.eye(u.shape[0]))
    if res > FLOQUET_UNITARITY_TOL:
        raise NumericsError(f"one-period operator lost unitarity: {res:.3e}")
    return u


def time_frame_factors(spec, frame="original", k=None):
    """Time-ordered (H, duration) factors of the one-period drive.

    ``frame1`` splits the first factor symmetrically around the second,
    ``frame2`` the other way round; both exist only for the two-factor 1D
    models.  ``k`` selects a momentum slice for the 2D models (k1 for the
    quenched Haldane model, k_y for the kicked Harper model).
    """
    if frame not in TIME_FRAMES:
        raise ConfigError(f"unknown time frame {frame!r}")
    kind = spec.kind
    if kind == "ordkr":
        if k is not None:
            raise ConfigError("ordkr is built in real space; no momentum slice")
        h1, h2 = models.build_ordkr(spec)
        d1 = d2 = 1.0
    elif kind == "pql":
        if k is not None:
            raise ConfigError("pql is built in real space; no momentum slice")
        h1, h2 = models.build_pql(spec)
        d1 = d2 = 0.5
    elif kind == "pqghm":
        if frame != "original":
            raise ConfigError("symmetric time frames are defined only for ordkr/pql")
        if k is None:
            h1, h2 = models.build_pqghm_realspace(spec)
        else:
            h1, h2 = models.build_pqghm_slice(spec, k)
        return [(h1, float(spec.params["T1"])), (h2, float(spec.params["T2"]))]
    elif kind == "khm":
        if frame != "original":
            raise ConfigError("symmetric time frames are defined only for ordkr/pql")
        kick, hop = models.build_khm(spec, k_y=k)
        return [(hop, 1.0), (kick, 1.0)]
    else:  # pragma: no cover - ModelSpec already validates
        raise ConfigError(f"unknown model kind {kind!r}")
    if frame == "original":
        return [(h1, d1), (h2, d2)]
    if frame == "frame1":
        return [(h1, d1 / 2), (h2, d2), (h1, d1 / 2)]
    return [(h2, d2 / 2), (h1, d1), (h2, d2 / 2)]


def _edge_weights(vectors, n_cells, n_internal, edge_cells):
    prob = np.abs(vectors) ** 2
    prob = prob.reshape(n_cells, n_internal, -1).sum(axis=1)
    left = prob[:edge_cells].sum(axis=0)
    right = prob[n_cells - edge_cells :].sum(axis=0)
    return left, right


def quasienergy_spectrum(
    u,
    n_cells,
    n_internal=1,
    edge_region_fraction=DEFAULT_EDGE_FRACTION,
    boundary="obc",
) -> FloquetSpectrum:
    """Diagonalize a one-period operator and tag edge localization.

    The edge regions are the outer ceil(fraction * n_cells) cells at each end
    of the flattened cell axis.
    """
    dec = unitary_eig(u)
    if dec.vectors.shape[0] != n_cells * n_internal:
        raise ConfigError(
            f"dimension {dec.vectors.shape[0]} != n_cells*n_internal "
            f"= {n_cells * n_internal}"
        )
    edge_cells = int(np.ceil(edge_region_fraction * n_cells))
    left, right = _edge_weights(dec.vectors, n_cells, n_internal, edge_cells)
    return FloquetSpectrum(
        phases=dec.phases,
        vectors=dec.vectors,
        n_cells=n_cells,
        n_internal=n_internal,
        boundary=str(boundary).lower(),
        edge_cells=edge_cells,
        left_weight=left,
        right_weight=right,
    )


def find_bands(phases, n_bands, min_gap=1e-3):
    """Split quasienergies on the circle into ``n_bands`` arcs.

    Returns (bands, references): ``bands`` is a list of (lo, hi) arcs in time
    order around the circle starting at the band with the most negative
    midpoint in [-pi, pi); ``references`` maps band index b to the gap-center
    quasienergies (below, above) bounding it.

    Raises
    ------
    GapClosedError
        If one of the separating gaps is narrower than ``min_gap``.
    """
    e = np.sort(wrap_phase(np.asarray(phases, dtype=float)))
    if e.size < n_bands:
        raise ConfigError("fewer states than requested bands")
    diffs = np.diff(np.concatenate([e, [e[0] + 2 * np.pi]]))
    gap_order = np.argsort(diffs, kind="stable")[::-1][:n_bands]
    gap_order = np.sort(gap_order)
    gaps = []
    for idx in gap_order:
        lo = e[idx]
        hi = e[(idx + 1) % e.size] + (2 * np.pi if idx == e.size - 1 else 0.0)
        width = hi - lo
        center = wrap_phase((lo + hi) / 2)
        if width < min_gap:
            raise GapClosedError(
                f"spectral gap at quasienergy {center:.6f} has width "
                f"{width:.3e} < {min_gap:.3e}",
                center,
            )
        gaps.append((idx, float(center), float(width)))
    bands = []
    for g in range(n_bands):
        start_idx = (gaps[g][0] + 1) % e.size
        end_idx = gaps[(g + 1) % n_bands][0]
        lo, hi = e[start_idx], e[end_idx]
        ref_below = gaps[g][1]
        ref_above = gaps[(g + 1) % n_bands][1]
        arc = (hi - lo) % (2 * np.pi)
        mid = wrap_phase(lo + arc / 2)
        bands.append(
            {
                "lo": float(lo),
                "hi": float(hi),
                "mid": float(wrap_phase(mid)),
                "ref_below": ref_below,
                "ref_above": ref_above,
            }
        )
    bands.sort(key=lambda b: b["mid"])
    return bands


def band_membership(phases, bands, band_index):
    """Boolean mask of states belonging to the given band arc."""
    band = bands[band_index]
    lo, hi = band["lo"], band["hi"]
    e = wrap_phase(np.asarray(phases, dtype=float))
    if hi >= lo:
        return (e >= lo - 1e-12) & (e <= hi + 1e-12)
    return (e >= lo - 1e-12) | (e <= hi + 1e-12)


def occupied_indices(phases, window: FillingWindow, n_bands=None):
    """Select filled states by quasienergy window, with boundary snapping.

    Quasienergies within 1e-9 of a window boundary (circular distance) are
    snapped onto it, so exactly degenerate boundary pairs are filled or
    excluded together and the projector stays basis-independent.  Returns
    (mask, proximity) where ``proximity`` flags any state within 1e-6 of a
    boundary.
    """
    e = wrap_phase(np.asarray(phases, dtype=float))
    if window.band is not None:
        bands = find_bands(e, window.n_bands if n_bands is None else n_bands)
        mask = band_membership(e, bands, window.band)
        return mask, False
    lo, hi = float(window.lower), float(window.upper)
    if not -np.pi <= lo <= hi <= np.pi:
        raise ConfigError(f"window must satisfy -pi <= lower <= upper <= pi, got [{lo}, {hi})")
    dist_lo = np.abs(wrap_phase(e - lo))
    dist_hi = np.abs(wrap_phase(e - hi))
    proximity = bool(np.any(np.minimum(dist_lo, dist_hi) < WINDOW_WARN_TOL)) if hi > lo else False
    eff = e.copy()
    eff[dist_lo <= WINDOW_SNAP_TOL] = lo
    mask = (eff >= lo) & (eff < hi)
    # Boundary snapping: the lower edge belongs to the half-open window, the
    # upper does not; the lower rule wins where the two boundaries coincide
    # on the circle (full window).
    mask[dist_hi <= WINDOW_SNAP_TOL] = False
    mask[dist_lo <= WINDOW_SNAP_TOL] = lo < hi
    return mask, proximity


def occupied_projector(spectrum, filling: FillingWindow):
    """Single-particle projector onto the filled Floquet states.

    Emits a ProximityWarning when a window boundary lies within 1e-6 of a
    quasienergy (transition proximity).
    """
    phases = spectrum.phases if hasattr(spectrum, "phases") else np.asarray(spectrum)
    vectors = spectrum.vectors
    mask, proximity = occupied_indices(phases, filling)
    if proximity:
        warnings.warn(
            "a filling-window boundary lies within 1e-6 of a quasienergy; "
            "the filled state may be transition-proximate",
            ProximityWarning,
            stacklevel=2,
        )
    occ = vectors[:, mask]
    return occ @ occ.conj().T


def _rotate_for_edge_separation(spectrum, idx):
    """Rotate a (near-)degenerate cluster to separate left/right localization.

    Diagonalizes the left-minus-right edge-region weight operator inside the
    cluster subspace, so exponentially split topological pairs come out as
    pure left and right movers instead of arbitrary mixtures.
    """
    v = spectrum.vectors[:, idx]
    n_cells, n_int = spectrum.n_cells, spectrum.n_internal
    w = spectrum.edge_cells
    side_diag = np.zeros(n_cells)
    side_diag[:w] = 1.0
    side_diag[n_cells - w :] = -1.0
    d = np.repeat(side_diag, n_int)
    m = (v.conj().T * d[None, :]) @ v
    m = (m + m.conj().T) / 2
    _, r = np.linalg.eigh(m)
    return v @ r


def count_edge_modes(
    spectrum: FloquetSpectrum,
    eps_e=DEFAULT_EPS_E,
    w_min=DEFAULT_W_MIN,
    isolation_factor=10.0,
):
    """Count localized quasienergy modes at E = 0 and E = pi under OBC.

    A cluster of states within ``eps_e`` of the reference quasienergy is
    counted only if it is spectrally isolated: every other state must stay
    at least ``isolation_factor * eps_e`` away from the reference.  This
    localization screen keeps pathological all-degenerate spectra (e.g. the
    identity operator, whose solver basis is arbitrary) from contributing.
    Degenerate clusters are rotated to separate left/right localization
    before the ``w_min`` filter is applied.
    """
    if spectrum.boundary != "obc":
        raise ConfigError("edge-mode counting requires an OBC spectrum")
    counts = []
    for ref in (0.0, np.pi):
        dist = np.abs(wrap_phase(spectrum.phases - ref))
        cluster = np.flatnonzero(dist < eps_e)
        if cluster.size == 0:
            counts.append(0)
            continue
        rest = np.flatnonzero(dist >= eps_e)
        if rest.size == 0 or dist[rest].min() < isolation_factor * eps_e:
            counts.append(0)
            continue
        rotated = _rotate_for_edge_separation(spectrum, cluster)
        left, right = _edge_weights(
            rotated, spectrum.n_cells, spectrum.n_internal, spectrum.edge_cells
        )
        counts.append(int(np.count_nonzero(left + right >= w_min)))
    return counts[0], counts[1]


MIN_BRANCH_OVERLAP = 0.2


def _signed_crossings(ks, spectra, reference, side, w_min, window):
    """Net signed count of localized branches crossing a reference level.

    ``spectra`` hold the per-k quasienergies/vectors on a uniform grid of the
    momentum circle; branches are followed between adjacent grid points by
    eigenvector overlap, restricted to states within ``window`` of the
    reference.  Crossing sign is the sign of dE/dk.  A continuation must
    carry at least MIN_BRANCH_OVERLAP of the state's weight, and the two ends
    of a counted crossing must straddle the reference within the window, so
    unrelated branches entering and leaving the window are never paired.
    """
    total = 0
    n_k = len(ks)
    for i in range(n_k):
        a = spectra[i]
        b = spectra[(i + 1) % n_k]
        da = wrap_phase(a.phases - reference)
        db_all = wrap_phase(b.phases - reference)
        cand_a = np.flatnonzero(np.abs(da) < window)
        if cand_a.size == 0:
            continue
        cand_b = np.flatnonzero(np.abs(db_all) < window)
        if cand_b.size == 0:
            continue
        overlaps = np.abs(a.vectors[:, cand_a].conj().T @ b.vectors[:, cand_b]) ** 2
        for row, ja in enumerate(cand_a):
            col = int(np.argmax(overlaps[row]))
            if overlaps[row, col] < MIN_BRANCH_OVERLAP:
                continue
            jb = cand_b[col]
            d0, d1 = da[ja], db_all[jb]
            up = d0 < 0 <= d1
            down = d1 < 0 <= d0
            if not (up or down):
                continue
            if abs(d0) + abs(d1) > window:
                continue
            weight = (a.edge_weight[ja] + b.edge_weight[jb]) / 2
            if weight < w_min or a.sides[ja] != side:
                continue
            total += 1 if up else -1
    return total


def chiral_edge_band_count(
    ks,
    spectra,
    band,
    n_bands,
    side="left",
    w_min=DEFAULT_W_MIN,
    min_gap=1e-3,
):
    """Net numbers of chiral edge branches leaving/entering a quasienergy band.

    ``spectra`` are OBC FloquetSpectrum objects on a uniform momentum grid
    ``ks`` covering [-pi, pi).  The band arcs and the gap-center reference
    quasienergies are derived from the pooled bulk states (edge weight below
    ``w_min``).  Returns (n_leaving, n_entering): the net signed crossings of
    the gap centers above and below the band by branches localized on
    ``side``.

    Raises
    ------
    GapClosedError
        If a bounding gap is narrower than ``min_gap``.
    """
    if side not in ("left", "right"):
        raise ConfigError(f"side must be 'left' or 'right', got {side!r}")
    bulk = np.concatenate(
        [s.phases[s.edge_weight < w_min] for s in spectra]
    )
    if bulk.size == 0:
        raise ConfigError("no bulk states found below the localization threshold")
    bands = find_bands(bulk, n_bands, min_gap=min_gap)
    if not 0 <= band < len(bands):
        raise ConfigError(f"band index {band} out of range for {len(bands)} bands")
    info = bands[band]
    # Track within half of the actual bounding gap so bulk bands stay outside.
    gap_widths = []
    for ref in (info["ref_below"], info["ref_above"]):
        dist = np.abs(wrap_phase(bulk - ref))
        gap_widths.append(2 * dist.min())
    leaving = _signed_crossings(
        ks, spectra, info["ref_above"], side, w_min, 0.45 * gap_widths[1]
    )
    entering = _signed_crossings(
        ks, spectra, info["ref_below"], side, w_min, 0.45 * gap_widths[0]
    )
    return leaving, entering
