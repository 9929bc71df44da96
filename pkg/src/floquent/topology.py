"""Real-space topological invariants of entanglement Hamiltonians and the
bulk-edge correspondence verifiers, plus analytic phase-boundary solvers.

All reductions use numpy's pairwise summation in a fixed order, so repeated
runs are bit-stable.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ConfigError, ContractViolationError, TieBreakError
from .floquet import find_bands, band_membership, wrap_phase
from .numerics import max_abs, unitary_eig

log = logging.getLogger(__name__)

TIE_TOL = 1e-8
WINDING_QUANT_TOL = 0.1
CHERN_QUANT_TOL = 0.15
COLLINEAR_TOL = 1e-6


@dataclass(frozen=True)
class WindingResult:
    raw: float
    value: int
    quantized: bool


@dataclass(frozen=True)
class ChernResult:
    raw: float
    value: int
    quantized: bool


@dataclass(frozen=True)
class Verdict:
    """Outcome of one correspondence check: failures list violated relations."""

    passed: bool
    failures: tuple
    values: dict


def flatband_projector_q(report, tie_break=None) -> np.ndarray:
    """Q = sum_j sign(zeta_j - 1/2) |phi_j><phi_j|.

    Eigenvalues within 1e-8 of 1/2 are exact ties: without a ``tie_break``
    sign they raise; with one they are assigned that sign and the event is
    logged.
    """
    zeta = report.zeta
    ties = np.abs(zeta - 0.5) <= TIE_TOL
    if np.any(ties):
        if tie_break is None:
            raise TieBreakError(
                f"{int(ties.sum())} correlation eigenvalue(s) tie at 1/2; "
                "pass tie_break=+1 or -1"
            )
        sign_tie = 1.0 if float(tie_break) > 0 else -1.0
        log.warning(
            "%d correlation eigenvalue(s) within %.0e of 1/2 assigned sign %+d",
            int(ties.sum()),
            TIE_TOL,
            int(sign_tie),
        )
    signs = np.where(zeta > 0.5, 1.0, -1.0)
    if np.any(ties):
        signs[ties] = sign_tie
    return (report.modes * signs[None, :]) @ report.modes.conj().T


@dataclass(frozen=True)
class WindingConfig:
    """Chiral operator on the A basis, edge exclusion and position convention.

    ``gamma_internal`` is the per-cell chiral block; the position operator is
    diag(cell index), ascending left to right.  ``edge_exclusion`` cells are
    dropped from each end of A before tracing; the default ceil(L_A/4) traces
    over the middle half.
    """

    n_cells: int
    internals: int
    gamma_internal: np.ndarray
    edge_exclusion: int | None = None

    def __post_init__(self):
        g = np.asarray(self.gamma_internal)
        if max_abs(g @ g - np.eye(g.shape[0])) > 1e-12:
            raise ConfigError("chiral operator must square to the identity")
        le = self.resolved_edge_exclusion()
        if self.n_cells - 2 * le < max(1, self.n_cells // 4):
            raise ConfigError(
                f"edge exclusion {le} leaves fewer than L_A/4 bulk cells"
            )

    def resolved_edge_exclusion(self) -> int:
        if self.edge_exclusion is None:
            return int(np.ceil(self.n_cells / 4))
        return int(self.edge_exclusion)


def open_bulk_winding(q, config: WindingConfig):
    """Open-bulk winding number: the bulk trace of Gamma_A Q [Q, N_A],
    normalized per retained basis state.

    The primed trace runs over the bulk cells of A (edge-excluded) and the
    internal indices, and is divided by the number of retained basis states
    L' * internals; this normalization reproduces the quantized integers of
    both the twofold and the fourfold chiral models.  Returns a
    WindingResult; a non-quantized value (|raw - nearest| >= 0.1) is flagged
    and logged, as expected near transitions.
    """
    n, ni = config.n_cells, config.internals
    if q.shape[0] != n * ni:
        raise ConfigError(f"Q dim {q.shape[0]} != n_cells*internals = {n * ni}")
    gamma = np.kron(np.eye(n), config.gamma_internal)
    pos = np.repeat(np.arange(n, dtype=float), ni)
    commutator = q * pos[None, :] - pos[:, None] * q  # Q N - N Q
    m = gamma @ q @ commutator
    le = config.resolved_edge_exclusion()
    lprime = n - 2 * le
    bulk = slice(le * ni, (n - le) * ni)
    raw = float(np.real(np.sum(np.diag(m)[bulk]))) / (lprime * ni)
    value = int(np.rint(raw))
    quantized = abs(raw - value) < WINDING_QUANT_TOL
    if not quantized:
        log.warning("winding number not quantized: raw=%.4f", raw)
    return WindingResult(raw=raw, value=value, quantized=quantized)


def half_filling_projector(report) -> np.ndarray:
    """P = sum_{zeta_j < 1/2} |phi_j><phi_j| of an entanglement report."""
    sel = report.zeta < 0.5
    v = report.modes[:, sel]
    return v @ v.conj().T


def local_chern_marker(p, x, y) -> np.ndarray:
    """Per-flat-index local Chern marker -4pi Im diag(P x P y P).

    ``x`` and ``y`` are position values (cell coordinates) per flat index;
    internal components of a site are returned separately and may be summed
    by the caller.
    """
    p = np.asarray(p, dtype=complex)
    herm = max_abs(p - p.conj().T)
    idem_probe = p @ p[:, ::17] - p[:, ::17]
    if herm > 1e-6 or max_abs(idem_probe) > 1e-6:
        raise ContractViolationError(
            f"half-filling projector violates idempotency/hermiticity "
            f"(herm {herm:.1e}, idem {max_abs(idem_probe):.1e})"
        )
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pxp = p * x[None, :] @ p
    pyp = p * y[None, :] @ p
    diag = np.einsum("ij,ji->i", pxp, pyp)
    return -4 * np.pi * np.imag(diag)


def real_space_chern(field, region=None, margin=None):
    """Average the marker field over a region away from the cuts.

    ``field`` is a 2D array over sites with axis 0 along the cut axis of A;
    ``region`` is a pair of slices, defaulting to the central square of side
    floor(min(shape)/2), which keeps a margin >= L/8 from each cut.  Passing
    ``margin`` instead selects the central rectangle leaving that many sites
    on every side.
    """
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ConfigError(f"marker field must be 2D, got shape {field.shape}")
    if region is None and margin is not None:
        margin = int(margin)
        if any(n - 2 * margin < 1 for n in field.shape):
            raise ConfigError(f"margin {margin} leaves no sites to average")
        region = (
            slice(margin, field.shape[0] - margin),
            slice(margin, field.shape[1] - margin),
        )
    if region is None:
        side = min(field.shape) // 2
        starts = [(n - side) // 2 for n in field.shape]
        region = (
            slice(starts[0], starts[0] + side),
            slice(starts[1], starts[1] + side),
        )
    margin = region[0].start
    if margin < field.shape[0] / 8 - 1e-9:
        raise ConfigError(
            f"averaging region margin {margin} is closer than L/8 to a cut"
        )
    sub = field[region]
    raw = float(np.sum(sub) / sub.size)
    value = int(np.rint(raw))
    quantized = abs(raw - value) < CHERN_QUANT_TOL
    if not quantized:
        log.warning("real-space Chern number not quantized: raw=%.4f", raw)
    return ChernResult(raw=raw, value=value, quantized=quantized)


def _check(failures, values, name, lhs, rhs):
    values[name] = (lhs, rhs)
    if lhs != rhs:
        failures.append(f"{name}: {lhs} != {rhs}")


def verify_bdi(n1, n2, w1, w2, n0, npi) -> Verdict:
    """Entanglement bulk-edge correspondence of the twofold-degenerate class."""
    failures, values = [], {}
    _check(failures, values, "N1 = n0 + npi", n1, n0 + npi)
    _check(failures, values, "N2 = |n0 - npi|", n2, abs(n0 - npi))
    _check(failures, values, "N1 = 2|W1|", n1, 2 * abs(w1))
    _check(failures, values, "N2 = 2|W2|", n2, 2 * abs(w2))
    _check(failures, values, "n0 = |W1 + W2|", n0, abs(w1 + w2))
    _check(failures, values, "npi = |W1 - W2|", npi, abs(w1 - w2))
    return Verdict(passed=not failures, failures=tuple(failures), values=values)


def verify_cii(n1, n2, w1, w2, n0, npi) -> Verdict:
    """Entanglement bulk-edge correspondence of the fourfold-degenerate class."""
    failures, values = [], {}
    _check(failures, values, "N1 = n0 + npi", n1, n0 + npi)
    _check(failures, values, "N2 = |n0 - npi|", n2, abs(n0 - npi))
    _check(failures, values, "N1 = 4|W1|", n1, 4 * abs(w1))
    _check(failures, values, "N2 = 4|W2|", n2, 4 * abs(w2))
    _check(failures, values, "n0 = 2|W1 + W2|", n0, 2 * abs(w1 + w2))
    _check(failures, values, "npi = 2|W1 - W2|", npi, 2 * abs(w1 - w2))
    return Verdict(passed=not failures, failures=tuple(failures), values=values)


def verify_chern(band_chern, es_chiral_count, ch, edge_counts) -> Verdict:
    """Chern-class correspondence: ES chiral count and real-space Chern number
    against the filled band's Chern number; signed values are recorded, the
    relations compare magnitudes."""
    n_l, n_l_prime = edge_counts
    failures, values = [], {}
    _check(failures, values, "n_c = |C0|", es_chiral_count, abs(band_chern))
    _check(failures, values, "|n_L - n_L'| = |Ch|", abs(n_l - n_l_prime), abs(ch))
    _check(failures, values, "|Ch| = |C0|", abs(ch), abs(band_chern))
    values["signed"] = {"C0": band_chern, "Ch": ch, "n_L": n_l, "n_L'": n_l_prime}
    return Verdict(passed=not failures, failures=tuple(failures), values=values)


def ordkr_dispersion(k1_strength, k2_strength, k):
    """Quasienergy bands +-arccos[cos(K1 cos k) cos(K2 sin k)]."""
    c = np.cos(k1_strength * np.cos(k)) * np.cos(k2_strength * np.sin(k))
    e = np.arccos(np.clip(c, -1.0, 1.0))
    return e, -e

def ordkr_phase_boundaries(k1_strength, k2_range):
    """Critical kicking strengths K2 in (lo, hi] from the ellipse condition
    mu^2/K1^2 + nu^2/K2^2 = 1/pi^2, with the gap-closing quasienergy.

    Returns a sorted list of (K2c, location) with location 0 for even
    mu + nu and pi for odd.  Only transitions transverse to the K2 axis
    (nu >= 1) are reported.
    """
    lo, hi = float(k2_range[0]), float(k2_range[1])
    if hi <= lo:
        return []
    out = {}
    mu_max = int(np.floor(k1_strength / np.pi + 1e-12))
    for mu in range(0, mu_max + 1):
        r = 1.0 - (mu * np.pi / k1_strength) ** 2
        if r <= 1e-15:
            continue
        scale = np.pi / np.sqrt(r)
        nu = 1
        while nu * scale <= hi + 1e-12:
            k2c = nu * scale
            if k2c > lo:
                location = 0.0 if (mu + nu) % 2 == 0 else np.pi
                key = round(k2c, 12)
                out.setdefault(key, (k2c, location))
            nu += 1
    return [out[k] for k in sorted(out)]


def _pqghm_h_vectors(spec, k1, k2):
    from .models import _pqghm_episode_params

    vecs = []
    for t1, t2, t3, phi in _pqghm_episode_params(spec):
        hx = t1 * (1 + np.cos(k1) + np.cos(k2)) + t3 * (
            2 * np.cos(k1 - k2) + np.cos(k1 + k2)
        )
        hy = t1 * (np.sin(k1) + np.sin(k2)) + t3 * np.sin(k1 + k2)
        hz = 2 * t2 * np.sin(phi) * (np.sin(k1) - np.sin(k2) - np.sin(k1 - k2))
        vecs.append(np.stack([hx, hy, hz], axis=-1))
    return vecs


def _collinear_points(spec, scan=181):
    """Momentum points where the two episode fields share the same orientation.

    Local alignment maxima on the grid are refined by minimizing
    1 - h1.h2/(|h1||h2|); a refined point is accepted when the misfit drops
    below the collinearity tolerance.  Points where either field (nearly)
    vanishes are treated as aligned.  Returns unique (|h1|, |h2|) pairs.
    """
    ks = np.linspace(-np.pi, np.pi, scan, endpoint=False)
    k1g, k2g = np.meshgrid(ks, ks, indexing="ij")
    h1, h2 = _pqghm_h_vectors(spec, k1g, k2g)
    m1 = np.linalg.norm(h1, axis=-1)
    m2 = np.linalg.norm(h2, axis=-1)
    denom = np.where(m1 * m2 > 1e-14, m1 * m2, 1.0)
    align = np.where(
        m1 * m2 > 1e-14, np.einsum("...i,...i->...", h1, h2) / denom, 1.0
    )
    # candidate = grid-local maximum of the alignment, wrapped neighborhoods
    best = align.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            best = np.maximum(best, np.roll(np.roll(align, di, 0), dj, 1))
    candidates = np.argwhere((align >= best - 1e-15) & (align > 0.99))

    def objective(k):
        v1, v2 = _pqghm_h_vectors(spec, k[0], k[1])
        a1, a2 = np.linalg.norm(v1), np.linalg.norm(v2)
        if a1 * a2 < 1e-14:
            return 0.0
        return 1.0 - float(np.dot(v1, v2)) / (a1 * a2)

    points = []
    for i, j in candidates:
        res = optimize.minimize(
            objective,
            np.array([k1g[i, j], k2g[i, j]]),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 600},
        )
        if res.fun > COLLINEAR_TOL:
            continue
        kk = wrap_phase(res.x)
        v1, v2 = _pqghm_h_vectors(spec, kk[0], kk[1])
        pair = (float(np.linalg.norm(v1)), float(np.linalg.norm(v2)))
        if not any(
            abs(pair[0] - p[0]) < 1e-8 and abs(pair[1] - p[1]) < 1e-8 for p in points
        ):
            points.append(pair)
    return points


def pqghm_gapless_times(spec, axis, t_max=None, scan=181):
    """Critical quench durations where the two-episode drive closes its gap.

    Scans the Brillouin zone for points where the episode fields are
    parallel, then solves T1 |h1| + T2 |h2| = l*pi along the requested
    duration axis ("T1" or "T2"), the other duration held at its spec value.
    Returns sorted unique critical durations in (0, t_max].
    """
    if axis not in ("T1", "T2"):
        raise ConfigError(f"axis must be 'T1' or 'T2', got {axis!r}")
    fixed = float(spec.params["T2" if axis == "T1" else "T1"])
    if t_max is None:
        t_max = 2.0
    points = _collinear_points(spec, scan=scan)
    crits = []
    for m1, m2 in points:
        m_axis, m_fixed = (m1, m2) if axis == "T1" else (m2, m1)
        if m_axis < 1e-12:
            continue
        ell = 1
        while True:
            t = (ell * np.pi - fixed * m_fixed) / m_axis
            if t > t_max + 1e-12:
                break
            if t > 1e-12:
                crits.append(t)
            ell += 1
    crits.sort()
    out = []
    for t in crits:
        if not out or t - out[-1] > 1e-9:
            out.append(t)
    return out


def band_chern_fhs(bloch_fn, n_bands=None, band=None, grid=60, window=None):
    """Fukui-Hatsugai-Suzuki Chern number of one group of quasienergy states.

    ``bloch_fn(k1, k2)`` must return the one-period Bloch unitary.  States
    are selected per momentum either by a quasienergy ``window`` (robust for
    two-band drives, whose eigenphases come in +-E pairs) or by ``band``
    membership in the arcs identified from the pooled eigenphases.  Link
    variables of the selected eigenframe are accumulated over the
    discretized Brillouin zone.
    """
    from .floquet import FillingWindow, occupied_indices

    if (window is None) == (band is None):
        raise ConfigError("pass exactly one of window= or band=")
    ks = np.linspace(-np.pi, np.pi, grid, endpoint=False)
    frames = {}
    phases = []
    for i, ka in enumerate(ks):
        for j, kb in enumerate(ks):
            dec = unitary_eig(bloch_fn(ka, kb))
            frames[i, j] = dec
            phases.append(dec.phases)
    if window is not None:
        if not isinstance(window, FillingWindow):
            window = FillingWindow(*window)
        masks = {
            key: occupied_indices(dec.phases, window)[0]
            for key, dec in frames.items()
        }
    else:
        bands = find_bands(np.concatenate(phases), n_bands)
        masks = {
            key: band_membership(dec.phases, bands, band)
            for key, dec in frames.items()
        }
    counts = {key: int(m.sum()) for key, m in masks.items()}
    expected = counts[0, 0]
    if expected == 0 or any(c != expected for c in counts.values()):
        raise ContractViolationError(
            "selected band occupancy varies across the Brillouin zone "
            "(gap closed or mislabeled band)"
        )
    flux_total = 0.0
    for i in range(grid):
        for j in range(grid):
            corners = [
                (i, j),
                ((i + 1) % grid, j),
                ((i + 1) % grid, (j + 1) % grid),
                (i, (j + 1) % grid),
            ]
            vs = [frames[key].vectors[:, masks[key]] for key in corners]
            prod = 1.0 + 0.0j
            for a in range(4):
                ov = vs[a].conj().T @ vs[(a + 1) % 4]
                prod *= np.linalg.det(ov)
            flux_total += float(np.angle(prod))
    return flux_total / (2 * np.pi)
