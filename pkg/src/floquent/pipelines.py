"""End-to-end bundles tying models, spectra, entanglement and invariants
together; used by the CLI, the sweep engine and the acceptance suite."""

import numpy as np

from . import bloch, models, topology
from .analysis import SweepResult, sweep
from .entanglement import (
    Partition,
    correlation_matrix,
    entanglement_entropy,
    entanglement_spectrum,
    manybody_oracle,
    rho_a_from_zeta,
)
from .errors import ConfigError
from .floquet import (
    DEFAULT_EPS_E,
    DEFAULT_W_MIN,
    MIN_BRANCH_OVERLAP,
    FillingWindow,
    band_membership,
    chiral_edge_band_count,
    count_edge_modes,
    find_bands,
    floquet_operator,
    occupied_indices,
    quasienergy_spectrum,
    time_frame_factors,
)
from .numerics import exp_hermitian, unitary_eig

N_DELTAS = (1e-3, 1e-4, 1e-5)


def _with_boundary(spec, boundary):
    bcs = tuple(boundary for _ in spec.boundaries)
    return models.ModelSpec(spec.kind, spec.params, spec.lengths, bcs)


def chain_entanglement(
    spec, frame="original", window=None, a_cells=None, delta=1e-4, eps_zeta=None
):
    """Entanglement report of a filled 1D chain state.

    PBC chains go through the momentum-block route; OBC chains are
    diagonalized densely.  A defaults to the first half of the chain.
    """
    window = window or FillingWindow()
    (length,) = spec.lengths
    ni = spec.n_internal
    a_cells = a_cells or length // 2
    periodic = spec.boundaries[0] == "pbc"
    part = Partition(length, a_cells, cols=1, internals=ni, periodic=periodic)
    if periodic:
        p_grid, _, proximity = bloch.chain_projector_grid(spec, frame, window)
        c = bloch.correlation_from_grid_1d(p_grid, a_cells)
    else:
        u = floquet_operator(time_frame_factors(spec, frame))
        dec = unitary_eig(u)
        mask, proximity = occupied_indices(dec.phases, window)
        occ = dec.vectors[:, mask]
        c = correlation_matrix(occ @ occ.conj().T, part)
    kwargs = {} if eps_zeta is None else {"eps_zeta": eps_zeta}
    report = entanglement_spectrum(c, part, **kwargs).with_entropy(delta)
    return report, proximity


def chain_winding(report, kind, edge_exclusion=None):
    """Open-bulk winding of a chain entanglement report, ties broken to +1."""
    part = report.partition
    q = topology.flatband_projector_q(report, tie_break=+1)
    cfg = topology.WindingConfig(
        n_cells=part.a_cells,
        internals=part.internals,
        gamma_internal=models.chiral_internal(kind),
        edge_exclusion=edge_exclusion,
    )
    return topology.open_bulk_winding(q, cfg)


def chain_edge_counts(
    spec, eps_e=DEFAULT_EPS_E, w_min=DEFAULT_W_MIN, edge_region_fraction=0.1
):
    """(n0, n_pi) of a 1D model under OBC, plus the spectrum used."""
    spec_obc = _with_boundary(spec, "obc")
    u = floquet_operator(time_frame_factors(spec_obc))
    fs = quasienergy_spectrum(
        u,
        spec.lengths[0],
        spec.n_internal,
        edge_region_fraction=edge_region_fraction,
        boundary="obc",
    )
    n0, npi = count_edge_modes(fs, eps_e=eps_e, w_min=w_min)
    return n0, npi, fs


def chiral_chain_bundle(spec, delta=1e-4, eps_e=DEFAULT_EPS_E, w_min=DEFAULT_W_MIN):
    """Full correspondence bundle of a chiral 1D model: OBC edge counts,
    frame-resolved PBC entanglement counts and windings, and the verdict."""
    if spec.kind not in ("ordkr", "pql"):
        raise ConfigError(f"correspondence bundle needs a chiral 1D model, got {spec.kind}")
    n0, npi, _ = chain_edge_counts(spec, eps_e=eps_e, w_min=w_min)
    spec_pbc = _with_boundary(spec, "pbc")
    out = {"n0": n0, "n_pi": npi}
    for tag, frame in (("1", "frame1"), ("2", "frame2")):
        report, proximity = chain_entanglement(spec_pbc, frame, delta=delta)
        w = chain_winding(report, spec.kind)
        out["N" + tag] = report.n_half
        out["S" + tag] = report.entropy
        out["W" + tag] = w.value
        out["W" + tag + "_raw"] = w.raw
        out["W" + tag + "_quantized"] = w.quantized
        out["proximity" + tag] = proximity
    verify = topology.verify_bdi if spec.kind == "ordkr" else topology.verify_cii
    out["verdict"] = verify(
        out["N1"], out["N2"], out["W1"], out["W2"], out["n0"], out["n_pi"]
    )
    return out


def signed_level_crossings(
    ks, values, vectors, weights, sides, side, level=0.5, window=0.45,
    w_min=DEFAULT_W_MIN,
):
    """Net signed crossings of a reference level by localized branches.

    Same branch-following rules as the quasienergy counter, on a linear
    (non-circular) value axis; used for correlation-spectrum flows.
    """
    total = 0
    n_k = len(ks)
    for i in range(n_k):
        j = (i + 1) % n_k
        da = values[i] - level
        db = values[j] - level
        ca = np.flatnonzero(np.abs(da) < window)
        cb = np.flatnonzero(np.abs(db) < window)
        if ca.size == 0 or cb.size == 0:
            continue
        ov = np.abs(vectors[i][:, ca].conj().T @ vectors[j][:, cb]) ** 2
        for row, ja in enumerate(ca):
            col = int(np.argmax(ov[row]))
            if ov[row, col] < MIN_BRANCH_OVERLAP:
                continue
            jb = cb[col]
            d0, d1 = da[ja], db[jb]
            up = d0 < 0 <= d1
            down = d1 < 0 <= d0
            if not (up or down):
                continue
            if abs(d0) + abs(d1) > window:
                continue
            if (weights[i][ja] + weights[j][jb]) / 2 < w_min or sides[i][ja] != side:
                continue
            total += 1 if up else -1
    return total


def es_chiral_count(ks, reports, side="left", w_min=DEFAULT_W_MIN):
    """|net| signed flow of cut-localized correlation eigenvalues through 1/2."""
    net = signed_level_crossings(
        ks,
        [r.zeta for r in reports],
        [r.modes for r in reports],
        [r.cut_weight for r in reports],
        [r.cut_side for r in reports],
        side,
        w_min=w_min,
    )
    return abs(net), net


def khm_slice_obc_spectra(spec, ks, edge_region_fraction=0.1):
    """OBC Harper-chain spectra over a momentum grid; the hopping exponential
    is reused across momenta (only the kick diagonal changes)."""
    spec_obc = models.ModelSpec(
        spec.kind, spec.params, spec.lengths, ("obc", spec.boundaries[1])
    )
    lx = spec.lengths[0]
    _, hop = models.build_khm(spec_obc, k_y=0.0)
    ehop = exp_hermitian(hop, 1.0)
    lam = models.khm_lambda(spec)
    v = float(spec.params["V"])
    x = np.arange(lx)
    spectra = []
    for k in ks:
        phase = np.exp(-1j * v * np.cos(lam * x - k))
        u = phase[:, None] * ehop
        spectra.append(
            quasienergy_spectrum(
                u, lx, 1, edge_region_fraction=edge_region_fraction, boundary="obc"
            )
        )
    return spectra


def khm_slice_reports(spec, ks, band):
    """Per-momentum entanglement reports of a filled Harper band (PBC ring)."""
    q = int(spec.params["q"])
    cells = spec.lengths[0] // q
    part = Partition(cells, cells // 2, cols=1, internals=q, periodic=True)
    window = FillingWindow(band=band, n_bands=q)
    reports = []
    for k in ks:
        p_grid, _, _ = bloch.khm_slice_projector_grid(spec, k, window)
        c = bloch.correlation_from_grid_1d(p_grid, cells // 2)
        reports.append(entanglement_spectrum(c, part))
    return reports


def khm_slice_bundle(spec, band, n_k=201, w_min=DEFAULT_W_MIN):
    """ES chiral count and OBC edge-band crossings of one Harper band."""
    q = int(spec.params["q"])
    ks = np.linspace(-np.pi, np.pi, n_k, endpoint=False)
    spectra = khm_slice_obc_spectra(spec, ks)
    n_l, n_lp = chiral_edge_band_count(ks, spectra, band, n_bands=q, w_min=w_min)
    reports = khm_slice_reports(spec, ks, band)
    n_c, net = es_chiral_count(ks, reports, w_min=w_min)
    return {"n_c": n_c, "es_net": net, "n_l": n_l, "n_l_prime": n_lp}


def khm_torus_band_report(spec, band):
    """Entanglement report of a filled Harper band on the 2D torus,
    A = half the lattice along x."""
    lx, ly = spec.lengths
    q = int(spec.params["q"])
    kick, hop = models.build_khm(spec)
    u = floquet_operator([(hop, 1.0), (kick, 1.0)])
    dec = unitary_eig(u)
    bands = find_bands(dec.phases, q)
    mask = band_membership(dec.phases, bands, band)
    occ = dec.vectors[:, mask]
    part = Partition(n_cells=lx, a_cells=lx // 2, cols=ly, internals=1)
    c = correlation_matrix(occ @ occ.conj().T, part)
    return entanglement_spectrum(c, part)


def torus_marker_field(report, transverse_cells):
    """Local-marker field of a torus entanglement report, cut axis first.

    The report's partition spans ``a_cells`` cut-axis cells of ``cols``
    transverse cells each; internal components are summed per cell.
    """
    part = report.partition
    phalf = topology.half_filling_projector(report)
    flat = np.arange(part.dim)
    cell = flat // part.internals
    along_cut = (cell // transverse_cells).astype(float)
    transverse = (cell % transverse_cells).astype(float)
    marker = topology.local_chern_marker(phalf, transverse, along_cut)
    per_cell = marker.reshape(-1, part.internals).sum(axis=1)
    return per_cell.reshape(part.a_cells, transverse_cells)


def torus_chern(report, transverse_cells, margin=None):
    """Real-space Chern number of a torus entanglement report."""
    return topology.real_space_chern(
        torus_marker_field(report, transverse_cells), margin=margin
    )


def khm_torus_bundle(spec, band):
    """EE and real-space Chern number of one filled Harper band on the torus."""
    report = khm_torus_band_report(spec, band)
    ch = torus_chern(report, spec.lengths[1])
    return {
        "S": entanglement_entropy(report.zeta),
        "Ch_raw": ch.raw,
        "Ch": ch.value,
        "Ch_quantized": ch.quantized,
    }


def pqghm_torus_report(spec, window=None):
    """Entanglement report of the filled lower band on the quenched Haldane
    torus, A = half the lattice along direction 2."""
    window = window or FillingWindow()
    l1, l2 = spec.lengths
    p_grid, _, proximity = bloch.pqghm_torus_projector_grid(spec, window)
    a2 = l2 // 2
    c = bloch.correlation_from_grid_2d(p_grid, a2)
    part = Partition(n_cells=l2, a_cells=a2, cols=l1, internals=2, periodic=True)
    return entanglement_spectrum(c, part), proximity


def pqghm_torus_bundle(spec, chern=True):
    """EE (and optionally the real-space Chern number) of the lower band."""
    report, proximity = pqghm_torus_report(spec)
    out = {"S": entanglement_entropy(report.zeta), "proximity": proximity}
    if chern:
        ch = torus_chern(report, spec.lengths[0])
        out.update({"Ch_raw": ch.raw, "Ch": ch.value, "Ch_quantized": ch.quantized})
    return out


def pqghm_slice_reports(spec, ks, window=None):
    """Per-k1 entanglement reports of the filled lower band (chain along
    direction 2, PBC), via momentum blocks over k2."""
    window = window or FillingWindow()
    l2 = spec.lengths[1]
    ep1, ep2 = models._pqghm_episode_params(spec)
    t1_dur = float(spec.params["T1"])
    t2_dur = float(spec.params["T2"])
    part = Partition(l2, l2 // 2, cols=1, internals=2, periodic=True)
    k2s = bloch.momentum_grid(l2)
    reports = []
    for k1 in ks:
        unitaries = [
            exp_hermitian(models.pqghm_bloch(*ep2, k1, k2), t2_dur)
            @ exp_hermitian(models.pqghm_bloch(*ep1, k1, k2), t1_dur)
            for k2 in k2s
        ]
        p_grid, _, _ = bloch.filled_projector_grid(unitaries, window)
        c = bloch.correlation_from_grid_1d(p_grid, l2 // 2)
        reports.append(entanglement_spectrum(c, part))
    return reports


def pqghm_slice_obc_spectra(spec, ks, edge_region_fraction=0.1):
    """OBC slice spectra of the quenched Haldane model over a k1 grid."""
    spec_obc = models.ModelSpec(
        spec.kind, spec.params, spec.lengths, (spec.boundaries[0], "obc")
    )
    l2 = spec.lengths[1]
    spectra = []
    for k1 in ks:
        u = floquet_operator(time_frame_factors(spec_obc, k=k1))
        spectra.append(
            quasienergy_spectrum(
                u, l2, 2, edge_region_fraction=edge_region_fraction, boundary="obc"
            )
        )
    return spectra


def pqghm_slice_bundle(spec, n_k=201, w_min=DEFAULT_W_MIN):
    """ES chiral count and OBC edge-band crossings of the lower band."""
    ks = np.linspace(-np.pi, np.pi, n_k, endpoint=False)
    spectra = pqghm_slice_obc_spectra(spec, ks)
    n_l, n_lp = chiral_edge_band_count(ks, spectra, 0, n_bands=2, w_min=w_min)
    reports = pqghm_slice_reports(spec, ks)
    n_c, net = es_chiral_count(ks, reports, w_min=w_min)
    return {"n_c": n_c, "es_net": net, "n_l": n_l, "n_l_prime": n_lp}


def oracle_check(spec, n_trials=20, seed=7, k=None):
    """Random fillings/partitions: correlation-matrix route against the
    Fock-space oracle.  Returns the worst deviations observed."""
    u = floquet_operator(time_frame_factors(spec, k=k))
    dec = unitary_eig(u)
    dim = dec.vectors.shape[0]
    ni = spec.n_internal if spec.kind != "khm" else 1
    n_cells = dim // ni
    rng = np.random.default_rng(seed)
    worst = {"entropy": 0.0, "rho": 0.0, "corr": 0.0}
    for _ in range(n_trials):
        n_occ = int(rng.integers(1, dim))
        occ_idx = rng.choice(dim, size=n_occ, replace=False)
        a_cells = int(rng.integers(1, n_cells))
        start = int(rng.integers(0, n_cells - a_cells + 1))
        part = Partition(n_cells, a_cells, start=start, internals=ni, periodic=True)
        occ = dec.vectors[:, np.sort(occ_idx)]
        oracle = manybody_oracle(occ, part)
        c = correlation_matrix(occ @ occ.conj().T, part)
        report = entanglement_spectrum(c, part)
        s_corr = entanglement_entropy(report.zeta)
        worst["entropy"] = max(worst["entropy"], abs(s_corr - oracle.entropy))
        zeta_raw = np.clip(np.linalg.eigvalsh(c.T), 0.0, 1.0)
        implied = rho_a_from_zeta(zeta_raw)
        worst["rho"] = max(
            worst["rho"], float(np.abs(implied - oracle.rho_a_eigenvalues).max())
        )
        worst["corr"] = max(worst["corr"], float(np.abs(c - oracle.corr_fock).max()))
    return worst


def _chain_gaps(spec, frame="original"):
    """PBC quasienergy gaps at 0 and pi from the momentum blocks."""
    (length,) = spec.lengths
    phases = []
    for k in bloch.momentum_grid(length):
        phases.append(unitary_eig(bloch.bloch_unitary(spec, k, frame)).phases)
    e = np.concatenate(phases)
    return 2 * float(np.abs(e).min()), 2 * float((np.pi - np.abs(e)).min())


def chain_sweep_point(spec, tasks, delta=1e-4, deltas=N_DELTAS):
    """One sweep record of a chiral 1D model."""
    rec = {}
    if "spectrum" in tasks:
        gap0, gappi = _chain_gaps(_with_boundary(spec, "pbc"))
        rec["gap0"], rec["gap_pi"] = gap0, gappi
    if "edge-count" in tasks:
        n0, npi, _ = chain_edge_counts(spec)
        rec["n0"], rec["n_pi"] = n0, npi
    if "entanglement" in tasks or "winding" in tasks:
        for tag, frame in (("1", "frame1"), ("2", "frame2")):
            report, proximity = chain_entanglement(
                _with_boundary(spec, "pbc"), frame, delta=delta
            )
            if "entanglement" in tasks:
                rec["S" + tag] = report.entropy
                rec["N" + tag] = report.n_half
                for d in deltas:
                    rec[f"N{tag}_delta{d:g}"] = int(
                        np.count_nonzero(np.abs(report.zeta - 0.5) <= d)
                    )
                rec["proximity" + tag] = proximity
            if "winding" in tasks:
                w = chain_winding(report, spec.kind)
                rec["W" + tag] = w.value
                rec["W" + tag + "_raw"] = w.raw
                rec["W" + tag + "_quantized"] = w.quantized
    return rec


def khm_sweep_point(spec, tasks, bands=(0, 1)):
    """One sweep record of the kicked Harper torus (band-resolved)."""
    rec = {}
    q = int(spec.params["q"])
    kick, hop = models.build_khm(spec)
    u = floquet_operator([(hop, 1.0), (kick, 1.0)])
    dec = unitary_eig(u)
    if "spectrum" in tasks:
        e = dec.phases
        rec["gap0"] = 2 * float(np.abs(e).min())
        rec["gap_pi"] = 2 * float((np.pi - np.abs(e)).min())
    arcs = find_bands(dec.phases, q)
    lx, ly = spec.lengths
    part = Partition(n_cells=lx, a_cells=lx // 2, cols=ly, internals=1)
    expected = (lx * ly) // q
    for band in bands:
        tag = str(band + 1)
        mask = band_membership(dec.phases, arcs, band)
        rec["occ" + tag] = int(mask.sum())
        rec["band_flag" + tag] = int(mask.sum()) != expected
        occ = dec.vectors[:, mask]
        c = correlation_matrix(occ @ occ.conj().T, part)
        report = entanglement_spectrum(c, part)
        if "entanglement" in tasks:
            rec["S" + tag] = entanglement_entropy(report.zeta)
        if "chern" in tasks:
            ch = torus_chern(report, ly)
            rec["Ch" + tag + "_raw"] = ch.raw
            rec["Ch" + tag] = ch.value
            rec["Ch" + tag + "_quantized"] = ch.quantized
    return rec


def pqghm_sweep_point(spec, tasks):
    """One sweep record of the quenched Haldane torus (lower band filled)."""
    rec = {}
    if "spectrum" in tasks:
        gap0, gappi = pqghm_bloch_gaps(spec)
        rec["gap0"], rec["gap_pi"] = gap0, gappi
    need_report = "entanglement" in tasks or "chern" in tasks
    if need_report:
        report, proximity = pqghm_torus_report(spec)
        rec["proximity"] = proximity
        if "entanglement" in tasks:
            rec["S"] = entanglement_entropy(report.zeta)
        if "chern" in tasks:
            ch = torus_chern(report, spec.lengths[0])
            rec["Ch_raw"] = ch.raw
            rec["Ch"] = ch.value
            rec["Ch_quantized"] = ch.quantized
    return rec


def pqghm_bloch_gaps(spec, grid=241):
    """Vectorized quasienergy gaps at 0 and pi of the two-episode drive.

    Uses the two-rotation composition cos E = cos a cos b - sin a sin b
    (h1.h2)/(|h1||h2|), which is exact for the 2x2 Bloch blocks and fully
    independent of the exponential/eigensolver route.
    """
    ks = np.linspace(-np.pi, np.pi, grid, endpoint=False)
    k1g, k2g = np.meshgrid(ks, ks, indexing="ij")
    h1, h2 = topology._pqghm_h_vectors(spec, k1g, k2g)
    m1 = np.linalg.norm(h1, axis=-1)
    m2 = np.linalg.norm(h2, axis=-1)
    denom = np.maximum(m1 * m2, 1e-300)
    align = np.einsum("...i,...i->...", h1, h2) / denom
    a = float(spec.params["T1"]) * m1
    b = float(spec.params["T2"]) * m2
    cos_e = np.clip(np.cos(a) * np.cos(b) - np.sin(a) * np.sin(b) * align, -1, 1)
    e = np.arccos(cos_e)
    return 2 * float(e.min()), 2 * float((np.pi - e).min())


def parameter_sweep(spec, axis, grid, tasks, workers=1, delta=1e-4):
    """Sweep one model parameter; dispatches the per-point record builder."""
    tasks = tuple(tasks)
    known = {"spectrum", "entanglement", "winding", "chern", "edge-count"}
    bad = set(tasks) - known
    if bad:
        raise ConfigError(f"unknown sweep tasks: {sorted(bad)}")
    if axis not in spec.params:
        raise ConfigError(f"unknown sweep axis {axis!r} for model {spec.kind}")

    if spec.kind in ("ordkr", "pql"):
        def point(value):
            return chain_sweep_point(
                spec.replace_params(**{axis: value}), tasks, delta=delta
            )
    elif spec.kind == "khm":
        def point(value):
            return khm_sweep_point(spec.replace_params(**{axis: value}), tasks)
    else:
        def point(value):
            return pqghm_sweep_point(spec.replace_params(**{axis: value}), tasks)

    return sweep(point, axis, grid, workers=workers)


def scaling_entropies(spec, lengths, frame="frame1", window=None):
    """Half-partition EE across lattice sizes for the central-charge fit."""
    out = []
    for length in lengths:
        sized = models.ModelSpec(
            spec.kind, spec.params, (int(length),), spec.boundaries
        )
        report, _ = chain_entanglement(sized, frame, window=window)
        out.append(report.entropy)
    return np.asarray(out)
