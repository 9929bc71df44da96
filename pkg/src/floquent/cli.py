"""Command-line interface: config ingestion, dispatch, bit-exact emission.

Exit codes: 0 success, 2 configuration error, 3 numerical-contract
violation, 4 verifier failure (verify command only).
"""

import argparse
import os
import sys

import numpy as np

from . import io, pipelines, topology
from .analysis import fit_central_charge
from .config import load_config
from .errors import ConfigError, FloquentError, NumericsError
from .floquet import floquet_operator, quasienergy_spectrum, time_frame_factors

COMMANDS = (
    "spectrum",
    "entangle",
    "winding",
    "chern",
    "edge-count",
    "verify",
    "sweep",
    "scaling",
    "oracle-check",
)

ORACLE_TOL = 1e-10


def _slice_grid(n_k):
    return np.linspace(-np.pi, np.pi, n_k, endpoint=False)


def _chain_spectrum(cfg):
    spec = cfg.model
    u = floquet_operator(time_frame_factors(spec, cfg.frame))
    return quasienergy_spectrum(
        u,
        spec.lengths[0],
        spec.n_internal,
        edge_region_fraction=cfg.tolerances["edge_region_fraction"],
        boundary=spec.boundaries[0],
    )


def cmd_spectrum(cfg, out):
    spec = cfg.model
    rows = []
    if spec.kind in ("ordkr", "pql"):
        fs = _chain_spectrum(cfg)
        rows.extend(io.spectrum_rows(0.0, fs))
    else:
        n_cells = spec.lengths[0] if spec.kind == "khm" else spec.lengths[1]
        n_internal = 1 if spec.kind == "khm" else 2
        boundary = spec.boundaries[0] if spec.kind == "khm" else spec.boundaries[1]
        for k in _slice_grid(cfg.n_k):
            u = floquet_operator(time_frame_factors(spec, k=k))
            fs = quasienergy_spectrum(
                u,
                n_cells,
                n_internal,
                edge_region_fraction=cfg.tolerances["edge_region_fraction"],
                boundary=boundary,
            )
            rows.extend(io.spectrum_rows(k, fs))
    io.write_csv(
        os.path.join(out, "spectrum.csv"),
        ("index", "k_or_param", "E", "edge_weight", "side"),
        rows,
    )
    return {"states": len(rows)}


def _entanglement_report(cfg):
    spec = cfg.model
    if spec.kind in ("ordkr", "pql"):
        report, proximity = pipelines.chain_entanglement(
            spec,
            cfg.frame,
            window=cfg.filling,
            a_cells=cfg.a_cells,
            delta=cfg.tolerances["delta"],
            eps_zeta=cfg.tolerances["eps_zeta"],
        )
        return report, proximity
    if spec.kind == "khm":
        report = pipelines.khm_torus_band_report(spec, cfg.band)
        return report.with_entropy(cfg.tolerances["delta"]), False
    report, proximity = pipelines.pqghm_torus_report(spec, cfg.filling)
    return report.with_entropy(cfg.tolerances["delta"]), proximity


def cmd_entangle(cfg, out):
    report, proximity = _entanglement_report(cfg)
    io.write_csv(
        os.path.join(out, "entanglement.csv"),
        ("index", "zeta", "xi", "cut_weight"),
        io.entanglement_rows(report),
    )
    return {
        "entropy": report.entropy,
        "n_half": report.n_half,
        "proximity_warning": proximity,
    }


def cmd_winding(cfg, out):
    spec = cfg.model
    if spec.kind not in ("ordkr", "pql"):
        raise ConfigError("winding is defined for the chiral 1D models")
    if cfg.frame not in ("frame1", "frame2"):
        raise ConfigError("winding needs a symmetric time frame (frame1 or frame2)")
    report, proximity = pipelines.chain_entanglement(
        spec, cfg.frame, window=cfg.filling, a_cells=cfg.a_cells,
        delta=cfg.tolerances["delta"],
    )
    w = pipelines.chain_winding(
        report, spec.kind, edge_exclusion=cfg.tolerances["edge_exclusion"]
    )
    return {
        "W_raw": w.raw,
        "W": w.value,
        "quantized": w.quantized,
        "N": report.n_half,
        "S": report.entropy,
        "proximity_warning": proximity,
    }


def cmd_chern(cfg, out):
    spec = cfg.model
    if spec.kind not in ("khm", "pqghm"):
        raise ConfigError("chern is defined for the 2D models")
    if spec.kind == "khm":
        report = pipelines.khm_torus_band_report(spec, cfg.band)
        transverse = spec.lengths[1]
    else:
        report, _ = pipelines.pqghm_torus_report(spec, cfg.filling)
        transverse = spec.lengths[0]
    field = pipelines.torus_marker_field(report, transverse)
    ch = topology.real_space_chern(field, margin=cfg.tolerances["chern_margin"])
    io.write_csv(os.path.join(out, "lcm.csv"), ("x", "y", "marker"), io.marker_rows(field))
    return {"Ch_raw": ch.raw, "Ch": ch.value, "quantized": ch.quantized}


def cmd_edge_count(cfg, out):
    spec = cfg.model
    if spec.kind not in ("ordkr", "pql"):
        raise ConfigError("edge-count is defined for the 1D models")
    n0, npi, fs = pipelines.chain_edge_counts(
        spec,
        eps_e=cfg.tolerances["eps_e"],
        w_min=cfg.tolerances["w_min"],
        edge_region_fraction=cfg.tolerances["edge_region_fraction"],
    )
    io.write_csv(
        os.path.join(out, "spectrum.csv"),
        ("index", "k_or_param", "E", "edge_weight", "side"),
        io.spectrum_rows(0.0, fs),
    )
    return {"n0": n0, "n_pi": npi}


def cmd_verify(cfg, out):
    spec = cfg.model
    if spec.kind in ("ordkr", "pql"):
        bundle = pipelines.chiral_chain_bundle(
            spec,
            delta=cfg.tolerances["delta"],
            eps_e=cfg.tolerances["eps_e"],
            w_min=cfg.tolerances["w_min"],
        )
        verdict = bundle.pop("verdict")
        payload = dict(bundle)
    else:
        if not cfg.verify or "c0" not in cfg.verify:
            raise ConfigError("2D verify needs verify.c0 (the filled band's Chern number)")
        c0 = int(cfg.verify["c0"])
        if spec.kind == "khm":
            slice_bundle = pipelines.khm_slice_bundle(
                spec, cfg.band, n_k=cfg.n_k, w_min=cfg.tolerances["w_min"]
            )
            torus = pipelines.khm_torus_bundle(spec, cfg.band)
        else:
            slice_bundle = pipelines.pqghm_slice_bundle(
                spec, n_k=cfg.n_k, w_min=cfg.tolerances["w_min"]
            )
            torus = pipelines.pqghm_torus_bundle(spec)
        verdict = topology.verify_chern(
            c0,
            slice_bundle["n_c"],
            torus["Ch"],
            (slice_bundle["n_l"], slice_bundle["n_l_prime"]),
        )
        payload = {**slice_bundle, **torus, "c0": c0}
    payload["passed"] = verdict.passed
    payload["failures"] = list(verdict.failures)
    payload["relations"] = {
        k: list(v) if isinstance(v, tuple) else v for k, v in verdict.values.items()
    }
    return payload


def cmd_sweep(cfg, out):
    if not cfg.sweep:
        raise ConfigError("sweep command needs a sweep block in the config")
    block = cfg.sweep
    grid = np.linspace(
        float(block["start"]), float(block["stop"]), int(block.get("points", 121))
    )
    tasks = tuple(block.get("tasks", ("spectrum", "entanglement")))
    result = pipelines.parameter_sweep(
        cfg.model,
        block["axis"],
        grid,
        tasks,
        workers=cfg.workers,
        delta=cfg.tolerances["delta"],
    )
    header, rows = io.sweep_table(result)
    io.write_csv(os.path.join(out, "sweep.csv"), header, rows)
    flagged = [i for i, rec in enumerate(result.records) if "error" in rec]
    return {"points": len(result.records), "flagged_points": flagged}


def cmd_scaling(cfg, out):
    if not cfg.scaling:
        raise ConfigError("scaling command needs a scaling block in the config")
    if cfg.model.kind not in ("ordkr", "pql"):
        raise ConfigError("scaling is defined for the 1D models")
    lengths = cfg.scaling["lengths"]
    entropies = pipelines.scaling_entropies(
        cfg.model, lengths, frame=cfg.frame, window=cfg.filling
    )
    fit = fit_central_charge(lengths, entropies)
    io.write_csv(
        os.path.join(out, "scaling.csv"),
        ("L", "S"),
        list(zip(lengths, entropies)),
    )
    return {
        "central_charge": fit.central_charge,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
    }


def cmd_oracle_check(cfg, out):
    block = cfg.oracle or {}
    worst = pipelines.oracle_check(
        cfg.model,
        n_trials=block.get("trials", 20),
        seed=block.get("seed", 7),
        k=block.get("k"),
    )
    payload = {"max_abs_dS": worst["entropy"], "max_abs_drho": worst["rho"],
               "max_abs_dC": worst["corr"], "tolerance": ORACLE_TOL}
    if max(worst.values()) > ORACLE_TOL:
        raise NumericsError(
            f"oracle deviation exceeds {ORACLE_TOL:g}: {worst}"
        )
    return payload


HANDLERS = {
    "spectrum": cmd_spectrum,
    "entangle": cmd_entangle,
    "winding": cmd_winding,
    "chern": cmd_chern,
    "edge-count": cmd_edge_count,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="floquent",
        description="Entanglement spectra and real-space topology of driven lattices",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-path config override, e.g. tolerances.w_min=0.5",
    )
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
        if args.workers is not None:
            object.__setattr__(cfg, "workers", int(args.workers))
        results = HANDLERS[args.command](cfg, args.out)
        payload = {"command": args.command, "config": cfg.raw, "results": results}
        io.write_summary(os.path.join(args.out, "summary.json"), payload)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return 3
    except FloquentError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.command == "verify" and not results.get("passed", False):
        print("verification failed: " + "; ".join(results["failures"]), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
