"""Run-configuration ingestion: JSON, schema-validated, unknown keys rejected.

The schema ships with the package (schema/run_config.schema.json); tolerance
defaults live here and may be overridden per run or from the command line
with dotted-path assignments.
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConfigError
from .floquet import FillingWindow
from .models import ModelSpec

TOLERANCE_DEFAULTS = {
    "eps_e": 1e-3,
    "w_min": 0.6,
    "delta": 1e-4,
    "eps_zeta": 1e-12,
    "edge_exclusion": None,
    "edge_region_fraction": 0.1,
    "chern_margin": None,
}


def load_schema() -> dict:
    text = (
        resources.files("floquent").joinpath("schema/run_config.schema.json").read_text()
    )
    return json.loads(text)


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``raw`` keeps the resolved JSON document."""

    model: ModelSpec
    frame: str = "original"
    filling: FillingWindow = field(default_factory=FillingWindow)
    a_cells: int | None = None
    partition_start: int = 0
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    band: int = 0
    n_k: int = 201
    sweep: dict | None = None
    scaling: dict | None = None
    verify: dict | None = None
    oracle: dict | None = None
    workers: int = 1
    seed: int = 0
    raw: dict = field(default_factory=dict)


def apply_override(document: dict, path: str, value: str) -> None:
    """Set a dotted-path key in the raw document; value parsed as JSON when
    possible, kept as a string otherwise."""
    keys = path.split(".")
    node = document
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {path!r} crosses a non-object node")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    node[keys[-1]] = parsed


def parse_config(document: dict) -> RunConfig:
    """Validate a raw JSON document and build the typed RunConfig."""
    try:
        jsonschema.validate(document, load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"configuration invalid: {exc.message}") from exc
    m = document["model"]
    model = ModelSpec(
        m["kind"], dict(m["params"]), tuple(m["lengths"]), tuple(m["boundaries"])
    )
    fill_doc = document.get("filling", {})
    if "band" in fill_doc:
        filling = FillingWindow(
            band=fill_doc["band"], n_bands=fill_doc.get("n_bands")
        )
    else:
        filling = FillingWindow(
            lower=fill_doc.get("lower", -np.pi), upper=fill_doc.get("upper", 0.0)
        )
    part_doc = document.get("partition", {})
    tolerances = dict(TOLERANCE_DEFAULTS)
    tolerances.update(document.get("tolerances", {}))
    return RunConfig(
        model=model,
        frame=document.get("frame", "original"),
        filling=filling,
        a_cells=part_doc.get("a_cells"),
        partition_start=part_doc.get("start", 0),
        tolerances=tolerances,
        band=document.get("band", 0),
        n_k=document.get("n_k", 201),
        sweep=document.get("sweep"),
        scaling=document.get("scaling"),
        verify=document.get("verify"),
        oracle=document.get("oracle"),
        workers=document.get("workers", 1),
        seed=document.get("seed", 0),
        raw=document,
    )


def load_config(path, overrides=()) -> RunConfig:
    """Read a JSON config file (UTF-8), apply overrides, validate."""
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        path_part, value = item.split("=", 1)
        apply_override(document, path_part, value)
    return parse_config(document)
