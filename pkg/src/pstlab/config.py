"""Scenario configuration: defaults, merging and schema validation.

Every physical constant used by the CLI lives in ``DEFAULTS``; library
modules take them as arguments.
"""

from __future__ import annotations

import copy
import json
import os
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

DEFAULT_OUT = "pstlab_out"
OUT_ENV = "PSTLAB_OUT"

DEFAULTS: dict[str, Any] = {
    "scenario": "bell",
    "design": {
        # Fabrication parameters of the 11-site array.
        "n_sites": 11,
        "d_min_um": 12.0,
        "decay_a_per_mm": 3.6,
        "decay_b_per_um": 0.19,
    },
    "model": {
        "coupling": "nn",
        "spectrum": "pst",
        "birefringence": None,
        "loss": False,
        "loss_db_per_cm": 0.8,
        "length_mm": None,
        "device_phase_deg": 0.0,
        "device_coherence": 1.0,
    },
    "source": {
        "residual_phase_deg": 0.0,
        "hwp_deg": 0.0,
        # Free parameter: photon bandwidth is not known, 90 um is a modelling choice.
        "coherence_length_um": 90.0,
        "delays_um": [0.0, 50.0, 100.0, 150.0],
        "inputs": [1, 6, 10],
        "compensate": False,
    },
    "measurement": {
        "shots": 0,
        "seed": 0,
        "dark_rate": 0.0,
        "bootstrap_resamples": 100,
    },
    "propagation": {
        "input_site": 1,
        "z_max_mm": None,
        "n_steps": 401,
        "ppm": False,
    },
    "design_file": None,
    "out": None,
}

# Pinned parameter sets: alias -> (command, overrides)
SCENARIOS: dict[str, tuple[str, dict[str, Any]]] = {
    "design": ("design", {}),
    "propagate": ("propagate", {}),
    "fig2a": ("propagate", {"model": {"coupling": "nn", "spectrum": "uniform"}, "propagation": {"input_site": 1}}),
    "fig2b": ("propagate", {"model": {"coupling": "nn", "spectrum": "pst"}, "propagation": {"input_site": 1}}),
    "transfer-table": ("transfer-table", {}),
    "qpt": ("qpt", {}),
    "bell": ("bell", {}),
    "decohere": ("decohere", {}),
    "fig4": ("decohere", {"source": {"inputs": [1], "delays_um": [0.0, 50.0, 100.0, 150.0]}}),
}


def load_schema(name: str) -> dict[str, Any]:
    text = resources.files("pstlab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: Any, schema_name: str) -> None:
    jsonschema.validate(doc, load_schema(schema_name))


def deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | os.PathLike | None) -> dict[str, Any]:
    """Validate a user config (partial is fine) and merge it over the defaults."""
    user: dict[str, Any] = {}
    if path is not None:
        user = json.loads(Path(path).read_text())
        validate(user, "config")
    cfg = deep_merge(DEFAULTS, user)
    validate(cfg, "config")
    return cfg


def resolve_out(cli_out: str | None, cfg: dict[str, Any]) -> Path:
    if cli_out:
        return Path(cli_out)
    if cfg.get("out"):
        return Path(cfg["out"])
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
