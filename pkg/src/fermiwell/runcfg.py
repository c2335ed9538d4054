"""Run configuration: YAML parsing, overrides, validation.

The configuration file is a nested key/value document whose physics defaults
mirror the production setup: omega=0.1, barrier 2x1, box (-40, 40) with 400
points, quench 0.1 -> 4.0.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigurationError
from .grid import TrapParams
from .solvers import PropagationConfig

_SOLVERS = ("ci", "hf", "both")

_DEFAULTS = {
    "trap": {"omega": 0.1, "barrier_height": 2.0, "barrier_width": 1.0, "mass": 1.0},
    "grid": {"n_points": 400, "x_min": -40.0, "x_max": 40.0},
    "basis_m": 12,
    "n_a": 3,
    "n_b": 1,
    "g_initial": 0.1,
    "g_final": 4.0,
    "solver": "both",
    "seed_asymmetry": 1e-3,
    "propagation": {
        "dt": 0.01,
        "t_final": 100.0,
        "krylov_dim": 12,
        "tol": 1e-9,
        "record_stride": 0.25,
    },
    "snapshot_times": [8.0, 24.0, 56.0, 76.0],
    "shot": None,
    "output_dir": "runs/out",
    "rng_seed": 12345,
}

_SHOT_DEFAULTS = {
    "psf_width": 1.0,
    "species_order": "a_then_b",
    "rng_seed": 7,
    "n_shots": 500,
    "times": [25.0],
}


@dataclass
class RunConfig:
    """Validated scenario configuration."""

    raw: dict
    trap: TrapParams
    n_points: int
    x_min: float
    x_max: float
    basis_m: int
    n_a: int
    n_b: int
    g_initial: float
    g_final: float
    solver: str
    seed_asymmetry: float
    propagation: PropagationConfig
    snapshot_times: list
    shot: dict | None
    output_dir: str
    rng_seed: int
    relabeled: bool = False

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _merge(base: dict, extra: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigurationError(f"unknown configuration key {here!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply repeatable ``--set dotted.key=value`` pairs; values parse as YAML."""
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        dotted, text = item.split("=", 1)
        value = yaml.safe_load(text)
        node = out
        parts = dotted.strip().split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                if part == "shot" and node.get("shot") is None:
                    node["shot"] = copy.deepcopy(_SHOT_DEFAULTS)
                else:
                    raise ConfigurationError(f"unknown configuration section {part!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ConfigurationError(f"unknown configuration key {dotted!r}")
        node[leaf] = value
    return out


def build_config(raw: dict) -> RunConfig:
    merged = _merge(_DEFAULTS, raw or {})
    shot = merged.get("shot")
    if shot is not None:
        shot = _merge(_SHOT_DEFAULTS, shot)
        merged["shot"] = shot

    solver = str(merged["solver"]).lower()
    if solver not in _SOLVERS:
        raise ConfigurationError(f"solver must be one of {_SOLVERS}, got {solver!r}")
    for g_key in ("g_initial", "g_final"):
        if not np.isfinite(merged[g_key]):
            raise ConfigurationError(f"{g_key} must be finite")

    n_a, n_b = int(merged["n_a"]), int(merged["n_b"])
    if min(n_a, n_b) < 0 or max(n_a, n_b) < 1:
        raise ConfigurationError(f"invalid particle numbers ({n_a}, {n_b})")
    relabeled = False
    if n_a < n_b:
        # Convention: species A holds the majority; relabel and record it.
        n_a, n_b = n_b, n_a
        relabeled = True

    trap = TrapParams(**merged["trap"])
    prop = PropagationConfig(**merged["propagation"])
    snapshot_times = [float(t) for t in merged["snapshot_times"]]
    for t in snapshot_times:
        if not 0.0 <= t <= prop.t_final + 1e-9:
            raise ConfigurationError(
                f"snapshot time {t} outside [0, t_final={prop.t_final}]"
            )
    if shot is not None:
        for t in shot["times"]:
            if not 0.0 <= float(t) <= prop.t_final + 1e-9:
                raise ConfigurationError(
                    f"shot time {t} outside [0, t_final={prop.t_final}]"
                )
        if solver == "hf":
            raise ConfigurationError("single-shot sampling requires the CI solver")

    grid_cfg = merged["grid"]
    basis_m = int(merged["basis_m"])
    if basis_m < max(n_a, n_b):
        raise ConfigurationError(
            f"basis_m={basis_m} cannot hold {max(n_a, n_b)} fermions"
        )
    return RunConfig(
        raw=merged,
        trap=trap,
        n_points=int(grid_cfg["n_points"]),
        x_min=float(grid_cfg["x_min"]),
        x_max=float(grid_cfg["x_max"]),
        basis_m=basis_m,
        n_a=n_a,
        n_b=n_b,
        g_initial=float(merged["g_initial"]),
        g_final=float(merged["g_final"]),
        solver=solver,
        seed_asymmetry=float(merged["seed_asymmetry"]),
        propagation=prop,
        snapshot_times=snapshot_times,
        shot=shot,
        output_dir=str(merged["output_dir"]),
        rng_seed=int(merged["rng_seed"]),
        relabeled=relabeled,
    )


def load_config(path=None, overrides=()) -> RunConfig:
    raw = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        raw = loaded
    merged = _merge(_DEFAULTS, raw)
    if raw.get("shot") is not None:
        merged["shot"] = _merge(_SHOT_DEFAULTS, raw["shot"])
    if overrides:
        merged = apply_overrides(merged, overrides)
    return build_config(merged)
