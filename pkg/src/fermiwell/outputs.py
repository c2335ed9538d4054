"""Deterministic run outputs: CSV series, raw float64 fields, manifest.

Scalar series go to CSV with a header row. 2D fields are raw little-endian
float64 in row-major order, each with a JSON sidecar describing shape and
axes, so any plotting stack can consume them without this package.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import ConfigurationError


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal length) as CSV with full float precision."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    length = len(arrays[0])
    for name, arr in zip(names, arrays):
        if len(arr) != length:
            raise ConfigurationError(f"column {name!r} has mismatched length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in range(length):
            fh.write(",".join(_fmt(arr[row]) for arr in arrays) + "\n")


def read_csv(path):
    """Read a write_csv file back as (names, dict of float arrays)."""
    with open(path, "r", encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return names, {name: np.array([]) for name in names}
    return names, {name: data[:, k] for k, name in enumerate(names)}


def write_field(path_base, values: np.ndarray, axes: list, meta: dict | None = None) -> None:
    """Write a float64 field as <base>.f64 plus a <base>.json sidecar.

    ``axes`` is a list of (name, 1D values) pairs, one per array dimension.
    NaN entries encode masked points.
    """
    values = np.asarray(values, dtype="<f8")
    if len(axes) != values.ndim:
        raise ConfigurationError("need one named axis per array dimension")
    for k, (_, axis_values) in enumerate(axes):
        if len(axis_values) != values.shape[k]:
            raise ConfigurationError(f"axis {k} length does not match field shape")
    with open(f"{path_base}.f64", "wb") as fh:
        fh.write(values.tobytes(order="C"))
    sidecar = {
        "dtype": "<f8",
        "order": "C",
        "shape": list(values.shape),
        "axes": [
            {"name": name, "values": [float(v) for v in axis_values]}
            for name, axis_values in axes
        ],
    }
    if meta:
        sidecar["meta"] = meta
    with open(f"{path_base}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_field(path_base):
    """Read a write_field pair back as (array, sidecar dict)."""
    with open(f"{path_base}.json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    raw = np.fromfile(f"{path_base}.f64", dtype=sidecar["dtype"])
    return raw.reshape(sidecar["shape"]), sidecar


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunWriter:
    """Collects output files for one scenario and writes the manifest.

    All paths recorded in the manifest are relative to the run directory, so
    re-running an identical configuration reproduces every byte (the manifest
    carries no timestamps).
    """

    def __init__(self, output_dir):
        self.output_dir = str(output_dir)
        os.makedirs(self.output_dir, exist_ok=True)
        self.files = {}

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def register(self, logical: str, filename: str, kind: str) -> None:
        self.files[logical] = {
            "path": filename,
            "kind": kind,
            "sha256": sha256_of(self.path(filename)),
        }

    def csv(self, logical: str, filename: str, columns: dict) -> None:
        write_csv(self.path(filename), columns)
        self.register(logical, filename, "csv-series")

    def field(self, logical: str, filename_base: str, values, axes, meta=None) -> None:
        write_field(self.path(filename_base), values, axes, meta)
        self.register(f"{logical}", f"{filename_base}.f64", "field-f64")
        self.register(f"{logical}_axes", f"{filename_base}.json", "field-meta")

    def manifest(self, config: dict, config_hash: str, status: str,
                 versions: dict, notes=()) -> dict:
        document = {
            "format": "fermiwell-manifest/1",
            "status": status,
            "config": config,
            "config_hash": config_hash,
            "versions": versions,
            "files": self.files,
            "notes": list(notes),
        }
        with open(self.path("manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(document, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return document
