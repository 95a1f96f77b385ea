"""File formats: shape JSON, spectrum JSON/CSV, run configs and manifests."""

from __future__ import annotations

import csv
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import SteklovSpectrum, multiplicity_clusters, normalized_eigenvalue
from .exceptions import ShapeError
from .geometry import FourierShape
from .nystrom import OperatorPair


def load_shape(path) -> FourierShape:
    """Read ``{"a": [...], "b": [...]}``; ``b`` may be omitted."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ShapeError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ShapeError(f"{path}: expected a JSON object")
    return FourierShape.from_dict(data)


def save_shape(shape: FourierShape, path) -> None:
    Path(path).write_text(json.dumps(shape.to_dict(), indent=2) + "\n")


def spectrum_to_dict(spectrum: SteklovSpectrum, rel_tol: float = 1e-6) -> dict:
    return {
        "lambda": spectrum.lambdas.tolist(),
        "Lambda": np.atleast_1d(normalized_eigenvalue(spectrum.shape, spectrum)).tolist(),
        "clusters": multiplicity_clusters(spectrum.lambdas, rel_tol),
        "n": spectrum.n,
    }


def write_spectrum(spectrum: SteklovSpectrum, path=None, fmt: str = "json", rel_tol: float = 1e-6) -> None:
    """Write to ``path`` (stdout if None) as JSON or CSV (``j,lambda,Lambda`` rows)."""
    d = spectrum_to_dict(spectrum, rel_tol)
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        if fmt == "json":
            json.dump(d, out, indent=2)
            out.write("\n")
        elif fmt == "csv":
            w = csv.writer(out)
            w.writerow(["j", "lambda", "Lambda"])
            for j, (lam, Lam) in enumerate(zip(d["lambda"], d["Lambda"])):
                w.writerow([j, repr(float(lam)), repr(float(Lam))])
        else:
            raise ValueError(f"unknown format {fmt!r}")
    finally:
        if path:
            out.close()


def write_operators(pair: OperatorPair, directory) -> list[str]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, mat in (("A", pair.A), ("B", pair.B)):
        p = directory / f"{name}.csv"
        np.savetxt(p, mat, delimiter=",", fmt="%.17g")
        paths.append(str(p))
    return paths


def write_rows(path, header, rows) -> None:
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if path:
            out.close()


def _coerce(value: str):
    v = value.strip()
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    if v.lower() in ("none", "null", ""):
        return None
    return v.strip("'\"")


def load_config(path) -> dict:
    """Run configuration as JSON or ``key = value`` lines (``#`` comments)."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    config = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        config[key.strip().replace("-", "_")] = _coerce(value)
    return config


def write_manifest(path, command: str, inputs: dict, parameters: dict, outputs: list, wall_time: float) -> None:
    manifest = {
        "command": command,
        "inputs": inputs,
        "parameters": parameters,
        "outputs": [str(o) for o in outputs],
        "wall_time": wall_time,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": sys.argv,
        "cwd": os.getcwd(),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, default=str) + "\n")
