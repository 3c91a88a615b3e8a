"""Checkpoint and feature-cache blob format.

A checkpoint is a directory holding `manifest.json` (plain key/value text:
step, schedule values, full run config, hashes, and the parameter table) plus
one binary blob per named array: little-endian float32, row-major, file name
`<name>.f32` where the name mirrors the module tree. Any language can read it.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import StateError

FORMAT_VERSION = 1


def write_blob(path: Path, arr: np.ndarray) -> None:
    np.ascontiguousarray(arr, dtype="<f4").tofile(path)


def read_blob(path: Path, shape: list[int]) -> np.ndarray:
    arr = np.fromfile(path, dtype="<f4")
    expected = int(np.prod(shape)) if shape else 1
    if arr.size != expected:
        raise StateError(f"blob {path.name} has {arr.size} values, expected {expected}")
    return arr.reshape(shape)


def weights_hash(arrays: dict[str, np.ndarray], prefixes: tuple[str, ...] = ("student.", "teacher.")) -> str:
    """Identity hash of the model weights (student+teacher blobs, name-sorted)."""
    h = hashlib.sha256()
    for name in sorted(arrays):
        if not name.startswith(prefixes):
            continue
        h.update(name.encode())
        h.update(str(list(arrays[name].shape)).encode())
        h.update(np.ascontiguousarray(arrays[name], dtype="<f4").tobytes())
    return h.hexdigest()[:16]


def save_checkpoint(directory, arrays: dict[str, np.ndarray], manifest: dict) -> Path:
    """Write manifest + blobs atomically (staged in a temp dir, then swapped in)."""
    directory = Path(directory)
    manifest = dict(manifest)
    manifest["format_version"] = FORMAT_VERSION
    manifest["weights_hash"] = weights_hash(arrays)
    manifest["params"] = {
        name: {"shape": list(arr.shape), "file": f"{name}.f32"}
        for name, arr in arrays.items()
    }
    parent = directory.parent
    parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=directory.name + ".tmp.", dir=parent))
    try:
        for name, arr in arrays.items():
            write_blob(tmp / f"{name}.f32", arr)
        with open(tmp / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        if directory.exists():
            shutil.rmtree(directory)
        os.replace(tmp, directory)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return directory


def load_manifest(directory) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise StateError(f"no manifest at {path}")
    with open(path) as fh:
        return json.load(fh)


def load_checkpoint(directory) -> tuple[dict, dict[str, np.ndarray]]:
    directory = Path(directory)
    manifest = load_manifest(directory)
    arrays = {
        name: read_blob(directory / entry["file"], entry["shape"])
        for name, entry in manifest["params"].items()
    }
    return manifest, arrays
