"""Reader for the pipeline's artifact format (JSON header + float64 payload).

Deliberately self-contained: this package consumes the documented on-disk
contract only and never imports the simulation code.

    bytes 0..5    magic b"WVRM1\\n"
    bytes 6..13   uint64 LE header length
    header        UTF-8 JSON with at least "shape" and "kind"
    payload       float64 LE, row major
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"WVRM1\n"


class ArtifactError(ValueError):
    pass


def read_artifact(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing input file: {path}")
    raw = path.read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise ArtifactError(f"{path} is not a pipeline artifact")
    hlen = int.from_bytes(raw[len(MAGIC):len(MAGIC) + 8], "little")
    start = len(MAGIC) + 8
    header = json.loads(raw[start:start + hlen].decode("utf-8"))
    data = np.frombuffer(raw[start + hlen:], dtype="<f8")
    shape = tuple(header["shape"])
    if data.size != int(np.prod(shape)):
        raise ArtifactError(f"{path}: payload size does not match header")
    return data.reshape(shape), header


def config_hash(header: dict) -> str:
    params = header.get("params", {})
    return str(header.get("config") or params.get("config") or "")


def image_extent(header: dict):
    """Matplotlib extent (left, right, bottom, top) with range pointing down."""
    g = header["grid"]
    return (g["x0"] - g["dx"] / 2, g["x0"] + (g["nx"] - 0.5) * g["dx"],
            g["z0"] + (g["nz"] - 0.5) * g["dz"], g["z0"] - g["dz"] / 2)


def read_manifest(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing manifest: {path}")
    return json.loads(path.read_text())
