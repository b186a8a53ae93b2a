"""On-disk format: JSON header plus raw little-endian float64 payload.

Layout of every artifact file:

    bytes 0..5    magic b"WVRM1\\n"
    bytes 6..13   uint64 little endian, length of the JSON header in bytes
    header        UTF-8 JSON object; always carries "shape" and "kind"
    payload       float64 little endian, row major, prod(shape) values

The header also records provenance (tau, n, m, config hash, parameters) so
files are self-describing; `read_array` returns (array, header).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

MAGIC = b"WVRM1\n"


class FormatError(ValueError):
    pass


def write_array(path, array: np.ndarray, header: dict | None = None):
    path = Path(path)
    array = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    head = dict(header or {})
    head["shape"] = list(array.shape)
    blob = json.dumps(head, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(blob).to_bytes(8, "little"))
        f.write(blob)
        f.write(array.tobytes())
    return path


def read_array(path):
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise FormatError(f"{path} is not a waverom artifact")
        hlen = int.from_bytes(f.read(8), "little")
        header = json.loads(f.read(hlen).decode("utf-8"))
        payload = f.read()
    shape = tuple(header["shape"])
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise FormatError(f"{path}: payload does not match the header shape")
    return data.reshape(shape).copy(), header


def write_image(path, image, extra: dict | None = None):
    head = {"kind": image.kind, "grid": image.grid.to_dict(),
            "params": image.params}
    head.update(extra or {})
    return write_array(path, image.values, head)


def read_image(path):
    from .imaging import Image
    from .medium import ImagingGrid

    values, header = read_array(path)
    return Image(grid=ImagingGrid.from_dict(header["grid"]), values=values,
                 kind=header["kind"], params=header.get("params", {}))


def write_data_tensor(path, data, extra: dict | None = None):
    head = {"kind": "data_tensor", "tau": data.tau, "n": data.n, "m": data.m}
    head.update(extra or {})
    return write_array(path, data.D, head)


def read_data_tensor(path):
    from .solver import DataTensor

    values, header = read_array(path)
    return DataTensor(D=values, tau=header["tau"], n=header["n"],
                      m=header["m"]), header


def write_block_matrix(path, M, extra: dict | None = None):
    head = {"kind": "block_matrix", "n": M.n, "m": M.m,
            "structure": M.structure}
    head.update(extra or {})
    return write_array(path, M.data, head)


def read_block_matrix(path):
    from .rom import BlockMatrix

    values, header = read_array(path)
    return BlockMatrix(data=values, n=header["n"], m=header["m"],
                       structure=header.get("structure", "general")), header


def write_basis(path, basis, extra: dict | None = None):
    head = {"kind": "snapshot_basis", "grid": basis.grid.to_dict(),
            "tau": basis.tau, "n": basis.n, "m": basis.m,
            "fields": [f"v_o[{j}][{s}]" for j in range(basis.n)
                       for s in range(basis.m)]}
    head.update(extra or {})
    write_array(Path(path).with_suffix(".factor.wrm"), basis.R.data,
                {"kind": "block_matrix", "n": basis.R.n, "m": basis.R.m,
                 "structure": basis.R.structure, **(extra or {})})
    return write_array(path, basis.V, head)


def read_basis(path):
    from .internal import SnapshotBasis
    from .medium import ImagingGrid
    from .rom import BlockMatrix

    V, header = read_array(path)
    Rdata, rhead = read_array(Path(path).with_suffix(".factor.wrm"))
    R = BlockMatrix(data=Rdata, n=rhead["n"], m=rhead["m"],
                    structure=rhead.get("structure", "block_upper"))
    return SnapshotBasis(grid=ImagingGrid.from_dict(header["grid"]), V=V,
                         R=R, tau=header["tau"], n=header["n"],
                         m=header["m"]), header


def export_image_csv(path, image):
    """Delimited export: x, z, value rows."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "z", "value"])
        for i, x in enumerate(image.grid.x):
            for j, z in enumerate(image.grid.z):
                writer.writerow([f"{x:.9g}", f"{z:.9g}",
                                 f"{image.values[i, j]:.17g}"])
    return Path(path)
