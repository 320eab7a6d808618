"""Reading and writing kernels, distributions and partitions.

* CSV: comma-separated rows, '.' decimal point, no header.
* Kernel JSON: ``{"n": 3, "pi": [...], "matrix": [[...], ...]}``.
* Partition JSON: list of integer lists with 1-based state indices.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .core import Distribution, Kernel, OrbitPartition, validate_kernel
from .errors import DimensionMismatch, InvalidPartition


def format_float(x: float) -> str:
    # repr is locale-independent and round-trips exactly
    return repr(float(x))


def matrix_to_csv(matrix) -> str:
    buf = io.StringIO()
    for row in np.atleast_2d(np.asarray(matrix, dtype=float)):
        buf.write(",".join(format_float(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DimensionMismatch("empty CSV matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionMismatch("ragged CSV rows")
    return np.array([[float(c) for c in r] for r in rows])


def kernel_to_json(P: Kernel) -> str:
    return json.dumps({"n": P.n, "pi": P.pi.tolist(), "matrix": P.matrix.tolist()})


def kernel_from_dict(obj: dict) -> Kernel:
    pi = Distribution(np.asarray(obj["pi"], dtype=float))
    matrix = np.asarray(obj["matrix"], dtype=float)
    if "n" in obj and (int(obj["n"]) != pi.n or matrix.shape[0] != pi.n):
        raise DimensionMismatch("'n' does not match the sizes of 'pi' and 'matrix'")
    return validate_kernel(matrix, pi)


def kernel_from_json(text: str) -> Kernel:
    return kernel_from_dict(json.loads(text))


def partition_to_json(part: OrbitPartition) -> str:
    return json.dumps([[x + 1 for x in o] for o in part.orbits])


def partition_from_obj(obj, n: int | None = None) -> OrbitPartition:
    if not isinstance(obj, list) or not all(isinstance(o, list) for o in obj):
        raise InvalidPartition("partition must be a JSON list of integer lists")
    orbits = []
    for o in obj:
        if not all(isinstance(x, int) and x >= 1 for x in o):
            raise InvalidPartition("partition entries must be positive 1-based integers")
        orbits.append([x - 1 for x in o])
    return OrbitPartition.from_orbits(orbits, n)


def partition_from_json(text: str, n: int | None = None) -> OrbitPartition:
    return partition_from_obj(json.loads(text), n)


def load_kernel(path: str | Path, pi: Distribution | None = None) -> Kernel:
    """Load a kernel from ``.json`` or from ``.csv`` (CSV needs ``pi``)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        if pi is None:
            raise ValueError("a CSV kernel needs a separate distribution")
        return validate_kernel(matrix_from_csv(text), pi)
    return kernel_from_json(text)


def load_distribution(path: str | Path) -> Distribution:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return Distribution(matrix_from_csv(text).ravel())
    obj = json.loads(text)
    return Distribution(np.asarray(obj["pi"] if isinstance(obj, dict) else obj, dtype=float))


def load_partition(path: str | Path, n: int | None = None) -> OrbitPartition:
    return partition_from_json(Path(path).read_text(encoding="utf-8"), n)
