"""CSV and JSON writers and readers.

Floats are written with 17 significant digits so every value re-parses to
the same double.  CSV files are numeric tables with a single header row;
non-finite values appear as ``nan``/``inf``.  JSON output replaces
non-finite floats with ``null`` so that any JSON parser accepts it.
"""

from __future__ import annotations

import enum
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .integrate import Trajectory
from .manifold import ManifoldCurve
from .model import RateParameters


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _open_write(target):
    if target is None or target == "-":
        return sys.stdout, False
    if hasattr(target, "write"):
        return target, False
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n"), True


def write_table(target, header, columns) -> None:
    """Write equal-length numeric columns under ``header``."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(cols) != len(header):
        raise ParameterError("header and columns differ in length")
    if len({len(c) for c in cols}) > 1:
        raise ParameterError("columns differ in length")
    stream, close = _open_write(target)
    try:
        stream.write(",".join(header) + "\n")
        for row in zip(*cols):
            stream.write(",".join(fmt(v) for v in row) + "\n")
    finally:
        if close:
            stream.close()


def read_table(source) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`write_table`: ``(header, rows x columns array)``."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty CSV")
    header = lines[0].split(",")
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    except ValueError as exc:
        raise ParameterError(f"non-numeric CSV entry: {exc}") from None
    if any(len(r) != len(header) for r in rows):
        raise ParameterError("ragged CSV rows")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def table_text(header, columns) -> str:
    buf = io.StringIO()
    write_table(buf, header, columns)
    return buf.getvalue()


# trajectories and curves

def write_trajectory(target, traj: Trajectory) -> None:
    """Header ``t,<names>``: ``t,s,c`` for the planar system, ``t,s`` for reductions."""
    write_table(target, ("t",) + tuple(traj.names),
                [traj.times] + [traj.states[:, i] for i in range(traj.states.shape[1])])


def read_trajectory(source) -> Trajectory:
    header, data = read_table(source)
    if header[0] != "t":
        raise ParameterError("trajectory CSV must start with a t column")
    return Trajectory(data[:, 0], data[:, 1:], tuple(header[1:]))


def write_curve(target, curve: ManifoldCurve) -> None:
    write_table(target, ("s", "c", "dc_ds"), [curve.grid, curve.c_values, curve.dc_ds])


def read_curve(source) -> ManifoldCurve:
    header, data = read_table(source)
    if header != ["s", "c", "dc_ds"]:
        raise ParameterError("curve CSV header must be s,c,dc_ds")
    return ManifoldCurve(data[:, 0], data[:, 1], data[:, 2])


# JSON

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def write_json(target, obj) -> None:
    stream, close = _open_write(target)
    try:
        stream.write(json_text(obj))
    finally:
        if close:
            stream.close()


def read_json(source):
    try:
        if hasattr(source, "read"):
            return json.load(source)
        return json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed JSON: {exc}") from None


def write_params(target, p: RateParameters) -> None:
    write_json(target, p.to_dict())


def read_params(source) -> RateParameters:
    data = read_json(source)
    if not isinstance(data, dict):
        raise ParameterError("parameter file must hold a JSON object")
    return RateParameters.from_dict(data)
