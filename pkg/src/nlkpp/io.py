"""CSV artifacts with '#'-prefixed metadata headers."""

from __future__ import annotations

import hashlib
import io as _io
from pathlib import Path

import numpy as np

from . import __version__


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def format_rows(rows) -> str:
    arr = np.atleast_2d(np.asarray(rows, dtype=float))
    if arr.size == 0:
        return ""
    buf = _io.StringIO()
    np.savetxt(buf, arr, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_csv(path, columns, rows, meta=None) -> Path:
    """Write ``rows`` under a '#' metadata block and a ``columns`` header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# nlkpp {__version__}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(",".join(columns))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write(format_rows(rows))
    return path


def read_csv(path):
    """(meta dict, column names, data array) of a file written by :func:`write_csv`."""
    meta, header, body = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                body.append([float(v) for v in line.split(",")])
    data = np.array(body, dtype=float).reshape(-1, len(header or []))
    return meta, header, data


def body_of(path) -> str:
    """File content without the metadata lines."""
    with open(path) as fh:
        return "".join(line for line in fh if not line.startswith("#"))


def path_csv(path, coeff, meta=None):
    return write_csv(path, ["t", "a"], np.column_stack([coeff.sample_times, coeff.values]), meta)


def kernel_csv(path, y, J, meta=None):
    return write_csv(path, ["y", "J"], np.column_stack([y, J]), meta)


def snapshot_csv(path, field, meta=None):
    return write_csv(path, ["x", "u"], np.column_stack([field.x, field.values]), meta)


def diagnostics_csv(path, traj, meta=None):
    return write_csv(path, ["t", "front_pos", "mass", "min", "max"], traj.diagnostics(), meta)
