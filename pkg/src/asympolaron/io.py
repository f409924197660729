"""CSV and manifest serialization.

CSV files start with a ``# schema=<name>/<version>`` comment line followed by
a header row; floats are written with 17 significant digits so values round
trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import sys

import numpy as np

SCHEMA_VERSION = 1


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return format(f, ".17g")
    return str(v)


def write_csv(path, schema: str, columns, rows) -> str:
    """Write rows and return the sha256 of the file contents."""
    lines = [f"# schema={schema}/{SCHEMA_VERSION}", ",".join(columns)]
    ncol = len(columns)
    for r in rows:
        r = tuple(r)
        if len(r) != ncol:
            raise ValueError(f"row has {len(r)} fields, expected {ncol}")
        lines.append(",".join(format_value(v) for v in r))
    data = ("\n".join(lines) + "\n").encode()
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def read_csv(path):
    """Return ``(schema, columns, rows)`` with numeric fields parsed as float."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        schema = first[len("# schema="):]
        columns = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            out = []
            for tok in line.rstrip("\n").split(","):
                try:
                    out.append(float(tok))
                except ValueError:
                    out.append(tok)
            rows.append(out)
    return schema, columns, rows


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def environment_info() -> dict:
    import scipy

    from . import __version__
    from .kernels import BACKEND

    return {
        "package_version": __version__,
        "backend": BACKEND,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def write_json(path, obj) -> str:
    data = (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode()
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_manifest(path, command: str, config: dict, outputs: dict, wall_time: float) -> None:
    """``outputs`` maps file name (relative to the manifest) to sha256."""
    write_json(path, {
        "command": command,
        "config": config,
        "outputs": outputs,
        "environment": environment_info(),
        "wall_time_s": wall_time,
    })


def load_manifest(path) -> dict:
    with open(path) as fh:
        m = json.load(fh)
    for key in ("command", "config", "outputs"):
        if key not in m:
            raise ValueError(f"manifest missing {key!r}")
    return m


def relpath(path, start) -> str:
    return os.path.relpath(os.path.abspath(path), os.path.abspath(start))
