"""File formats: path CSVs, trajectory CSV and JSON summaries.

Floats are written with 9 significant digits so identical inputs give
byte-identical files.  Every writer goes through :func:`atomic_write`.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .spline import InitialTrajectory, WaypointPath
from .trajectory import TimedTrajectory

TRAJECTORY_HEADER = ("t", "x", "y", "theta", "v", "omega", "a", "v_r", "v_l")
SAMPLE_HEADER = ("x", "y", "theta", "kappa")


def fmt(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x + 0.0:.9g}"


def round_floats(obj):
    """Recursively round floats to 9 significant digits; non-finite become None."""
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2) + "\n"


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path, text: str):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, path=None):
    """Write to ``path`` atomically, or to stdout when ``path`` is None or '-'."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _rows(text: str, source: str):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append((lineno, [float(f) for f in line.split(",")]))
        except ValueError:
            raise InputError(f"{source}:{lineno}: cannot parse {line!r} as numbers") from None
    return rows


def _read_text(path) -> tuple[str, str]:
    if str(path) == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        return Path(path).read_text(), str(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def parse_path(text: str, source="<input>"):
    """Parse a path CSV.

    Two columns are waypoints ``x,y``.  Four or more columns are samples
    ``x,y,theta,kappa`` with an optional fifth parameter column.

    Returns:
        A :class:`WaypointPath` or an :class:`InitialTrajectory`.
    """
    rows = _rows(text, source)
    if not rows:
        raise InputError(f"{source}: no data rows")
    width = len(rows[0][1])
    for lineno, r in rows:
        if len(r) != width:
            raise InputError(f"{source}:{lineno}: expected {width} columns, found {len(r)}")
    data = np.array([r for _, r in rows])
    if width == 2:
        return WaypointPath(data)
    if width >= 4:
        param = data[:, 4] if width >= 5 else None
        return InitialTrajectory(data[:, 0], data[:, 1], data[:, 2], data[:, 3], param=param)
    raise InputError(f"{source}: {width} columns; use 2 (x,y) or at least 4 (x,y,theta,kappa)")


def read_path(path):
    text, source = _read_text(path)
    return parse_path(text, source)


def format_samples(traj: InitialTrajectory) -> str:
    cols = [traj.x, traj.y, traj.theta, traj.kappa]
    header = ",".join(SAMPLE_HEADER)
    if traj.param is not None:
        cols.append(np.asarray(traj.param))
        header += ",u"
    lines = [f"# {header}"]
    lines += [",".join(fmt(c) for c in row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def format_trajectory(tt: TimedTrajectory) -> str:
    lines = [",".join(TRAJECTORY_HEADER)]
    m = tt.n - 1
    for k in range(tt.n):
        seg = (tt.omega[k], tt.a[k], tt.v_r[k], tt.v_l[k]) if k < m else (0.0, 0.0, 0.0, 0.0)
        vals = (tt.t[k], tt.x[k], tt.y[k], tt.theta[k], tt.v[k]) + seg
        lines.append(",".join(fmt(x) for x in vals))
    return "\n".join(lines) + "\n"


def parse_trajectory(text: str, source="<input>") -> TimedTrajectory:
    lines = text.splitlines()
    head = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if head is None or tuple(f.strip() for f in lines[head].split(",")) != TRAJECTORY_HEADER:
        raise InputError(f"{source}: expected header {','.join(TRAJECTORY_HEADER)}")
    # blank the header so line numbers in messages match the file
    body = _rows("\n".join([""] * (head + 1) + lines[head + 1 :]), source)
    for lineno, r in body:
        if len(r) != len(TRAJECTORY_HEADER):
            raise InputError(f"{source}:{lineno}: {len(r)} fields, expected {len(TRAJECTORY_HEADER)}")
    if len(body) < 2:
        raise InputError(f"{source}: a trajectory needs at least 2 rows")
    d = np.array([r for _, r in body])
    if not np.all(np.isfinite(d)):
        raise InputError(f"{source}: non-finite values")
    t = d[:, 0]
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise InputError(f"{source}: time must start at 0 and increase strictly")
    seg = d[:-1]
    return TimedTrajectory(
        t=t, x=d[:, 1], y=d[:, 2], theta=d[:, 3], v=d[:, 4],
        omega=seg[:, 5], a=seg[:, 6], v_r=seg[:, 7], v_l=seg[:, 8], dt=np.diff(t),
    )


def read_trajectory(path) -> TimedTrajectory:
    text, source = _read_text(path)
    return parse_trajectory(text, source)
