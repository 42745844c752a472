"""Snapshot, diagnostics CSV and checkpoint files.

Floats are written with 17 significant digits (or as raw float64), so every format
round-trips doubles exactly.
"""

import base64
import json
import os

import numpy as np

from .diagnostics import COLUMNS, EXTRA_COLUMNS, DiagnosticsSeries
from .errors import ConfigError
from .fields import GridSpec, ScalarField

SNAPSHOT_MAGIC = b"SQGSNAP"
SNAPSHOT_VERSION = 1
CHECKPOINT_VERSION = 1


def _fmt(x):
    return "%.17g" % x


def _grid_header(grid):
    return {"r_min": grid.r_min, "r_max": grid.r_max, "n_r": grid.n_r, "n_theta": grid.n_theta}


def save_snapshot(field, path, fmt="binary"):
    """Write a field: binary (magic line, JSON header line, row-major little-endian float64)
    or CSV (``# key=value`` header lines, one radial row per line)."""
    header = dict(_grid_header(field.grid), time_tag=field.time_tag, version=SNAPSHOT_VERSION)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(SNAPSHOT_MAGIC + b" %d\n" % SNAPSHOT_VERSION)
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("# format=sqgobstacle-snapshot\n")
            for k in sorted(header):
                v = header[k]
                fh.write(f"# {k}={_fmt(v) if isinstance(v, float) else v}\n")
            for row in field.values:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")


def load_snapshot(path):
    with open(path, "rb") as fh:
        first = fh.readline()
        if first.startswith(SNAPSHOT_MAGIC):
            header = json.loads(fh.readline())
            data = np.frombuffer(fh.read(), dtype="<f8")
        else:
            fh.seek(0)
            text = fh.read().decode("ascii")
            header, rows = {}, []
            for line in text.splitlines():
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    header[k] = v
                elif line.strip():
                    rows.append([float(x) for x in line.split(",")])
            if header.get("format") != "sqgobstacle-snapshot":
                raise ValueError(f"{path} is not a snapshot file")
            for k in ("r_min", "r_max", "time_tag"):
                header[k] = float(header[k])
            for k in ("n_r", "n_theta", "version"):
                header[k] = int(header[k])
            data = np.array(rows, dtype=float)
    if int(header["version"]) != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {header['version']}")
    grid = GridSpec(header["r_min"], header["r_max"], header["n_r"], header["n_theta"])
    return ScalarField(grid, np.asarray(data, dtype=float).reshape(grid.shape), header["time_tag"])


def write_diagnostics_csv(series, path, extras=True):
    cols = COLUMNS + (EXTRA_COLUMNS if extras else [])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in series.rows:
            fh.write(",".join(_fmt(float(row.get(c, 0.0))) for c in cols) + "\n")


def read_diagnostics_csv(path):
    with open(path, encoding="ascii") as fh:
        cols = fh.readline().strip().split(",")
        rows = [dict(zip(cols, map(float, line.split(",")))) for line in fh if line.strip()]
    return rows


def _encode(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d):
    return np.frombuffer(base64.b64decode(d["data"]), dtype="<f8").reshape(d["shape"]).copy()


def config_echo(cfg):
    """Canonical JSON form of a SimConfig, used to match checkpoints with configs."""
    return json.loads(json.dumps(cfg.as_dict(), sort_keys=True))


def save_checkpoint(state, cfg, path):
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config_echo(cfg),
        "step": state.step,
        "t": state.t,
        "R0": state.R0,
        "N_integral": state.N_integral,
        "omega": _encode(state.omega.values),
        "time_tag": state.omega.time_tag,
        "front": _encode(state.front) if state.front is not None else None,
        "picard_history": state.picard_history,
        "diagnostics": state.diagnostics.to_dict(),
        "state_hash": state.state_hash(),
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        json.dump(payload, fh, sort_keys=True)
    os.replace(tmp, path)


def load_checkpoint(path, cfg):
    """Restore a SimState saved for ``cfg``; the config echo and the state hash must match."""
    from .scheme import SimState

    with open(path, encoding="ascii") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {payload.get('version')}", key="resume")
    if payload["config"] != config_echo(cfg):
        raise ConfigError("checkpoint was written for a different configuration", key="resume")
    omega = ScalarField(cfg.grid, _decode(payload["omega"]), payload["time_tag"])
    state = SimState(
        omega=omega,
        step=payload["step"],
        t=payload["t"],
        diagnostics=DiagnosticsSeries.from_dict(payload["diagnostics"]),
        picard_history=payload["picard_history"],
        R0=payload["R0"],
        N_integral=payload["N_integral"],
        front=_decode(payload["front"]) if payload["front"] is not None else None,
    )
    if state.state_hash() != payload["state_hash"]:
        raise ConfigError("checkpoint state hash mismatch (file corrupted?)", key="resume")
    return state
