"""INI run-configuration files.

Every key has a default, so an empty file describes the reference setup (stationary
disk). Unknown sections or keys are errors, reported with their line number.

Motion components use ``<name>_poly = c0, c1, ...`` for polynomial coefficients and
``<name>_sin`` / ``<name>_cos = freq:amp, freq:amp`` for trigonometric terms, with
``<name>`` one of ``h1``, ``h2``, ``theta``.
"""

import configparser
import re
from dataclasses import dataclass

from .errors import ConfigError
from .fields import GridSpec
from .green import ObstacleGeometry
from .kernels import KernelConfig
from .motion import MotionComponent, RigidMotionSpec
from .scheme import InitialDatum, SimConfig

# section -> key -> (type, default)
DEFAULTS = {
    "grid": {
        "r_max": (float, 6.0),
        "n_r": (int, 128),
        "n_theta": (int, 256),
    },
    "kernel": {
        "delta": (float, 0.1),
        "cutoff_width": (float, 0.5),
        "blend_profile": (str, "quintic"),
        "deltas": ("floats", ()),
    },
    "motion": {
        f"{c}_{kind}": ("poly" if kind == "poly" else "modes", ())
        for c in ("h1", "h2", "theta")
        for kind in ("poly", "sin", "cos")
    },
    "obstacle": {
        "radius": (float, 1.0),
    },
    "time": {
        "dt": (float, 2e-3),
        "t_end": (float, 1.0),
        "picard_tol": (float, 1e-8),
        "picard_max": (int, 25),
        "frame": (str, "body"),
        "limiter": (bool, True),
    },
    "initial": {
        "kind": (str, "gaussian_annulus"),
        "amplitude": (float, 0.25),
        "r_c": (float, 2.5),
        "sigma": (float, 0.35),
        "mode": (int, 3),
        "eps": (float, 0.2),
        "blob_x": (float, 2.5),
        "blob_y": (float, 0.0),
        "window": (float, 0.5),
        "r_out": (float, 0.0),
        "plateau_R0": (float, 0.5),
        "perturbation_eps": ("floats", (1e-3, 5e-4)),
    },
    "diagnostics": {
        "grad_threshold": (float, 1e-6),
        "blowup_bound": (float, 1e3),
        "radius_floor_cells": (float, 2.0),
    },
    "output": {
        "dir": (str, "out"),
        "record_every": (int, 1),
        "snapshot_every": (int, 0),
        "snapshot_format": (str, "binary"),
    },
}

_POSITIVE = {
    ("grid", "r_max"), ("kernel", "delta"), ("kernel", "cutoff_width"), ("obstacle", "radius"),
    ("initial", "sigma"), ("initial", "window"), ("initial", "plateau_R0"),
}


@dataclass
class RunConfig:
    """A parsed file: the simulation config plus study and output settings."""

    sim: SimConfig
    deltas: tuple
    perturbation_eps: tuple
    out_dir: str
    snapshot_every: int
    snapshot_format: str
    path: str = None


def _line_index(text):
    """(section, key) -> line number, and section -> header line number."""
    where, sec_line = {}, {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            sec_line[section] = n
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = n
    return where, sec_line


def _convert(kind, raw, line, key):
    raw = raw.strip()
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is str:
            return raw
        items = [x.strip() for x in raw.split(",") if x.strip()]
        if kind in ("floats", "poly"):
            return tuple(float(x) for x in items)
        if kind == "modes":
            out = []
            for x in items:
                f, a = x.split(":")
                out.append((float(f), float(a)))
            return tuple(out)
    except ValueError:
        expected = {float: "a number", int: "an integer", bool: "a boolean", "floats": "a list of numbers",
                    "poly": "a list of coefficients", "modes": "a list of freq:amp pairs"}[kind]
        raise ConfigError(f"cannot read {raw!r} as {expected}", line=line, key=key) from None
    raise AssertionError(kind)


def parse_config_text(text, path=None):
    parser = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.DuplicateOptionError as e:
        raise ConfigError("duplicate key", line=e.lineno, key=e.option) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError("duplicate section", line=e.lineno, key=e.section) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any [section]", line=e.lineno) from None
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("cannot parse line", line=line) from None
    where, sec_line = _line_index(text)

    values = {}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section [{section}]", line=sec_line.get(section))
        for key, raw in parser.items(section):
            line = where.get((section, key))
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key in [{section}]", line=line, key=key)
            kind = DEFAULTS[section][key][0]
            val = _convert(kind, raw, line, key)
            if (section, key) in _POSITIVE and not val > 0:
                raise ConfigError(f"must be positive, got {val}", line=line, key=key)
            values[(section, key)] = val

    def get(section, key):
        return values.get((section, key), DEFAULTS[section][key][1])

    def located(key, section=None):
        if section is None:
            for (s, k), n in where.items():
                if k == key:
                    return n
            return None
        return where.get((section, key))

    try:
        return _build(get, path)
    except ConfigError as e:
        if e.line is None and e.key is not None:
            raise ConfigError(e.reason, line=located(e.key), key=e.key) from None
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _build(get, path):
    radius = get("obstacle", "radius")
    delta = get("kernel", "delta")
    deltas = get("kernel", "deltas")
    r_max = get("grid", "r_max")
    for d in (delta,) + tuple(deltas):
        if not d > 0:
            raise ConfigError(f"delta values must be positive, got {d}", key="delta")
        if r_max > 2.0 / d:
            raise ConfigError(
                f"r_max = {r_max:g} exceeds 2/delta = {2.0 / d:g}; the outer cutoff of the "
                "regularized kernel would cut into the grid",
                key="r_max",
            )
    grid = GridSpec(radius, r_max, get("grid", "n_r"), get("grid", "n_theta"))
    try:
        kernel = KernelConfig(delta, get("kernel", "cutoff_width"), get("kernel", "blend_profile"))
    except ValueError as e:
        raise ConfigError(str(e), key="blend_profile") from None

    def component(name):
        try:
            return MotionComponent(get("motion", f"{name}_poly"), get("motion", f"{name}_sin"),
                                   get("motion", f"{name}_cos"))
        except ValueError as e:
            raise ConfigError(str(e), key=f"{name}_poly") from None

    motion = RigidMotionSpec(component("h1"), component("h2"), component("theta"))
    initial = InitialDatum(
        kind=get("initial", "kind"), amplitude=get("initial", "amplitude"), r_c=get("initial", "r_c"),
        sigma=get("initial", "sigma"), mode=get("initial", "mode"), eps=get("initial", "eps"),
        blob_x=get("initial", "blob_x"), blob_y=get("initial", "blob_y"), window=get("initial", "window"),
        r_out=get("initial", "r_out"),
    )
    sim = SimConfig(
        grid=grid, kernel=kernel, motion=motion, geom=ObstacleGeometry(radius),
        dt=get("time", "dt"), t_end=get("time", "t_end"), picard_tol=get("time", "picard_tol"),
        picard_max=get("time", "picard_max"), initial=initial, plateau_R0=get("initial", "plateau_R0"),
        frame=get("time", "frame"), limiter=get("time", "limiter"),
        grad_threshold=get("diagnostics", "grad_threshold"), blowup_bound=get("diagnostics", "blowup_bound"),
        record_every=get("output", "record_every"), radius_floor_cells=get("diagnostics", "radius_floor_cells"),
    )
    fmt = get("output", "snapshot_format")
    if fmt not in ("binary", "csv"):
        raise ConfigError("snapshot_format must be binary or csv", key="snapshot_format")
    every = get("output", "snapshot_every")
    if every < 0:
        raise ConfigError("snapshot_every must be >= 0", key="snapshot_every")
    eps = get("initial", "perturbation_eps")
    if any(not e > 0 for e in eps):
        raise ConfigError("perturbation amplitudes must be positive", key="perturbation_eps")
    return RunConfig(sim, tuple(deltas), tuple(eps), get("output", "dir"), every, fmt, path)


def parse_config(path):
    """Read and validate a run configuration file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, str(path))
