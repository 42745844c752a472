"""Runtime versions of the a priori quantities: plateau radius, the directional
log-Lipschitz semi-norm, the Osgood lower bound, the blow-up integral, and the
rearrangement and stability checks."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fields import gradient_magnitude, level_set_measure, weighted_l2

CONTINUE = "CONTINUE"
BLOWUP = "BLOWUP_SUSPECTED"

COLUMNS = [
    "t", "R", "N", "L1", "L2", "Linf", "H1", "H2", "H3", "H4",
    "blowup_integral", "osgood_bound", "picard_iters",
]
EXTRA_COLUMNS = ["picard_residual", "impermeability", "clamp_count", "N_integral", "front_R"]


@dataclass
class DiagnosticsSeries:
    blowup_bound: float = 1e3
    rows: list = field(default_factory=list)
    blowup_integral: float = 0.0
    verdict: str = CONTINUE

    def append(self, row):
        missing = [c for c in COLUMNS if c not in row]
        if missing:
            raise ValueError(f"diagnostics row lacks {missing}")
        self.rows.append(dict(row))

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def to_dict(self):
        return {
            "blowup_bound": self.blowup_bound,
            "blowup_integral": self.blowup_integral,
            "verdict": self.verdict,
            "rows": self.rows,
        }

    @classmethod
    def from_dict(cls, d):
        s = cls(blowup_bound=d["blowup_bound"], rows=[dict(r) for r in d["rows"]])
        s.blowup_integral = d["blowup_integral"]
        s.verdict = d["verdict"]
        return s


def plateau_radius(omega, geom=None, grad_threshold=1e-6):
    """Distance from the boundary to the first node ring where ``|grad omega|`` exceeds
    ``grad_threshold * max |grad omega|``; the full annulus width if the gradient vanishes."""
    grid = omega.grid
    g = gradient_magnitude(omega)
    gmax = float(g.max())
    if gmax == 0.0:
        return grid.r_max - grid.r_min
    rows = np.nonzero(np.any(g > grad_threshold * gmax, axis=1))[0]
    return float(grid.r[rows[0]] - grid.r_min)


def seminorm_samples(grid, n_refined=8, depth=1.0):
    """Sample points for the directional semi-norm: nodes within ``depth`` of the
    boundary plus ``n_refined`` rings halving the distance below the first node row."""
    pts = grid.points()[grid.r - grid.r_min <= depth].reshape(-1, 2)
    d0 = grid.r[0] - grid.r_min
    ring_d = d0 * 0.5 ** np.arange(1, n_refined + 1)
    th = grid.theta
    rings = [(grid.r_min + d) * np.stack([np.cos(th), np.sin(th)], axis=-1) for d in ring_d]
    return np.concatenate([pts] + rings, axis=0)


def directional_seminorm(v, geom, samples=None):
    """``max(0, sup -(x - P x).(v(x) - v(P x)) / (|x - P x|^2 (1 - log|x - P x|)))``
    with ``P`` the projection onto the disk and ``v = 0`` on its boundary."""
    if samples is None:
        samples = seminorm_samples(v.grid)
    p = np.asarray(samples, dtype=float)
    r = np.hypot(p[:, 0], p[:, 1])
    d = r - geom.radius
    keep = (d > 0) & (d <= 1.0)
    p, r, d = p[keep], r[keep], d[keep]
    vel = v.at(p)
    vr = (vel[:, 0] * p[:, 0] + vel[:, 1] * p[:, 1]) / r
    q = -vr / (d * (1.0 - np.log(d)))
    return max(0.0, float(q.max())) if q.size else 0.0


def osgood_bound(R0, N_integral):
    if R0 < 0 or N_integral < 0:
        raise ValueError("R0 and the N integral must be non-negative")
    return float(R0 * np.exp(-np.exp(N_integral)))


def blowup_monitor(series, new_h2, dt):
    """Accumulate ``new_h2 * dt`` into the running H^2 integral; return the verdict."""
    series.blowup_integral += float(new_h2) * float(dt)
    if series.verdict == CONTINUE and series.blowup_integral > series.blowup_bound:
        series.verdict = BLOWUP
    return series.blowup_integral, series.verdict


def rearrangement_check(omega_t, omega_0, thresholds):
    worst = 0.0
    for eta in thresholds:
        m0 = level_set_measure(omega_0, eta)
        if m0 == 0.0:
            continue
        mt = level_set_measure(omega_t, eta)
        worst = max(worst, abs(mt - m0) / m0)
    return worst


def default_thresholds(omega, n=10):
    """n levels spread over the range of a signed field, avoiding 0."""
    hi = float(omega.values.max())
    lo = float(omega.values.min())
    peak = hi if abs(hi) >= abs(lo) else lo
    return [peak * (k + 0.5) / n for k in range(n)]


@dataclass
class StabilityResult:
    times: np.ndarray
    distances: np.ndarray
    growth: float


def fit_growth(times, distances, eps=None):
    """Least-squares slope of ``log d`` against t; several series may be pooled
    (each normalized by its own ``eps``)."""
    if eps is None:
        times, distances, eps = [times], [distances], [1.0]
    ts, ys = [], []
    for t, d, e in zip(times, distances, eps):
        t = np.asarray(t, dtype=float)
        d = np.asarray(d, dtype=float)
        ok = d > 0
        ts.append(t[ok])
        ys.append(np.log(d[ok] / e))
    t = np.concatenate(ts)
    y = np.concatenate(ys)
    if t.size < 2 or np.ptp(t) == 0:
        return 0.0
    return float(np.polyfit(t, y, 1)[0])


def stability_compare(run_a, run_b):
    """L2 distance series between two trajectories and a fitted growth constant.

    Each run is a simulation result or a sequence of ``(t, ScalarField)`` pairs; the two
    must share grid, motion, kernel and recording times.
    """
    cfg_a, cfg_b = getattr(run_a, "cfg", None), getattr(run_b, "cfg", None)
    if cfg_a is not None and cfg_b is not None:
        for name in ("grid", "kernel", "motion", "geom", "dt", "frame"):
            if getattr(cfg_a, name) != getattr(cfg_b, name):
                raise ConfigError(f"runs differ in {name}")
    run_a = getattr(run_a, "trajectory", run_a)
    run_b = getattr(run_b, "trajectory", run_b)
    if len(run_a) != len(run_b):
        raise ConfigError("runs have different numbers of records")
    times, dist = [], []
    for (ta, fa), (tb, fb) in zip(run_a, run_b):
        if fa.grid != fb.grid:
            raise ConfigError("runs use different grids")
        if abs(ta - tb) > 1e-12 * max(1.0, abs(ta)):
            raise ConfigError("runs are recorded at different times")
        times.append(ta)
        dist.append(weighted_l2(fa.values - fb.values, fa.grid))
    times = np.array(times)
    dist = np.array(dist)
    return StabilityResult(times, dist, fit_growth(times, dist))
