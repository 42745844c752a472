"""Time stepping with per-step Picard iteration, and delta-continuation studies."""

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import (
    BLOWUP,
    CONTINUE,
    DiagnosticsSeries,
    blowup_monitor,
    directional_seminorm,
    osgood_bound,
    plateau_radius,
    seminorm_samples,
)
from .errors import ConfigError, PicardConvergenceError
from .fields import GridSpec, ScalarField, lp_norm, sobolev_norm, sobolev_norms, weighted_l2
from .green import ObstacleGeometry, check_resolution
from .kernels import KernelConfig
from .motion import RigidMotionSpec, lambda_psi2_values, motion_eval, omega_shift_to_lab
from .transport import FRAMES, advance_front, advect_step, assemble_velocity, cfl_number, impermeability_residual

INITIAL_KINDS = ("gaussian_annulus", "blob", "zero")


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class InitialDatum:
    """Parametric initial scalar, exactly zero within ``plateau_R0`` of the boundary.

    ``gaussian_annulus``: ``A exp(-(r - r_c)^2 / 2 sigma^2) (1 + eps cos(m theta))``.
    ``blob``: ``A exp(-|x - c|^2 / 2 sigma^2)`` with c = (blob_x, blob_y).
    Both are multiplied by smooth windows rising over ``window`` from ``r_min + plateau_R0``
    and falling to zero at ``r_out``.
    """

    kind: str = "gaussian_annulus"
    amplitude: float = 1.0
    r_c: float = 2.5
    sigma: float = 0.35
    mode: int = 3
    eps: float = 0.2
    blob_x: float = 2.5
    blob_y: float = 0.0
    window: float = 0.5
    r_out: float = 0.0  # 0 means r_c + 4 sigma (annulus) or |c| + 4 sigma (blob)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {self.kind!r}; choose one of {INITIAL_KINDS}", key="kind")
        if self.sigma <= 0 or self.window <= 0:
            raise ConfigError("sigma and window must be positive", key="sigma")

    def outer_radius(self):
        if self.r_out > 0:
            return self.r_out
        if self.kind == "blob":
            return float(np.hypot(self.blob_x, self.blob_y) + 4.0 * self.sigma)
        return self.r_c + 4.0 * self.sigma

    def sample(self, grid, plateau_R0):
        if self.kind == "zero":
            return np.zeros(grid.shape)
        r = grid.rr
        r_in = grid.r_min + plateau_R0
        r_out = self.outer_radius()
        win = smooth_step((r - r_in) / self.window) * smooth_step((r_out - r) / self.window)
        if self.kind == "gaussian_annulus":
            core = np.exp(-((r - self.r_c) ** 2) / (2.0 * self.sigma**2))
            core = core * (1.0 + self.eps * np.cos(self.mode * grid.tt))
        else:
            p = grid.points()
            core = np.exp(-((p[..., 0] - self.blob_x) ** 2 + (p[..., 1] - self.blob_y) ** 2) / (2.0 * self.sigma**2))
        return self.amplitude * core * win

    def as_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    kernel: KernelConfig
    motion: RigidMotionSpec = field(default_factory=RigidMotionSpec)
    geom: ObstacleGeometry = None
    dt: float = 2e-3
    t_end: float = 1.0
    picard_tol: float = 1e-8
    picard_max: int = 25
    initial: InitialDatum = field(default_factory=InitialDatum)
    plateau_R0: float = 0.5
    frame: str = "body"
    limiter: bool = True
    grad_threshold: float = 1e-6
    blowup_bound: float = 1e3
    record_every: int = 1
    radius_floor_cells: float = 2.0

    def __post_init__(self):
        if self.geom is None:
            object.__setattr__(self, "geom", ObstacleGeometry(self.grid.r_min))
        if abs(self.grid.r_min - self.geom.radius) > 1e-12 * self.geom.radius:
            raise ConfigError("grid r_min must equal the obstacle radius", key="r_min")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", key="dt")
        if not self.t_end >= 0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}", key="t_end")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("t_end must be an integer multiple of dt", key="t_end")
        if not self.picard_tol > 0 or self.picard_max < 1:
            raise ConfigError("picard_tol must be positive and picard_max >= 1", key="picard_tol")
        if not self.plateau_R0 > 0:
            raise ConfigError("plateau_R0 must be positive", key="plateau_R0")
        if self.frame not in FRAMES:
            raise ConfigError(f"frame must be one of {FRAMES}", key="frame")
        if self.frame == "lab":
            m = self.motion
            if m.translates or not m.theta.has_constant_rate:
                raise ConfigError("frame = lab requires h = 0 and a constant rotation rate", key="frame")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1", key="record_every")
        self.grid.check_outer_cutoff(self.kernel.delta)
        r_out = self.initial.outer_radius()
        if self.initial.kind != "zero" and r_out > self.grid.r_max - 2.0 * self.grid.dr:
            raise ConfigError(
                f"initial support reaches r = {r_out:g}, beyond r_max - 2 cells = "
                f"{self.grid.r_max - 2.0 * self.grid.dr:g}",
                key="r_out",
            )
        if self.initial.kind != "zero" and self.grid.r_min + self.plateau_R0 >= r_out:
            raise ConfigError("plateau_R0 leaves no room for the initial support", key="plateau_R0")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def with_delta(self, delta):
        return replace(self, kernel=replace(self.kernel, delta=delta))

    def as_dict(self):
        return {
            "grid": self.grid.as_dict(),
            "kernel": {"delta": self.kernel.delta, "cutoff_width": self.kernel.cutoff_width,
                       "blend_profile": self.kernel.blend_profile},
            "motion": self.motion.as_dict(),
            "obstacle": {"radius": self.geom.radius},
            "time": {"dt": self.dt, "t_end": self.t_end, "picard_tol": self.picard_tol,
                     "picard_max": self.picard_max, "frame": self.frame, "limiter": self.limiter},
            "initial": dict(self.initial.as_dict(), plateau_R0=self.plateau_R0),
            "diagnostics": {"grad_threshold": self.grad_threshold, "blowup_bound": self.blowup_bound,
                            "radius_floor_cells": self.radius_floor_cells},
            "output": {"record_every": self.record_every},
        }


def plateau_value(cfg, t=0.0):
    """Constant carried by the plateau and far field: 0 in the body frame, 2 theta_dot in the lab frame."""
    if cfg.frame == "lab":
        return 2.0 * motion_eval(cfg.motion, t).theta_dot
    return 0.0


def initial_field(cfg):
    body = ScalarField(cfg.grid, cfg.initial.sample(cfg.grid, cfg.plateau_R0), 0.0)
    if cfg.frame == "lab":
        # the lab scalar equals body + 2 theta_dot, rotated by theta(0)
        return omega_shift_to_lab(body, motion_eval(cfg.motion, 0.0))
    return body


@dataclass
class SimState:
    omega: ScalarField
    step: int
    t: float
    diagnostics: DiagnosticsSeries
    picard_history: list = field(default_factory=list)
    R0: float = 0.0
    N_integral: float = 0.0
    front: np.ndarray = None

    def state_hash(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.omega.values).tobytes())
        h.update(np.array([self.step, self.t, self.R0, self.N_integral, self.diagnostics.blowup_integral]).tobytes())
        if self.front is not None:
            h.update(np.ascontiguousarray(self.front).tobytes())
        return h.hexdigest()


@dataclass
class SimResult:
    cfg: SimConfig
    state: SimState
    verdict: str
    trajectory: list
    diagnostics: DiagnosticsSeries


class _StepContext:
    """Per-run caches shared across steps."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.samples = seminorm_samples(cfg.grid)
        check_resolution(cfg.grid, cfg.kernel, cfg.geom)

    def lam_values(self, snap):
        g = self.cfg.grid
        return lambda_psi2_values(snap, g.rr, g.tt, self.cfg.geom, self.cfg.kernel, r_hi=g.r_max)


def _relative_change(new, old, grid):
    num = weighted_l2(new - old, grid)
    den = weighted_l2(new, grid)
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def picard_step(state, cfg, ctx=None):
    """Advance one step: ``w_{m+1} = advect(w(t), v((w(t) + w_m)/2) at t + dt/2, dt)``.

    Returns ``(new_state_fields, info)`` where info carries the residual history, the
    final velocity and the clamp count.
    """
    ctx = ctx or _StepContext(cfg)
    dt = cfg.dt
    t_mid = (state.step + 0.5) * dt
    snap = motion_eval(cfg.motion, t_mid)
    lam = ctx.lam_values(snap)
    w0 = state.omega
    grid = cfg.grid
    front = state.front
    if front is None:
        front = np.full(grid.n_theta, grid.r_min + plateau_radius(w0, cfg.geom, cfg.grad_threshold))
    pv = plateau_value(cfg, t_mid)
    wm = w0.values
    residuals = []
    v = None
    info = None
    new = None
    for _ in range(cfg.picard_max):
        mid = ScalarField(grid, 0.5 * (w0.values + wm), t_mid)
        v = assemble_velocity(mid, snap, cfg.kernel, cfg.geom, cfg.frame, lam_values=lam)
        new, info = advect_step(
            w0, v, dt, limiter=cfg.limiter, plateau_front=front, plateau_value=pv,
            outer_value=pv, return_info=True,
        )
        res = _relative_change(new.values, wm, grid)
        residuals.append(res)
        wm = new.values
        if res <= cfg.picard_tol:
            break
    if residuals[-1] > cfg.picard_tol and residuals[-1] > 10.0 * cfg.picard_tol:
        raise PicardConvergenceError(
            f"Picard iteration stalled at step {state.step}: residual {residuals[-1]:.3e} "
            f"after {len(residuals)} iterations",
            residuals,
        )
    omega = ScalarField(grid, new.values, (state.step + 1) * dt)
    front = advance_front(front, v, dt, grid.r_min)
    return omega, {"residuals": residuals, "velocity": v, "clamps": info["clamps"], "front": front}


def _diagnostic_row(state, cfg, v, ctx, iters, residual, clamps, imperm, hk=None, R=None, N=None):
    omega = state.omega
    if hk is None:
        hk = sobolev_norms(omega, 4)
    if R is None:
        R = plateau_radius(omega, cfg.geom, cfg.grad_threshold)
    if N is None:
        N = directional_seminorm(v, cfg.geom, ctx.samples) if v is not None else 0.0
    return {
        "t": state.t,
        "R": R,
        "N": N,
        "L1": lp_norm(omega, 1),
        "L2": lp_norm(omega, 2),
        "Linf": lp_norm(omega, np.inf),
        "H1": hk[1],
        "H2": hk[2],
        "H3": hk[3],
        "H4": hk[4],
        "blowup_integral": state.diagnostics.blowup_integral,
        "osgood_bound": osgood_bound(state.R0, state.N_integral),
        "picard_iters": iters,
        "picard_residual": residual,
        "impermeability": imperm,
        "clamp_count": clamps,
        "N_integral": state.N_integral,
        "front_R": float(state.front.min() - cfg.grid.r_min) if state.front is not None else R,
    }


def initial_state(cfg, ctx=None):
    ctx = ctx or _StepContext(cfg)
    omega = initial_field(cfg)
    series = DiagnosticsSeries(blowup_bound=cfg.blowup_bound)
    state = SimState(omega, 0, 0.0, series)
    state.R0 = plateau_radius(omega, cfg.geom, cfg.grad_threshold)
    state.front = np.full(cfg.grid.n_theta, cfg.grid.r_min + state.R0)
    snap = motion_eval(cfg.motion, 0.0)
    v = assemble_velocity(omega, snap, cfg.kernel, cfg.geom, cfg.frame, lam_values=ctx.lam_values(snap))
    if cfl_number(v, cfg.dt) > 0.5:
        from .errors import CFLError

        raise CFLError(f"initial velocity violates the advection bound with dt = {cfg.dt}")
    series.append(_diagnostic_row(state, cfg, v, ctx, 0, 0.0, 0, impermeability_residual(v, cfg.geom)))
    return state


def run_simulation(cfg, state=None, keep_trajectory=True, on_record=None, on_step=None):
    """Integrate from the initial datum (or a resumed ``state``) to ``t_end``.

    Halts early with a ``BLOWUP_SUSPECTED`` verdict when the H^2 integral exceeds its
    bound or the plateau radius drops below ``radius_floor_cells`` cells.
    """
    ctx = _StepContext(cfg)
    if state is None:
        state = initial_state(cfg, ctx)
    trajectory = [(state.t, state.omega)] if keep_trajectory else []
    if on_record is not None and state.step == 0:
        on_record(state)
    verdict = state.diagnostics.verdict
    floor = cfg.radius_floor_cells * cfg.grid.dr
    while state.step < cfg.n_steps and verdict == CONTINUE:
        omega, info = picard_step(state, cfg, ctx)
        v = info["velocity"]
        N_mid = directional_seminorm(v, cfg.geom, ctx.samples)
        state.omega = omega
        state.front = info["front"]
        state.step += 1
        state.t = state.step * cfg.dt
        state.N_integral += N_mid * cfg.dt
        state.picard_history.append(info["residuals"])
        hk = sobolev_norms(omega, 4)
        _, verdict = blowup_monitor(state.diagnostics, hk[2], cfg.dt)
        R = plateau_radius(omega, cfg.geom, cfg.grad_threshold)
        if R < floor:
            verdict = BLOWUP
            state.diagnostics.verdict = BLOWUP
        if state.step % cfg.record_every == 0 or state.step == cfg.n_steps or verdict != CONTINUE:
            row = _diagnostic_row(
                state, cfg, v, ctx, len(info["residuals"]), info["residuals"][-1], info["clamps"],
                impermeability_residual(v, cfg.geom), hk=hk, R=R, N=N_mid,
            )
            state.diagnostics.append(row)
            if keep_trajectory:
                trajectory.append((state.t, omega))
            if on_record is not None:
                on_record(state)
        if on_step is not None:
            on_step(state)
    return SimResult(cfg, state, verdict, trajectory, state.diagnostics)


@dataclass
class DeltaStudy:
    deltas: list
    l2: list
    h1: list
    verdict: str
    finals: list = field(default_factory=list, repr=False)


def delta_continuation_study(cfg, deltas):
    """Run ``cfg`` for each delta and compare consecutive end states in L2 and H1."""
    deltas = [float(d) for d in deltas]
    if len(deltas) < 2:
        raise ConfigError("a delta study needs at least two values", key="deltas")
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("deltas must be non-increasing", key="deltas")
    finals = []
    for d in deltas:
        res = run_simulation(cfg.with_delta(d), keep_trajectory=False)
        finals.append(res.state.omega)
    l2, h1 = [], []
    for a, b in zip(finals, finals[1:]):
        diff = ScalarField(cfg.grid, a.values - b.values)
        l2.append(lp_norm(diff, 2))
        h1.append(sobolev_norm(diff, 1))
    dec = all(x > y for x, y in zip(l2, l2[1:])) and all(x > y for x, y in zip(h1, h1[1:]))
    verdict = "CAUCHY" if dec else "NOT_DECREASING"
    return DeltaStudy(deltas, l2, h1, verdict, finals)


def perturbation_shape(cfg):
    """Smooth plateau-preserving perturbation direction, unit L2 norm: the datum's
    radial envelope times ``cos(2 theta + 1)``."""
    base = replace(cfg.initial, eps=0.0, amplitude=1.0)
    vals = base.sample(cfg.grid, cfg.plateau_R0) * np.cos(2.0 * cfg.grid.tt + 1.0)
    if cfg.initial.kind == "zero" or not np.any(vals):
        vals = replace(base, kind="gaussian_annulus").sample(cfg.grid, cfg.plateau_R0)
        vals = vals * np.cos(2.0 * cfg.grid.tt + 1.0)
    return vals / weighted_l2(vals, cfg.grid)


def perturbed_state(cfg, eps, ctx=None):
    """Initial state with ``eps * perturbation_shape`` added (L2 distance exactly eps up to rounding)."""
    ctx = ctx or _StepContext(cfg)
    state = initial_state(cfg, ctx)
    vals = state.omega.values + eps * perturbation_shape(cfg)
    state.omega = ScalarField(cfg.grid, vals, 0.0)
    state.diagnostics = DiagnosticsSeries(blowup_bound=cfg.blowup_bound)
    snap = motion_eval(cfg.motion, 0.0)
    v = assemble_velocity(state.omega, snap, cfg.kernel, cfg.geom, cfg.frame, lam_values=ctx.lam_values(snap))
    state.diagnostics.append(_diagnostic_row(state, cfg, v, ctx, 0, 0.0, 0, impermeability_residual(v, cfg.geom)))
    return state


@dataclass
class StabilityStudy:
    eps: list
    times: np.ndarray
    distances: list
    growth: float
    envelope_ok: bool
    ratio_min: float
    ratio_max: float


def stability_study(cfg, eps_list=(1e-3, 5e-4), base=None):
    """Distances between a base run and runs from perturbed data, with one pooled growth
    constant; checks ``d(t) <= 3 eps exp(C t)`` and, for consecutive halvings of eps, the
    distance ratio."""
    from .diagnostics import fit_growth, stability_compare

    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(not e > 0 for e in eps_list):
        raise ConfigError("perturbation amplitudes must be positive", key="perturbation_eps")
    if base is None:
        base = run_simulation(cfg)
    dists, times = [], None
    for e in eps_list:
        run = run_simulation(cfg, state=perturbed_state(cfg, e))
        comp = stability_compare(base, run)
        times = comp.times
        dists.append(comp.distances)
    C = fit_growth([times] * len(eps_list), dists, eps_list)
    ok = all(np.all(d <= 3.0 * e * np.exp(C * times)) for d, e in zip(dists, eps_list))
    ratios = []
    for (ea, da), (eb, db) in zip(zip(eps_list, dists), zip(eps_list[1:], dists[1:])):
        if abs(eb / ea - 0.5) < 1e-12:
            ratios.append(db / da)
    rmin = float(min(r.min() for r in ratios)) if ratios else float("nan")
    rmax = float(max(r.max() for r in ratios)) if ratios else float("nan")
    return StabilityStudy(eps_list, times, dists, C, bool(ok), rmin, rmax)


def recompute_diagnostics(cfg, snapshots):
    """Rebuild a diagnostics series from ``(t, ScalarField)`` snapshots.

    Time integrals use the left rectangle rule between snapshot times; Picard columns,
    clamp counts and the tracked front are not recoverable and are reported as 0 or R.
    """
    ctx = _StepContext(cfg)
    snapshots = sorted(snapshots, key=lambda s: s[0])
    series = DiagnosticsSeries(blowup_bound=cfg.blowup_bound)
    state = SimState(snapshots[0][1], 0, snapshots[0][0], series)
    state.R0 = plateau_radius(snapshots[0][1], cfg.geom, cfg.grad_threshold)
    prev_t, prev_N, prev_h2 = None, 0.0, 0.0
    for t, omega in snapshots:
        if prev_t is not None:
            state.N_integral += prev_N * (t - prev_t)
            blowup_monitor(series, prev_h2, t - prev_t)
        state.omega, state.t = omega, t
        snap = motion_eval(cfg.motion, t)
        v = assemble_velocity(omega, snap, cfg.kernel, cfg.geom, cfg.frame, lam_values=ctx.lam_values(snap))
        hk = sobolev_norms(omega, 4)
        N = directional_seminorm(v, cfg.geom, ctx.samples)
        series.append(_diagnostic_row(state, cfg, v, ctx, 0, 0.0, 0, impermeability_residual(v, cfg.geom),
                                      hk=hk, N=N))
        prev_t, prev_N, prev_h2 = t, N, hk[2]
    return series
