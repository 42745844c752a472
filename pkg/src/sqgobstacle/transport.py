"""Velocity assembly and semi-Lagrangian transport in the body frame.

The velocity is ``grad_perp(psi2 - phi) - grad_perp psi1``. The first term is evaluated in
closed form everywhere; the second is computed on the grid nodes by the ring operator
(exactly the midpoint-rule quadrature) and interpolated bicubically off the nodes.
"""

import numpy as np

from .errors import CFLError, ConfigError
from .fields import ScalarField, interp_values
from .green import apply_K_F_delta, check_resolution, ring_operator
from .kernels import cutoff_chi, cutoff_chi_prime
from .motion import J, lambda_psi2_values, phi_eval

FRAMES = ("body", "lab")


def analytic_velocity(p, snap, cfg, geom, frame="body"):
    """Closed-form part ``grad_perp(psi2 - phi)`` (body) or ``grad_perp psi2`` (lab, h = 0)."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    r = np.hypot(x, y)
    d = r - geom.radius
    chi = cutoff_chi(d, cfg.cutoff_width)
    dchi = cutoff_chi_prime(d, cfg.cutoff_width)
    rs = np.where(r > 0, r, 1.0)
    et_x, et_y = -y / rs, x / rs
    phi = phi_eval(snap, p)
    if frame == "body":
        hd = snap.rotation.T @ snap.h_dot  # R_{-theta} h_dot
        # J grad phi = theta_dot J y + R_{-theta} h_dot
        gx = -snap.theta_dot * y + hd[0]
        gy = snap.theta_dot * x + hd[1]
        c = chi - 1.0
    else:
        gx = -snap.theta_dot * y
        gy = snap.theta_dot * x
        c = chi
    return np.stack([c * gx + phi * dchi * et_x, c * gy + phi * dchi * et_y], axis=-1)


class VelocityField:
    """Velocity samples on the grid plus evaluation at arbitrary points.

    ``at`` combines the exact analytic part with interpolated node values of the
    quadrature part; ``point_eval`` redoes the quadrature at the requested points.
    """

    def __init__(self, grid, snap=None, cfg=None, geom=None, frame="body", psi1_polar=None,
                 density=None, function=None):
        self.grid = grid
        self.snap = snap
        self.cfg = cfg
        self.geom = geom
        self.frame = frame
        self.density = density
        self._function = function
        if psi1_polar is None and function is None:
            psi1_polar = (np.zeros(grid.shape), np.zeros(grid.shape))
        self.psi1_polar = psi1_polar
        self._nodes = None
        self._stack = None

    @classmethod
    def from_function(cls, grid, fn):
        """Synthetic field ``v(p) = fn(p)`` for (..., 2) point arrays."""
        return cls(grid, function=fn)

    @classmethod
    def zero(cls, grid):
        return cls(grid, function=lambda p: np.zeros(np.shape(p)))

    def _psi1_at(self, p):
        pr = np.hypot(p[..., 0], p[..., 1])
        pt = np.arctan2(p[..., 1], p[..., 0])
        if self._stack is None:
            self._stack = np.stack(self.psi1_polar)
        vr, vt = interp_values(self._stack, self.grid, pr, pt, replicate=True)
        c, s = np.cos(pt), np.sin(pt)
        return np.stack([vr * c - vt * s, vr * s + vt * c], axis=-1)

    def at(self, p):
        p = np.asarray(p, dtype=float)
        if self._function is not None:
            return np.asarray(self._function(p), dtype=float)
        return analytic_velocity(p, self.snap, self.cfg, self.geom, self.frame) + self._psi1_at(p)

    def point_eval(self, p):
        """Velocity at points with the quadrature part recomputed directly (no interpolation)."""
        p = np.asarray(p, dtype=float)
        if self._function is not None or self.density is None:
            return self.at(p)
        k = apply_K_F_delta(self.density, p, self.cfg, self.geom)
        return analytic_velocity(p, self.snap, self.cfg, self.geom, self.frame) - k

    @property
    def values(self):
        """Cartesian node samples, shape (n_r, n_theta, 2)."""
        if self._nodes is None:
            pts = self.grid.points()
            if self._function is not None:
                self._nodes = np.asarray(self._function(pts), dtype=float)
            else:
                ur, ut = self.psi1_polar
                c, s = self.grid.cos, self.grid.sin
                q = np.stack([ur * c - ut * s, ur * s + ut * c], axis=-1)
                self._nodes = analytic_velocity(pts, self.snap, self.cfg, self.geom, self.frame) + q
        return self._nodes

    def polar_values(self):
        v = self.values
        c, s = self.grid.cos, self.grid.sin
        return v[..., 0] * c + v[..., 1] * s, -v[..., 0] * s + v[..., 1] * c

    def max_speed(self):
        v = self.values
        return float(np.max(np.hypot(v[..., 0], v[..., 1])))


def source_density(omega, snap, cfg, geom, frame="body", lam_values=None):
    """Density fed to the regularized Green operator: omega + Lambda psi2 (less 2 theta_dot in the lab frame)."""
    grid = omega.grid
    if lam_values is None:
        lam_values = lambda_psi2_values(snap, grid.rr, grid.tt, geom, cfg, r_hi=grid.r_max)
    vals = omega.values + lam_values
    if frame == "lab":
        vals = vals - 2.0 * snap.theta_dot
    return ScalarField(grid, vals, omega.time_tag)


def assemble_velocity(omega, snap, cfg, geom, frame="body", lam_values=None):
    """``v = grad_perp psi2 - K_{F,delta}(omega + Lambda psi2) - grad_perp phi`` on the grid."""
    if frame not in FRAMES:
        raise ConfigError(f"frame must be one of {FRAMES}", key="frame")
    if frame == "lab" and (np.any(snap.h) or np.any(snap.h_dot)):
        raise ConfigError("the lab-frame comparator requires a non-translating disk", key="frame")
    grid = omega.grid
    check_resolution(grid, cfg, geom)
    density = source_density(omega, snap, cfg, geom, frame, lam_values)
    op = ring_operator(grid, cfg.delta, cfg.blend, geom.radius)
    kr, kt = op.velocity_polar(density.values)
    return VelocityField(grid, snap, cfg, geom, frame, psi1_polar=(-kr, -kt), density=density)


def impermeability_residual(v, geom, n_samples=None):
    """``max |v . n|`` on the obstacle boundary, relative to the peak node speed."""
    n = n_samples or v.grid.n_theta
    th = np.arange(n) * 2.0 * np.pi / n
    nx, ny = np.cos(th), np.sin(th)
    pts = geom.radius * np.stack([nx, ny], axis=-1)
    vb = v.at(pts)
    vmax = v.max_speed()
    if vmax == 0.0:
        return 0.0
    return float(np.max(np.abs(vb[:, 0] * nx + vb[:, 1] * ny)) / vmax)


def divergence(v):
    """Discrete polar divergence of node samples: ``(1/r) d(r v_r)/dr + (1/r) d v_theta/dtheta``."""
    from .fields import d_dr, d_dtheta

    vr, vt = v.polar_values()
    g = v.grid
    return d_dr(g.rr * vr, g) / g.rr + d_dtheta(vt, g) / g.rr


def _rk4_back(p, v, dt):
    k1 = v.at(p)
    k2 = v.at(p - 0.5 * dt * k1)
    k3 = v.at(p - 0.5 * dt * k2)
    k4 = v.at(p - dt * k3)
    return p - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def trace_characteristic(p, v, dt, radius=None, return_clamps=False):
    """Backward RK4 foot point ``x(t - dt)`` of the characteristic through ``p`` at time t.

    Foot points that land inside the disk are projected onto its boundary and counted.
    """
    p = np.asarray(p, dtype=float)
    foot = _rk4_back(p, v, dt)
    clamps = 0
    if radius is not None:
        r = np.hypot(foot[..., 0], foot[..., 1])
        inside = r < radius
        clamps = int(np.count_nonzero(inside))
        if clamps:
            scale = np.where(inside, radius / np.where(r > 0, r, 1.0), 1.0)
            foot = foot * scale[..., None]
    return (foot, clamps) if return_clamps else foot


def cfl_number(v, dt):
    return dt * v.max_speed() / v.grid.min_cell


def front_radius(front, theta):
    """Radius of a star-shaped curve sampled at uniform angles, linear in angle."""
    front = np.asarray(front, dtype=float)
    n = front.size
    ang = np.arange(n + 1) * 2.0 * np.pi / n
    return np.interp(np.mod(theta, 2.0 * np.pi), ang, np.append(front, front[0]))


def advance_front(front, v, dt, radius):
    """Move the plateau boundary with the flow for one step and resample it at uniform angles."""
    front = np.asarray(front, dtype=float)
    n = front.size
    th = np.arange(n) * 2.0 * np.pi / n
    p = front[:, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
    q = _rk4_back(p, v, -dt)
    r = np.maximum(np.hypot(q[:, 0], q[:, 1]), radius)
    a = np.mod(np.arctan2(q[:, 1], q[:, 0]), 2.0 * np.pi)
    order = np.argsort(a)
    a, r = a[order], r[order]
    return np.interp(th, np.concatenate([a - 2 * np.pi, a, a + 2 * np.pi]), np.tile(r, 3))


def advect_step(omega, v, dt, limiter=True, plateau_radius=None, plateau_value=0.0,
                outer_value=0.0, check_cfl=True, return_info=False, plateau_front=None):
    """One semi-Lagrangian step: values at the backward foot points of the nodes.

    Nodes whose foot point lies inside the plateau receive ``plateau_value`` exactly, as
    exact transport of the plateau would give. The plateau is either the annulus of width
    ``plateau_radius`` around the disk or the region inside ``plateau_front`` (radii of its
    outer boundary at uniform angles).
    """
    grid = omega.grid
    if check_cfl:
        c = cfl_number(v, dt)
        if c > 0.5:
            raise CFLError(
                f"dt * max|v| = {dt * v.max_speed():.4g} exceeds half the smallest cell "
                f"({0.5 * grid.min_cell:.4g}); reduce dt"
            )
    pts = grid.points()
    foot, clamps = trace_characteristic(pts, v, dt, radius=grid.r_min, return_clamps=True)
    fr = np.hypot(foot[..., 0], foot[..., 1])
    ft = np.arctan2(foot[..., 1], foot[..., 0])
    vals = interp_values(omega.values, grid, fr, ft, limiter=limiter, outer_value=outer_value)
    if plateau_front is not None:
        vals = np.where(fr <= front_radius(plateau_front, ft), plateau_value, vals)
    elif plateau_radius is not None:
        vals = np.where(fr <= grid.r_min + plateau_radius, plateau_value, vals)
    out = ScalarField(grid, vals, omega.time_tag + dt)
    if return_info:
        return out, {"clamps": clamps, "foot_radius": fr}
    return out
