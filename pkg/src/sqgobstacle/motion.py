"""Prescribed rigid motion, frame maps, and the corrective stream functions.

Body-frame quantities, with ``J`` the counter-clockwise quarter turn:

    phi(y)  = theta_dot |y|^2 / 2 - (R_theta y + h) . J h_dot
    psi2(y) = chi(|y| - R) phi(y)

``Lambda psi2`` splits into three radial profiles (see :class:`LambdaProfiles`).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .fields import ScalarField, interp_values
from .kernels import cutoff_chi, cutoff_chi_prime

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class MotionComponent:
    """``sum_k poly[k] t^k + sum amp sin(freq t) + sum amp cos(freq t)``."""

    poly: tuple = ()
    sin: tuple = ()
    cos: tuple = ()

    def __post_init__(self):
        if len(self.poly) > 5:
            raise ValueError("polynomial motion terms are limited to degree 4")
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        object.__setattr__(self, "sin", tuple((float(f), float(a)) for f, a in self.sin))
        object.__setattr__(self, "cos", tuple((float(f), float(a)) for f, a in self.cos))

    def value(self, t):
        v = sum(c * t**k for k, c in enumerate(self.poly))
        v += sum(a * np.sin(f * t) for f, a in self.sin)
        v += sum(a * np.cos(f * t) for f, a in self.cos)
        return float(v)

    def deriv(self, t):
        v = sum(k * c * t ** (k - 1) for k, c in enumerate(self.poly) if k > 0)
        v += sum(a * f * np.cos(f * t) for f, a in self.sin)
        v -= sum(a * f * np.sin(f * t) for f, a in self.cos)
        return float(v)

    @property
    def is_zero(self):
        return (
            all(c == 0.0 for c in self.poly)
            and all(a == 0.0 or f == 0.0 for f, a in self.sin)
            and all(a == 0.0 for f, a in self.cos)
        )

    @property
    def has_constant_rate(self):
        trig = [a for f, a in self.sin + self.cos if a != 0.0 and f != 0.0]
        return not trig and all(c == 0.0 for c in self.poly[2:])

    def as_dict(self):
        return {"poly": list(self.poly), "sin": [list(m) for m in self.sin], "cos": [list(m) for m in self.cos]}


@dataclass(frozen=True)
class RigidMotionSpec:
    h1: MotionComponent = field(default_factory=MotionComponent)
    h2: MotionComponent = field(default_factory=MotionComponent)
    theta: MotionComponent = field(default_factory=MotionComponent)

    @property
    def translates(self):
        return not (self.h1.is_zero and self.h2.is_zero)

    def as_dict(self):
        return {"h1": self.h1.as_dict(), "h2": self.h2.as_dict(), "theta": self.theta.as_dict()}


@dataclass(frozen=True)
class FrameSnapshot:
    t: float
    h: np.ndarray
    h_dot: np.ndarray
    theta: float
    theta_dot: float
    rotation: np.ndarray


def motion_eval(spec, t):
    if t < 0:
        raise ValueError("motion is defined for t >= 0")
    th = spec.theta.value(t)
    return FrameSnapshot(
        t=float(t),
        h=np.array([spec.h1.value(t), spec.h2.value(t)]),
        h_dot=np.array([spec.h1.deriv(t), spec.h2.deriv(t)]),
        theta=th,
        theta_dot=spec.theta.deriv(t),
        rotation=rotation(th),
    )


def to_body(x_lab, snap):
    # R_theta^T (x - h), written row-wise for (..., 2) arrays
    return (np.asarray(x_lab, dtype=float) - snap.h) @ snap.rotation


def to_lab(y_body, snap):
    return np.asarray(y_body, dtype=float) @ snap.rotation.T + snap.h


def _motion_vectors(snap):
    h_perp = J @ snap.h_dot
    b = snap.rotation.T @ h_perp  # R_{-theta} J h_dot
    c0 = float(snap.h @ h_perp)
    return b, c0


def phi_eval(snap, y):
    y = np.asarray(y, dtype=float)
    b, c0 = _motion_vectors(snap)
    return 0.5 * snap.theta_dot * np.sum(y * y, axis=-1) - y @ b - c0


def grad_phi(snap, y):
    b, _ = _motion_vectors(snap)
    return snap.theta_dot * np.asarray(y, dtype=float) - b


def psi2_eval(snap, y, geom, cfg):
    y = np.asarray(y, dtype=float)
    d = np.hypot(y[..., 0], y[..., 1]) - geom.radius
    return cutoff_chi(d, cfg.cutoff_width) * phi_eval(snap, y)


def grad_psi2(snap, y, geom, cfg):
    y = np.asarray(y, dtype=float)
    r = np.hypot(y[..., 0], y[..., 1])
    d = r - geom.radius
    chi = cutoff_chi(d, cfg.cutoff_width)[..., None]
    dchi = cutoff_chi_prime(d, cfg.cutoff_width)[..., None]
    er = y / np.where(r > 0, r, 1.0)[..., None]
    return chi * grad_phi(snap, y) + dchi * phi_eval(snap, y)[..., None] * er


# -- Lambda psi2 -----------------------------------------------------------


def _singular_integral(F, r, support, n_alpha=192, panel=None):
    """``(-Delta)^{1/2} F`` at ``(r, 0)`` for F vanishing outside ``|p| <= support``.

    Symmetric-difference form ``(1/2pi) int (2F(x) - F(x+z) - F(x-z)) / (2|z|^3) dz``;
    composite Gauss-Legendre in |z| up to L = r + support, trapezoid in angle, and the
    exact tail ``F(x) / L``.
    """
    L = r + support
    # beyond the support F(x) = 0 and only |z| in [r - support, L] contributes
    lo = r - support if r > support else 0.0
    panel = panel or support / 48.0
    n_panels = int(np.ceil((L - lo) / panel))
    gx, gw = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(lo, L, n_panels + 1)
    half = 0.5 * np.diff(edges)
    rho = ((edges[:-1] + edges[1:]) * 0.5)[:, None] + half[:, None] * gx[None, :]
    wr = (half[:, None] * gw[None, :]).ravel()
    rho = rho.ravel()
    alpha = (np.arange(n_alpha) + 0.5) * np.pi / n_alpha
    ca, sa = np.cos(alpha), np.sin(alpha)
    x = np.array([r, 0.0])
    fx = float(F(x[None, :])[0])
    zx = rho[:, None] * ca[None, :]
    zy = rho[:, None] * sa[None, :]
    plus = F(np.stack([r + zx, zy], axis=-1))
    minus = F(np.stack([r - zx, -zy], axis=-1))
    inner = np.sum(2.0 * fx - plus - minus, axis=1) * (np.pi / n_alpha)
    return float(np.sum(wr * inner / rho**2) / (2.0 * np.pi) + fx / L)


class LambdaProfiles:
    """Radial profiles with ``Lambda psi2 = theta_dot Lq(r) - (b . e_r) L1(r) - c0 L0(r)``.

    ``Lq = Lambda[chi |y|^2/2]``, ``L1 cos = Lambda[chi y_1]``, ``L0 = Lambda[chi]`` where
    ``chi = chi(|y| - R)``. Each is tabulated once by singular-integral quadrature and
    spline-interpolated.
    """

    def __init__(self, radius, width, r_hi, n_alpha=192):
        self.radius = float(radius)
        self.width = float(width)
        R, a = self.radius, self.width
        support = R + a

        def chi(p):
            return cutoff_chi(np.hypot(p[..., 0], p[..., 1]) - R, a)

        funcs = (
            lambda p: chi(p) * 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2),
            lambda p: chi(p) * p[..., 0],
            chi,
        )
        near = np.linspace(R, support + 0.25 * a, int(np.ceil(1.25 * a / (a / 48))) + 1)
        far = []
        if r_hi > near[-1]:
            far = near[-1] * np.geomspace(1.0, r_hi / near[-1] * 1.02, 48)[1:]
        self.table_r = np.concatenate([near, far])
        self.r_hi = float(self.table_r[-1])
        vals = np.array([[_singular_integral(F, r, support, n_alpha) for r in self.table_r] for F in funcs])
        self.table = vals
        self._splines = [CubicSpline(self.table_r, v) for v in vals]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r_hi * (1 + 1e-12)) or np.any(r < self.radius * (1 - 1e-12)):
            raise ValueError("radius outside the tabulated range")
        return tuple(s(r) for s in self._splines)


@lru_cache(maxsize=8)
def _profiles_cached(radius, width, r_hi):
    return LambdaProfiles(radius, width, r_hi)


def lambda_profiles(radius, width, r_hi):
    # one table per geometry covers every grid up to 40 (R + a)
    span = 40.0 * (radius + width)
    return _profiles_cached(float(radius), float(width), float(max(span, r_hi)))


def lambda_psi2_values(snap, r, theta, geom, cfg, r_hi=None):
    """``Lambda psi2`` at polar points (arrays broadcast together)."""
    r = np.asarray(r, dtype=float)
    prof = lambda_profiles(float(geom.radius), float(cfg.cutoff_width), float(r_hi or np.max(r)))
    Lq, L1, L0 = prof(r)
    b, c0 = _motion_vectors(snap)
    return snap.theta_dot * Lq - (b[0] * np.cos(theta) + b[1] * np.sin(theta)) * L1 - c0 * L0


def lambda_psi2(snap, grid, geom, cfg):
    if grid.dr > cfg.cutoff_width / 8.0:
        import warnings

        from .errors import TruncationWarning

        warnings.warn(
            f"radial spacing {grid.dr:.3g} does not resolve the cutoff band a = {cfg.cutoff_width:g} (need a/8)",
            TruncationWarning,
            stacklevel=2,
        )
    vals = lambda_psi2_values(snap, grid.rr, grid.tt, geom, cfg, r_hi=grid.r_max)
    return ScalarField(grid, vals, snap.t)


# -- frame change of the scalar ---------------------------------------------


def _rotate_spectral(values, angle):
    """Samples of f(R_{-angle} y) given samples of f on a uniform periodic theta grid."""
    n = values.shape[1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    phase = np.exp(-1j * k * angle)
    if n % 2 == 0:
        # the Nyquist mode cannot be shifted as a real signal; keep its cosine part
        phase[-1] = np.cos(k[-1] * angle)
    return np.fft.irfft(np.fft.rfft(values, axis=1) * phase[None, :], n=n, axis=1)


def compose_with_lab(omega_lab, snap, grid=None, background=0.0):
    """Body-frame samples of a lab-frame scalar, ``omega_lab(R_theta y + h)``.

    ``omega_lab`` is a callable of lab points or a :class:`ScalarField` on a polar grid
    about the lab origin. Without translation the rotation is applied spectrally in theta,
    which is exactly invertible; otherwise bicubic interpolation is used.
    """
    if callable(omega_lab) and not isinstance(omega_lab, ScalarField):
        p = to_lab(grid.points(), snap)
        return np.asarray(omega_lab(p), dtype=float)
    g = omega_lab.grid
    if not np.any(snap.h):
        return _rotate_spectral(omega_lab.values, -snap.theta)
    p = to_lab(g.points(), snap)
    pr = np.hypot(p[..., 0], p[..., 1])
    pt = np.arctan2(p[..., 1], p[..., 0])
    return interp_values(omega_lab.values, g, pr, pt, outer_value=background)


def omega_shift_to_body(omega_lab, snap, grid=None, background=0.0):
    """``omega_body(y) = omega_lab(R_theta y + h) - 2 theta_dot``."""
    vals = compose_with_lab(omega_lab, snap, grid, background)
    g = grid if grid is not None else omega_lab.grid
    return ScalarField(g, vals - 2.0 * snap.theta_dot, snap.t)


def omega_shift_to_lab(omega_body, snap):
    """Inverse of :func:`omega_shift_to_body` (fields on a polar grid about the lab origin)."""
    g = omega_body.grid
    shifted = omega_body.values + 2.0 * snap.theta_dot
    if not np.any(snap.h):
        return ScalarField(g, _rotate_spectral(shifted, snap.theta), snap.t)
    x = g.points()
    y = to_body(x, snap)
    pr = np.hypot(y[..., 0], y[..., 1])
    pt = np.arctan2(y[..., 1], y[..., 0])
    bg = 2.0 * snap.theta_dot
    return ScalarField(g, interp_values(shifted, g, pr, pt, outer_value=bg), snap.t)
