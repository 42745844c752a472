"""Whole-plane kernels of the critical (s = 1/2) fractional Laplacian.

All functions accept points as arrays of shape ``(..., 2)`` and broadcast.
The orthogonal map is the counter-clockwise quarter turn
``x_perp = (-x2, x1)``, so ``grad_perp f = (-d2 f, d1 f)``.
"""

from dataclasses import dataclass
from math import gamma, pi

import numpy as np

from .errors import DomainError

# Inner blend polynomials q(s) = q0 + a3 s^3 + a4 s^4 + a5 s^5 on s = r/delta < 1,
# matched to c/r in value, slope and curvature at s = 1 and flat at s = 0.
BLEND_PROFILES = {
    "quintic": 1.5,
    "quintic-q2": 2.0,
}


def _blend_coefficients(q0):
    a = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
    b = np.array([1.0 - q0, -1.0, 2.0])
    a3, a4, a5 = np.linalg.solve(a, b)
    return float(q0), float(a3), float(a4), float(a5)


@dataclass(frozen=True)
class KernelConfig:
    """Regularization radius, cutoff width of the corrective stream, blend name."""

    delta: float
    cutoff_width: float
    blend_profile: str = "quintic"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.cutoff_width > 0:
            raise ValueError(f"cutoff_width must be positive, got {self.cutoff_width}")
        if self.blend_profile not in BLEND_PROFILES:
            raise ValueError(
                f"unknown blend profile {self.blend_profile!r}; "
                f"choose one of {sorted(BLEND_PROFILES)}"
            )

    @property
    def blend(self):
        """Coefficients ``(q0, a3, a4, a5)`` of the inner polynomial."""
        return _blend_coefficients(BLEND_PROFILES[self.blend_profile])


def constant_c(s=0.5):
    """Normalization ``c_s = (1-s) Gamma(1-s) / (2^(2s-1) pi Gamma(s))``; 1/(2 pi) at s = 1/2."""
    return (1.0 - s) * gamma(1.0 - s) / (2.0 ** (2.0 * s - 1.0) * pi * gamma(s))


C = constant_c()


def perp(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _norm(x):
    x = np.asarray(x, dtype=float)
    return np.hypot(x[..., 0], x[..., 1])


def eval_G(x):
    """Whole-plane Green function ``c/|x|``."""
    r = _norm(x)
    if np.any(r == 0.0):
        raise DomainError("G is singular at x = 0")
    return C / r


def eval_K(x):
    """Biot-Savart kernel ``grad_perp G = -c x_perp / |x|^3``."""
    x = np.asarray(x, dtype=float)
    r = _norm(x)
    if np.any(r == 0.0):
        raise DomainError("K is singular at x = 0")
    return -C * perp(x) / (r**3)[..., None]


def G_delta_radial(r, delta, blend=None):
    """Radial profile of the regularized kernel."""
    q0, a3, a4, a5 = blend if blend is not None else _blend_coefficients(1.5)
    r = np.asarray(r, dtype=float)
    s = r / delta
    inner = (C / delta) * (q0 + s**3 * (a3 + s * (a4 + s * a5)))
    with np.errstate(divide="ignore"):
        outer = C / r
    return np.where(s < 1.0, inner, outer)


def G_delta_dr_over_r(r, delta, blend=None):
    """``G_delta'(r) / r``, finite at r = 0 (needed for Cartesian gradients)."""
    _, a3, a4, a5 = blend if blend is not None else _blend_coefficients(1.5)
    r = np.asarray(r, dtype=float)
    s = r / delta
    # q'(s)/s = 3 a3 s + 4 a4 s^2 + 5 a5 s^3
    inner = (C / delta**3) * (s * (3.0 * a3 + s * (4.0 * a4 + s * 5.0 * a5)))
    with np.errstate(divide="ignore"):
        outer = -C / r**3
    return np.where(s < 1.0, inner, outer)


def eval_G_delta(x, cfg):
    return G_delta_radial(_norm(x), cfg.delta, cfg.blend)


def eval_grad_G_delta(x, cfg):
    x = np.asarray(x, dtype=float)
    return G_delta_dr_over_r(_norm(x), cfg.delta, cfg.blend)[..., None] * x


def gradient_bound_constant(cfg, samples=20001):
    """Constant C with ``sup |grad G_delta| = C / delta^2``, measured on a dense sample.

    The sup is attained inside the blend region, so C does not depend on delta.
    """
    _, a3, a4, a5 = cfg.blend
    s = np.linspace(0.0, 1.0, samples)
    qprime = s**2 * (3.0 * a3 + s * (4.0 * a4 + s * 5.0 * a5))
    return C * float(np.max(np.abs(qprime)))


# -- cutoff profiles -------------------------------------------------------


def smoothstep(t):
    """Quintic smoothstep, C^2 with exact plateaus at 0 and 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def smoothstep_prime(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * tc * tc * (1.0 - tc) ** 2, 0.0)


def cutoff_chi(r, width):
    """Non-increasing, 1 on r <= 0 and 0 on r >= width."""
    if not width > 0:
        raise ValueError("cutoff width must be positive")
    return 1.0 - smoothstep(np.asarray(r, dtype=float) / width)


def cutoff_chi_prime(r, width):
    return -smoothstep_prime(np.asarray(r, dtype=float) / width) / width


def cutoff_chi_delta(r, delta):
    """Non-increasing, 1 on r <= delta and 0 on r >= 2 delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - delta) / delta)


def cutoff_chi_delta_prime(r, delta):
    return -smoothstep_prime((np.asarray(r, dtype=float) - delta) / delta) / delta


def outer_cutoff(r, delta):
    """Far-field window of the regularized operator: 1 on |x| <= 1/delta, 0 beyond 2/delta."""
    return cutoff_chi_delta(delta * delta * np.asarray(r, dtype=float), delta)


def outer_cutoff_prime(r, delta):
    return delta * delta * cutoff_chi_delta_prime(delta * delta * np.asarray(r, dtype=float), delta)
