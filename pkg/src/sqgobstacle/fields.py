"""Annular polar grid, scalar fields, interpolation and discrete functionals.

Nodes are cell-centred in r (``r_i = r_min + (i + 1/2) dr``) and uniform in theta
(``theta_j = j dtheta``). Quadrature weights are the cell areas ``r dr dtheta``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _backend
from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not (np.isfinite(self.r_min) and self.r_min > 0):
            raise ConfigError(f"r_min must be positive, got {self.r_min}", key="r_min")
        if not self.r_max > self.r_min:
            raise ConfigError(f"r_max ({self.r_max}) must exceed r_min ({self.r_min})", key="r_max")
        if int(self.n_r) != self.n_r or self.n_r < 16:
            raise ConfigError(f"n_r must be an integer >= 16, got {self.n_r}", key="n_r")
        if int(self.n_theta) != self.n_theta or self.n_theta < 32 or self.n_theta % 2:
            raise ConfigError(f"n_theta must be an even integer >= 32, got {self.n_theta}", key="n_theta")

    @property
    def dr(self):
        return (self.r_max - self.r_min) / self.n_r

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.n_theta

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    @property
    def r0(self):
        """Radius of the first node row."""
        return self.r_min + 0.5 * self.dr

    @property
    def min_cell(self):
        return min(self.dr, self.r_min * self.dtheta)

    @property
    def max_inner_spacing(self):
        """Largest cell dimension on the innermost ring, where the kernel peak matters most."""
        return max(self.dr, self.r_min * self.dtheta)

    @cached_property
    def r(self):
        return self.r_min + (np.arange(self.n_r) + 0.5) * self.dr

    @cached_property
    def theta(self):
        return np.arange(self.n_theta) * self.dtheta

    @cached_property
    def weights(self):
        return np.broadcast_to((self.r * self.dr * self.dtheta)[:, None], self.shape)

    @cached_property
    def rr(self):
        return np.broadcast_to(self.r[:, None], self.shape)

    @cached_property
    def tt(self):
        return np.broadcast_to(self.theta[None, :], self.shape)

    @cached_property
    def cos(self):
        return np.broadcast_to(np.cos(self.theta)[None, :], self.shape)

    @cached_property
    def sin(self):
        return np.broadcast_to(np.sin(self.theta)[None, :], self.shape)

    def points(self):
        """Cartesian node coordinates, shape (n_r, n_theta, 2)."""
        return np.stack([self.rr * self.cos, self.rr * self.sin], axis=-1)

    def check_outer_cutoff(self, delta):
        if self.r_max > 2.0 / delta * (1.0 + 1e-12):
            raise ConfigError(
                f"r_max = {self.r_max} exceeds the outer-cutoff support 2/delta = {2.0 / delta:g}; "
                "the regularized operator vanishes beyond it",
                key="r_max",
            )

    def as_dict(self):
        return {"r_min": self.r_min, "r_max": self.r_max, "n_r": int(self.n_r), "n_theta": int(self.n_theta)}


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        self.values = v

    def with_values(self, values, time_tag=None):
        return ScalarField(self.grid, values, self.time_tag if time_tag is None else time_tag)

    @classmethod
    def zeros(cls, grid, time_tag=0.0):
        return cls(grid, np.zeros(grid.shape), time_tag)

    @classmethod
    def from_function(cls, grid, fn, time_tag=0.0):
        """Sample ``fn(x, y)`` at the nodes."""
        p = grid.points()
        return cls(grid, fn(p[..., 0], p[..., 1]), time_tag)


# -- interpolation ----------------------------------------------------------


def interp_values(values, grid, pr, ptheta, limiter=False, outer_value=0.0, replicate=False):
    mode = _backend.OUTER_REPLICATE if replicate else _backend.OUTER_VALUE
    return _backend.interp_polar(values, grid.r0, grid.dr, pr, ptheta, limiter, mode, outer_value)


def interpolate(field, p, limiter=False, outer_value=0.0):
    """Bicubic value at Cartesian point(s) ``p``; 0 (or ``outer_value``) beyond r_max."""
    p = np.asarray(p, dtype=float)
    pr = np.hypot(p[..., 0], p[..., 1])
    pt = np.arctan2(p[..., 1], p[..., 0])
    out = interp_values(field.values, field.grid, pr, pt, limiter, outer_value)
    return float(out) if out.ndim == 0 else out


# -- norms and measures -----------------------------------------------------


def lp_norm(field, p):
    v = np.abs(field.values)
    if p == np.inf or p == "inf":
        return float(v.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    w = field.grid.weights
    if p == 1:
        return float(np.sum(w * v))
    if p == 2:
        return float(np.sqrt(np.sum(w * v * v)))
    return float(np.sum(w * v**p) ** (1.0 / p))


def weighted_l2(values, grid):
    return float(np.sqrt(np.sum(grid.weights * values * values)))


def level_set_measure(field, eta):
    """Area of the super-level set ``{f >= eta}``; for eta < 0 the sub-level set ``{f <= eta}``."""
    if eta == 0:
        raise ValueError("eta must be nonzero (the ambient value is 0)")
    mask = field.values >= eta if eta > 0 else field.values <= eta
    return float(np.sum(field.grid.weights * mask))


# -- discrete calculus ------------------------------------------------------


def d_dr(values, grid):
    return np.gradient(values, grid.dr, axis=0, edge_order=2)


def d_dtheta(values, grid):
    """Fourth-order periodic central difference in theta."""
    f = values
    return (
        -np.roll(f, -2, axis=1) + 8.0 * np.roll(f, -1, axis=1)
        - 8.0 * np.roll(f, 1, axis=1) + np.roll(f, 2, axis=1)
    ) / (12.0 * grid.dtheta)


def cartesian_gradient(values, grid):
    fr = d_dr(values, grid)
    ft = d_dtheta(values, grid) / grid.rr
    c, s = grid.cos, grid.sin
    return c * fr - s * ft, s * fr + c * ft


def gradient_magnitude(field):
    gx, gy = cartesian_gradient(field.values, field.grid)
    return np.hypot(gx, gy)


def sobolev_norms(field, kmax=4):
    """Discrete ``H^k`` norms for k = 0..kmax.

    ``||f||_{H^k}^2 = sum_{j<=k} |grad^j f|^2`` with ``|grad^j f|`` the Frobenius norm of the
    j-th Cartesian derivative tensor over all 2^j orderings. Discrete mixed derivatives do
    not commute on the polar grid; keeping every ordering makes the norm exactly invariant
    under rotations by whole theta cells.
    """
    grid = field.grid
    w = grid.weights
    level = [np.asarray(field.values, dtype=float)]
    sums = [float(np.sum(w * level[0] ** 2))]
    for _ in range(kmax):
        level = [g for a in level for g in cartesian_gradient(a, grid)]
        sums.append(sum(float(np.sum(w * d * d)) for d in level))
    return [float(np.sqrt(sum(sums[: k + 1]))) for k in range(kmax + 1)]


def sobolev_norm(field, k):
    if not 0 <= k <= 4:
        raise ValueError("k must be in 0..4")
    return sobolev_norms(field, k)[k]
