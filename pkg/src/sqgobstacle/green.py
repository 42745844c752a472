"""Green function of the half-Laplacian outside a disk, and the regularized operators.

The disk of radius R sits at the origin. With ``rho = |x - y|`` and
``P = sqrt((|x|^2 - R^2)(|y|^2 - R^2))`` the exterior Green function is

    G_F(x, y) = atan2(P, R rho) / (pi^2 rho)

(Kelvin transform of the Riesz formula for the ball). Its regular part
``H_F = G - G_F = (R / (pi^2 P)) * atan(u)/u`` with ``u = R rho / P`` stays smooth when
x = y, which is what the quadrature sums.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from ._pycore import atan_defect, atan_ratio
from .errors import ConfigError, DomainError, QuadratureResolutionWarning, TruncationWarning
from .kernels import C, G_delta_dr_over_r, G_delta_radial, cutoff_chi_delta, cutoff_chi_delta_prime
from .kernels import outer_cutoff, outer_cutoff_prime

INV_PI2 = 1.0 / np.pi**2
# points with |y|^2 - R^2 below this fraction of R^2 are on the boundary up to round-off
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class ObstacleGeometry:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"obstacle radius must be positive, got {self.radius}", key="radius")

    def dist(self, p):
        p = np.asarray(p, dtype=float)
        return np.hypot(p[..., 0], p[..., 1]) - self.radius


@dataclass(frozen=True)
class GreenEvaluation:
    value: float
    whole_plane_part: float
    regular_part: float


def _excess(p, R):
    """``|p|^2 - R^2`` computed as ``(|p| - R)(|p| + R)``, snapped to 0 within round-off."""
    r = np.hypot(p[..., 0], p[..., 1])
    e = (r - R) * (r + R)
    return np.where(np.abs(e) <= BOUNDARY_RTOL * R * R, 0.0, e)


def _check_pair(x, y, R):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.hypot(x[..., 0], x[..., 1]) <= R):
        raise DomainError("target x must lie strictly outside the obstacle")
    d = x - y
    if np.any(np.hypot(d[..., 0], d[..., 1]) == 0.0):
        raise DomainError("G_F is singular at x = y")
    return x, y


def green_parts(x, y, radius):
    """Vectorized ``(G_F, G, H_F)`` for x outside the disk and any y, x != y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    R = float(radius)
    d = x - y
    rho = np.hypot(d[..., 0], d[..., 1])
    G = C / rho
    ey = _excess(y, R)
    inside = ey <= 0.0
    P = np.sqrt(np.maximum(_excess(x, R), 0.0) * np.where(inside, 1.0, ey))
    gf = np.where(inside, 0.0, np.arctan2(P, R * rho) / (np.pi**2 * rho))
    u = R * rho / np.where(inside, 1.0, P)
    h_ext = INV_PI2 * (R / np.where(inside, 1.0, P)) * atan_ratio(u)
    H = np.where(inside, G, h_ext)
    return gf, G, H


def eval_G_exterior(x, y, geom):
    x, y = _check_pair(x, y, geom.radius)
    gf, G, H = green_parts(x, y, geom.radius)
    return GreenEvaluation(float(gf), float(G), float(H))


def eval_H(x, y, geom):
    x, y = _check_pair(x, y, geom.radius)
    return float(green_parts(x, y, geom.radius)[2])


def grad_H(x, y, radius):
    """x-gradient of the regular part for x, y both outside the disk (vectorized)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    R = float(radius)
    d = x - y
    rho = np.hypot(d[..., 0], d[..., 1])
    ax = _excess(x, R)
    P = np.sqrt(ax * _excess(y, R))
    u = R * rho / P
    c1 = R**3 * atan_defect(u) / P**3
    c2 = R / (P * (1.0 + u * u) * ax)
    return INV_PI2 * (c1[..., None] * d - c2[..., None] * x)


# -- regularized operator ---------------------------------------------------


def prefactor(r, delta, radius):
    """``A(r) = chi_delta(delta^2 r) (1 - chi_delta(r - R))`` and its derivative."""
    r = np.asarray(r, dtype=float)
    co = outer_cutoff(r, delta)
    ci = 1.0 - cutoff_chi_delta(r - radius, delta)
    dco = outer_cutoff_prime(r, delta)
    dci = -cutoff_chi_delta_prime(r - radius, delta)
    return co * ci, dco * ci + co * dci


def check_resolution(grid, cfg, geom=None, stacklevel=3):
    grid.check_outer_cutoff(cfg.delta)
    if cfg.delta < 2.0 * grid.max_inner_spacing:
        warnings.warn(
            f"delta = {cfg.delta:g} is below twice the inner cell size "
            f"{grid.max_inner_spacing:.4g}; the kernel peak is not resolved",
            QuadratureResolutionWarning,
            stacklevel=stacklevel,
        )
    if geom is not None and abs(grid.r_min - geom.radius) > 1e-12 * geom.radius:
        raise ConfigError("grid r_min must equal the obstacle radius", key="r_min")


def _density_values(density):
    return density.values if hasattr(density, "values") else np.asarray(density, dtype=float)


def integral_at_points(density, targets, cfg, geom, backend=None):
    """Unweighted ``I(x) = int (G_delta - H_F)(x, y) f(y) dy`` and its gradient at points."""
    grid = density.grid
    f = _density_values(density)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    keep = f.ravel() != 0.0
    src = grid.points().reshape(-1, 2)[keep]
    w = (grid.weights * f).ravel()[keep]
    if src.shape[0] == 0:
        z = np.zeros(targets.shape[0])
        return z, z.copy(), z.copy()
    return _backend.direct_sum(targets, src, w, geom.radius, cfg.delta, cfg.blend, backend=backend)


def apply_G_F_delta(density, targets, cfg, geom, backend=None):
    """Regularized exterior Green operator applied to a gridded density, at arbitrary targets.

    Targets with ``dist(x, S) <= delta`` or ``|x| >= 2/delta`` get exactly 0.
    """
    check_resolution(density.grid, cfg, geom)
    targets = np.asarray(targets, dtype=float)
    shape = targets.shape[:-1]
    t = targets.reshape(-1, 2)
    r = np.hypot(t[:, 0], t[:, 1])
    if np.any(r < geom.radius * (1.0 - 1e-12)):
        raise DomainError("targets must lie in the closed exterior of the obstacle")
    A, _ = prefactor(r, cfg.delta, geom.radius)
    out = np.zeros(t.shape[0])
    live = A != 0.0
    if np.any(live):
        val, _, _ = integral_at_points(density, t[live], cfg, geom, backend)
        out[live] = A[live] * val
    return out.reshape(shape)


def apply_K_F_delta(density, targets, cfg, geom, backend=None):
    """``grad_perp`` of :func:`apply_G_F_delta`, differentiated inside the quadrature."""
    check_resolution(density.grid, cfg, geom)
    targets = np.asarray(targets, dtype=float)
    shape = targets.shape
    t = targets.reshape(-1, 2)
    r = np.hypot(t[:, 0], t[:, 1])
    if np.any(r < geom.radius * (1.0 - 1e-12)):
        raise DomainError("targets must lie in the closed exterior of the obstacle")
    A, dA = prefactor(r, cfg.delta, geom.radius)
    out = np.zeros(t.shape)
    live = (A != 0.0) | (dA != 0.0)
    if np.any(live):
        val, gx, gy = integral_at_points(density, t[live], cfg, geom, backend)
        rl = r[live]
        ex, ey = t[live, 0] / rl, t[live, 1] / rl
        dx = dA[live] * ex * val + A[live] * gx
        dy = dA[live] * ey * val + A[live] * gy
        out[live, 0] = -dy
        out[live, 1] = dx
    return out.reshape(shape)


# -- ring-FFT operator on the grid -----------------------------------------


def kernel_polar(rx, ry, dth, radius, delta, blend):
    """``Phi = G_delta - H_F`` between polar points, with ``d Phi / d r_x`` and ``(1/r_x) d Phi / d theta_x``.

    ``dth`` is the angle of x minus the angle of y. Both points must be outside the disk.
    """
    R = radius
    cd, sd = np.cos(dth), np.sin(dth)
    rho2 = rx * rx + ry * ry - 2.0 * rx * ry * cd
    rho = np.sqrt(np.maximum(rho2, 0.0))
    ax = (rx - R) * (rx + R)
    ay = (ry - R) * (ry + R)
    P = np.sqrt(ax * ay)
    u = R * rho / P
    H = INV_PI2 * (R / P) * atan_ratio(u)
    g = G_delta_radial(rho, delta, blend)
    g_over = G_delta_dr_over_r(rho, delta, blend)
    c1 = R**3 * atan_defect(u) / P**3
    c2 = R * rx / (P * (1.0 + u * u) * ax)
    radial_sep = rx - ry * cd
    k = g_over - INV_PI2 * c1
    phi = g - H
    phi_r = k * radial_sep + INV_PI2 * c2
    phi_t = k * ry * sd
    return phi, phi_r, phi_t


class RingOperator:
    """Exact grid-to-grid application of the regularized integral by FFT in theta.

    The kernel depends on the two radii and the angle difference only, so each
    (target ring, source ring) pair is a circular convolution. The result equals the
    direct midpoint-rule sum up to FFT round-off.
    """

    def __init__(self, grid, delta, blend, radius):
        self.grid = grid
        self.delta = float(delta)
        self.radius = float(radius)
        r = grid.r
        n_t = grid.n_theta
        dth = grid.theta
        rx = r[:, None, None]
        ry = r[None, :, None]
        tabs = []
        for k in kernel_polar(rx, ry, dth[None, None, :], self.radius, self.delta, blend):
            # (n_targets, n_sources, n_theta) -> (n_modes, n_targets, n_sources)
            tabs.append(np.ascontiguousarray(np.fft.rfft(k, axis=2).transpose(2, 0, 1)))
        self.phi_hat, self.phi_r_hat, self.phi_t_hat = tabs
        self.n_theta = n_t
        self.A, self.dA = prefactor(r, self.delta, self.radius)
        self._w = (r * grid.dr * grid.dtheta)[:, None]

    def integrals(self, values):
        """``I``, ``dI/dr`` and ``(1/r) dI/dtheta`` on the grid nodes."""
        fh = np.fft.rfft(values * self._w, axis=1).T[:, :, None]  # (modes, sources, 1)
        out = []
        for tab in (self.phi_hat, self.phi_r_hat, self.phi_t_hat):
            res = np.matmul(tab, fh)[:, :, 0].T  # (targets, modes)
            out.append(np.fft.irfft(res, n=self.n_theta, axis=1))
        return out

    def apply(self, values):
        """``G_{F,delta} f`` on the nodes."""
        I, _, _ = self.integrals(values)
        return self.A[:, None] * I

    def velocity_polar(self, values):
        """Polar components of ``grad_perp(G_{F,delta} f)`` on the nodes."""
        I, Ir, It = self.integrals(values)
        A = self.A[:, None]
        dA = self.dA[:, None]
        # grad_perp psi = psi_r e_theta - (psi_theta / r) e_r
        return -A * It, dA * I + A * Ir


@lru_cache(maxsize=8)
def ring_operator(grid, delta, blend, radius):
    return RingOperator(grid, delta, blend, radius)


# -- brute-force oracle ------------------------------------------------------


def lattice_green(nmax):
    """Green function of the square root of the 5-point lattice Laplacian on Z^2.

    ``g(n) = pi^{-1/2} int_0^inf t^{-1/2} e^{-4t} I_{n1}(2t) I_{n2}(2t) dt``, by the
    trapezoid rule in log t plus a closed-form tail. Returns ``g[|n1|, |n2|]``.
    """
    from scipy.special import erf, ive

    ds = 0.02
    s = np.arange(-25.0, 19.5, ds)
    t = np.exp(s)
    n = np.arange(nmax + 1)
    I = ive(n[:, None], 2.0 * t[None, :])
    w = np.sqrt(t) * ds / np.sqrt(np.pi)
    g = np.einsum("it,jt,t->ij", I, I, w)
    # beyond T the heat kernel is Gaussian to high accuracy
    T = np.exp(s[-1] + 0.5 * ds)
    q = (n[:, None] ** 2 + n[None, :] ** 2) / 4.0
    qq = np.where(q > 0, q, 1.0)
    tail = np.where(q > 0, np.sqrt(np.pi / qq) * erf(np.sqrt(qq / T)), 2.0 / np.sqrt(T))
    return g + tail / (4.0 * np.pi * np.sqrt(np.pi))


@dataclass
class OracleResult:
    points: np.ndarray  # (N*N, 2) lattice points
    spacing: float
    in_disk: np.ndarray  # bool mask
    matrix: np.ndarray  # continuum-scaled discrete Green matrix; disk rows and columns are zero


def brute_force_green_oracle(n=64, half_width=None, geom=None):
    """Discrete exterior Green matrix on an n x n cell-centred lattice window.

    The discrete operator is the square root of the 5-point Laplacian on the infinite
    lattice with zero extension into the disk; its restricted inverse is the Schur
    complement ``G_FF - G_FS G_SS^{-1} G_SF`` of the whole-lattice Green function, so no
    far-field truncation enters. Entries are scaled by 1/h to approximate G_F.
    """
    geom = geom or ObstacleGeometry(1.0)
    R = geom.radius
    L = 4.0 * R if half_width is None else float(half_width)
    h = 2.0 * L / n
    if R / h < 4.0:
        warnings.warn(f"disk radius spans only {R / h:.2g} lattice cells", TruncationWarning, stacklevel=2)
    xs = (np.arange(n) - n / 2 + 0.5) * h
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.stack(np.meshgrid(np.arange(n), np.arange(n), indexing="ij"), axis=-1).reshape(-1, 2)
    in_disk = np.hypot(pts[:, 0], pts[:, 1]) <= R
    g = lattice_green(n)

    def block(a, b):
        d = np.abs(a[:, None, :] - b[None, :, :])
        return g[d[..., 0], d[..., 1]]

    S = idx[in_disk]
    F = idx[~in_disk]
    gfs = block(F, S)
    corr = gfs @ np.linalg.solve(block(S, S), gfs.T)
    gff = block(F, F) - corr
    gff = 0.5 * (gff + gff.T)
    m = np.zeros((n * n, n * n))
    fi = np.where(~in_disk)[0]
    m[np.ix_(fi, fi)] = gff / h
    return OracleResult(pts, h, in_disk, m)


def compare_with_oracle(result, geom, min_cells=4.0):
    """Max and median relative error of the closed form against the oracle.

    Uses pairs with mutual distance and distance to the boundary both at least
    ``min_cells`` lattice spacings.
    """
    h = result.spacing
    d = np.hypot(result.points[:, 0], result.points[:, 1]) - geom.radius
    sel = np.where(d >= min_cells * h)[0]
    p = result.points[sel]
    sub = result.matrix[np.ix_(sel, sel)]
    worst = 0.0
    meds = []
    for start in range(0, len(sel), 512):
        a = p[start : start + 512]
        sep = np.hypot(*(a[:, None, :] - p[None, :, :]).transpose(2, 0, 1))
        mask = sep >= min_cells * h * (1.0 - 1e-9)
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = green_parts(a[:, None, :], p[None, :, :], geom.radius)[0]
        rel = np.abs(sub[start : start + 512] - exact)[mask] / exact[mask]
        worst = max(worst, float(rel.max()))
        meds.append(rel)
    return worst, float(np.median(np.concatenate(meds))), int(len(sel))


def boundary_vanishing(geom, n_x=64, n_y=256, seed=0):
    """Largest ``|G_F(x, y)| / G(x - y_far)`` over y on the boundary circle, for targets x
    spread over ``R < |x| < 5R``, with ``y_far`` the boundary point farthest from x."""
    R = geom.radius
    rng = np.random.default_rng(seed)
    rx = R * (1.0 + 4.0 * rng.random(n_x) ** 2) + 1e-3 * R
    ax = 2.0 * np.pi * rng.random(n_x)
    x = np.stack([rx * np.cos(ax), rx * np.sin(ax)], axis=-1)
    ay = 2.0 * np.pi * np.arange(n_y) / n_y
    y = R * np.stack([np.cos(ay), np.sin(ay)], axis=-1)
    gf = green_parts(x[:, None, :], y[None, :, :], R)[0]
    g_far = C / (rx + R)
    return float(np.max(np.abs(gf) / g_far[:, None]))
