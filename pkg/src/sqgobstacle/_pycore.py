"""Pure-numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_core`` extension; selected
automatically when the extension is missing or ``SQGOBSTACLE_BACKEND=python``.
"""

import numpy as np

OUTER_VALUE = 0
OUTER_REPLICATE = 1

_INV_PI2 = 1.0 / np.pi**2
_C = 1.0 / (2.0 * np.pi)


def atan_ratio(u):
    """atan(u)/u, stable at u = 0."""
    small = u < 1e-4
    us = np.where(small, 1.0, u)
    return np.where(small, 1.0 - u * u / 3.0, np.arctan(us) / us)


def atan_defect(u):
    """(1/(1+u^2) - atan(u)/u) / u^2, stable at u = 0."""
    small = u < 1e-2
    us = np.where(small, 1.0, u)
    u2 = u * u
    series = -2.0 / 3.0 + u2 * (4.0 / 5.0 - u2 * 6.0 / 7.0)
    exact = (1.0 / (1.0 + us * us) - np.arctan(us) / us) / (us * us)
    return np.where(small, series, exact)


def _gdelta(rho, delta, blend):
    q0, a3, a4, a5 = blend
    s = rho / delta
    inner = (_C / delta) * (q0 + s**3 * (a3 + s * (a4 + s * a5)))
    dinner = (_C / delta**3) * (s * (3.0 * a3 + s * (4.0 * a4 + s * 5.0 * a5)))
    safe = np.where(s < 1.0, 1.0, rho)
    val = np.where(s < 1.0, inner, _C / safe)
    dval = np.where(s < 1.0, dinner, -_C / safe**3)
    return val, dval


def direct_sum(targets, sources, weights, radius, delta, blend, block=256):
    """Direct quadrature of ``sum_j w_j (G_delta(x - y_j) - H(x, y_j))`` and its x-gradient.

    Targets must lie strictly outside the disk. Returns ``(value, grad_x, grad_y)``.
    Each target's sum runs over sources in a fixed order.
    """
    targets = np.ascontiguousarray(targets, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    m = targets.shape[0]
    out_v = np.zeros(m)
    out_gx = np.zeros(m)
    out_gy = np.zeros(m)
    R = float(radius)
    R2 = R * R
    ys = sources[:, 0]
    yy = sources[:, 1]
    by = ys * ys + yy * yy - R2
    for start in range(0, m, block):
        x = targets[start : start + block]
        x0 = x[:, 0:1]
        x1 = x[:, 1:2]
        dx = x0 - ys[None, :]
        dy = x1 - yy[None, :]
        rho = np.hypot(dx, dy)
        ax = x0 * x0 + x1 * x1 - R2
        P = np.sqrt(ax * by[None, :])
        u = R * rho / P
        h = _INV_PI2 * (R / P) * atan_ratio(u)
        g, dg_over_r = _gdelta(rho, delta, blend)
        defect = atan_defect(u)
        # grad_x H = (R^3 g(u)/P^3) (x - y) - R x / (P (1+u^2) (|x|^2 - R^2))
        c1 = R**3 * defect / P**3
        c2 = R / (P * (1.0 + u * u) * ax)
        hx = _INV_PI2 * (c1 * dx - c2 * x0)
        hy = _INV_PI2 * (c1 * dy - c2 * x1)
        w = weights[None, :]
        out_v[start : start + block] = np.sum((g - h) * w, axis=1)
        out_gx[start : start + block] = np.sum((dg_over_r * dx - hx) * w, axis=1)
        out_gy[start : start + block] = np.sum((dg_over_r * dy - hy) * w, axis=1)
    return out_v, out_gx, out_gy


def _catmull_rom(t):
    t2 = t * t
    t3 = t2 * t
    return (
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    )


def interp_polar(values, r0, dr, pr, ptheta, limiter, outer_mode, outer_value):
    """Bicubic (Catmull-Rom) interpolation on a cell-centred polar grid.

    ``values`` has shape (n_r, n_theta), or (n_fields, n_r, n_theta) to interpolate several
    fields at the same points, with node radii ``r0 + i dr`` and angles ``j 2 pi / n_theta``.
    Rows below the first node replicate it; rows past the last either replicate it or take
    ``outer_value`` (``outer_mode``), and in the latter mode points beyond the outer edge of
    the last cell take ``outer_value``.
    """
    values = np.ascontiguousarray(values, dtype=float)
    single = values.ndim == 2
    if single:
        values = values[None]
    n_f, n_r, n_t = values.shape
    pr = np.asarray(pr, dtype=float)
    pt = np.asarray(ptheta, dtype=float)
    dth = 2.0 * np.pi / n_t
    fi = (pr - r0) / dr
    i0 = np.floor(fi).astype(np.int64)
    tr = fi - i0
    fj = np.mod(pt, 2.0 * np.pi) / dth
    j0 = np.floor(fj).astype(np.int64)
    tt = fj - j0
    j0 = np.mod(j0, n_t)
    wr = _catmull_rom(tr)
    wt = _catmull_rom(tt)
    out = np.zeros((n_f,) + pr.shape)
    rows = []
    for a in range(4):
        k = i0 - 1 + a
        hi = k > n_r - 1
        kc = np.clip(k, 0, n_r - 1)
        row = []
        for b in range(4):
            jj = np.mod(j0 - 1 + b, n_t)
            v = values[:, kc, jj]
            if outer_mode == OUTER_VALUE:
                v = np.where(hi, outer_value, v)
            row.append(v)
            out += wr[a] * wt[b] * v
        rows.append(row)
    if limiter:
        corners = np.stack([rows[1][1], rows[1][2], rows[2][1], rows[2][2]])
        out = np.clip(out, corners.min(axis=0), corners.max(axis=0))
    if outer_mode == OUTER_VALUE:
        r_edge = r0 + (n_r - 0.5) * dr
        out = np.where(pr > r_edge, outer_value, out)
    return out[0] if single else out
