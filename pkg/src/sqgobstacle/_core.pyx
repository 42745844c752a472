# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: direct Green quadrature and polar bicubic interpolation.

Both loops are parallel over targets; each target's reduction runs over sources in
a fixed sequential order, so results do not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, atan, floor, fmod, M_PI, hypot, fmin, fmax

cnp.import_array()

cdef double INV_PI2 = 1.0 / (M_PI * M_PI)
cdef double CNORM = 1.0 / (2.0 * M_PI)


cdef inline double atan_ratio(double u) noexcept nogil:
    if u < 1e-4:
        return 1.0 - u * u / 3.0
    return atan(u) / u


cdef inline double atan_defect(double u) noexcept nogil:
    cdef double u2 = u * u
    if u < 1e-2:
        return -2.0 / 3.0 + u2 * (4.0 / 5.0 - u2 * 6.0 / 7.0)
    return (1.0 / (1.0 + u2) - atan(u) / u) / u2


def direct_sum(const double[:, ::1] targets, const double[:, ::1] sources, const double[::1] weights,
               double radius, double delta, blend, int num_threads=1):
    cdef Py_ssize_t m = targets.shape[0]
    cdef Py_ssize_t n = sources.shape[0]
    cdef double q0 = blend[0], a3 = blend[1], a4 = blend[2], a5 = blend[3]
    out_v_arr = np.zeros(m)
    out_gx_arr = np.zeros(m)
    out_gy_arr = np.zeros(m)
    cdef double[::1] out_v = out_v_arr
    cdef double[::1] out_gx = out_gx_arr
    cdef double[::1] out_gy = out_gy_arr
    cdef double R = radius
    cdef double R2 = R * R
    cdef double R3 = R * R * R
    cdef Py_ssize_t i, j
    cdef double x0, x1, ax, dx, dy, rho, by, P, u, h, s, g, dg, c1, c2, w
    cdef double sv, sgx, sgy
    for i in prange(m, nogil=True, num_threads=num_threads, schedule="static"):
        x0 = targets[i, 0]
        x1 = targets[i, 1]
        ax = x0 * x0 + x1 * x1 - R2
        sv = 0.0
        sgx = 0.0
        sgy = 0.0
        for j in range(n):
            dx = x0 - sources[j, 0]
            dy = x1 - sources[j, 1]
            rho = hypot(dx, dy)
            by = sources[j, 0] * sources[j, 0] + sources[j, 1] * sources[j, 1] - R2
            P = sqrt(ax * by)
            u = R * rho / P
            h = INV_PI2 * (R / P) * atan_ratio(u)
            s = rho / delta
            if s < 1.0:
                g = (CNORM / delta) * (q0 + s * s * s * (a3 + s * (a4 + s * a5)))
                dg = (CNORM / (delta * delta * delta)) * (s * (3.0 * a3 + s * (4.0 * a4 + s * 5.0 * a5)))
            else:
                g = CNORM / rho
                dg = -CNORM / (rho * rho * rho)
            c1 = R3 * atan_defect(u) / (P * P * P)
            c2 = R / (P * (1.0 + u * u) * ax)
            w = weights[j]
            sv = sv + (g - h) * w
            sgx = sgx + (dg * dx - INV_PI2 * (c1 * dx - c2 * x0)) * w
            sgy = sgy + (dg * dy - INV_PI2 * (c1 * dy - c2 * x1)) * w
        out_v[i] = sv
        out_gx[i] = sgx
        out_gy[i] = sgy
    return out_v_arr, out_gx_arr, out_gy_arr


cdef inline void catmull_rom(double t, double* w) noexcept nogil:
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t)
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w[3] = 0.5 * (t3 - t2)


def interp_polar(values, double r0, double dr, pr, ptheta, bint limiter,
                 int outer_mode, double outer_value, int num_threads=1):
    """Bicubic polar interpolation; ``values`` is (n_r, n_theta) or (n_fields, n_r, n_theta)."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    cdef const double[:, :, ::1] vals = arr
    pr_arr = np.ascontiguousarray(pr, dtype=np.float64)
    pt_arr = np.ascontiguousarray(ptheta, dtype=np.float64)
    shape = pr_arr.shape
    cdef const double[::1] prv = pr_arr.reshape(-1)
    cdef const double[::1] ptv = pt_arr.reshape(-1)
    cdef Py_ssize_t m = prv.shape[0]
    cdef int n_f = vals.shape[0]
    cdef int n_r = vals.shape[1]
    cdef int n_t = vals.shape[2]
    out_arr = np.empty((n_f, m))
    cdef double[:, ::1] out = out_arr
    cdef double two_pi = 2.0 * M_PI
    cdef double dth = two_pi / n_t
    cdef double r_edge = r0 + (n_r - 0.5) * dr
    cdef Py_ssize_t p
    cdef int a, b, f, k, jj, i0, j0
    cdef double fi, tr, fj, tt, acc, v, lo, hi, ang
    cdef int rows[4]
    cdef int cols[4]
    cdef bint ghost[4]
    cdef double wr[4]
    cdef double wt[4]
    cdef double cv[4]
    for p in prange(m, nogil=True, num_threads=num_threads, schedule="static"):
        if outer_mode == 0 and prv[p] > r_edge:
            for f in range(n_f):
                out[f, p] = outer_value
            continue
        fi = (prv[p] - r0) / dr
        i0 = <int>floor(fi)
        tr = fi - i0
        ang = fmod(ptv[p], two_pi)
        if ang < 0.0:
            ang = ang + two_pi
        fj = ang / dth
        j0 = <int>floor(fj)
        tt = fj - j0
        j0 = j0 % n_t
        catmull_rom(tr, wr)
        catmull_rom(tt, wt)
        for a in range(4):
            k = i0 - 1 + a
            ghost[a] = outer_mode == 0 and k > n_r - 1
            if k < 0:
                k = 0
            if k > n_r - 1:
                k = n_r - 1
            rows[a] = k
            cols[a] = (j0 - 1 + a + n_t) % n_t
        for f in range(n_f):
            acc = 0.0
            for a in range(4):
                for b in range(4):
                    if ghost[a]:
                        v = outer_value
                    else:
                        v = vals[f, rows[a], cols[b]]
                    if (a == 1 or a == 2) and (b == 1 or b == 2):
                        cv[(a - 1) * 2 + (b - 1)] = v
                    acc = acc + wr[a] * wt[b] * v
            if limiter:
                lo = fmin(fmin(cv[0], cv[1]), fmin(cv[2], cv[3]))
                hi = fmax(fmax(cv[0], cv[1]), fmax(cv[2], cv[3]))
                acc = fmin(fmax(acc, lo), hi)
            out[f, p] = acc
    if single:
        return out_arr[0].reshape(shape)
    return out_arr.reshape((n_f,) + shape)
