# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled first-layer kernels (fused sin/cos and single-pass reverse sweep)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    SIN = 0
    TANH = 1
    RELU3 = 2


def first_layer_stack(double[::1] x, double[::1] kappa, double[::1] w,
                      double[::1] b, int act):
    cdef Py_ssize_t N = x.shape[0], n = kappa.shape[0], i, j
    if act < 0 or act > 2:
        raise ValueError(f"unknown activation code {act}")
    out_arr = np.empty((4, N, n))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i in range(N):
            for j in range(n):
                out[0, i, j] = kappa[j] * (w[j] * x[i] + b[j])
    _fill(out_arr, act)
    return out_arr


cdef void _derivs(double[:, :, ::1] out, int act) noexcept nogil:
    # slot 0 holds the pre-activation on entry (or sin/tanh already applied)
    cdef Py_ssize_t N = out.shape[1], n = out.shape[2], i, j
    cdef double t, q, r, a
    for i in range(N):
        for j in range(n):
            if act == SIN:
                out[2, i, j] = -out[0, i, j]
                out[3, i, j] = -out[1, i, j]
            elif act == TANH:
                t = out[0, i, j]
                q = 1.0 - t * t
                out[1, i, j] = q
                out[2, i, j] = -2.0 * t * q
                out[3, i, j] = q * (6.0 * t * t - 2.0)
            else:
                a = out[0, i, j]
                r = a if a > 0.0 else 0.0
                out[0, i, j] = r * r * r
                out[1, i, j] = 3.0 * r * r
                out[2, i, j] = 6.0 * r
                out[3, i, j] = 6.0 if a > 0.0 else 0.0


def _fill(out_arr, int act):
    # vectorized transcendentals from numpy, polynomial tails in one C pass
    if act == SIN:
        np.cos(out_arr[0], out=out_arr[1])
        np.sin(out_arr[0], out=out_arr[0])
    elif act == TANH:
        np.tanh(out_arr[0], out=out_arr[0])
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        _derivs(out, act)


def first_layer_vjp(double[::1] x, double[::1] kappa, double[::1] w,
                    double[:, :, ::1] D, double[:, ::1] zb0, zb1, zb2):
    cdef Py_ssize_t N = x.shape[0], n = kappa.shape[0], i, j
    cdef bint has1 = zb1 is not None, has2 = zb2 is not None
    cdef double[:, ::1] g1
    cdef double[:, ::1] g2
    if has1:
        g1 = zb1
    if has2:
        g2 = zb2
    gw_arr = np.zeros(n)
    gb_arr = np.zeros(n)
    cdef double[::1] gw = gw_arr, gb = gb_arr
    cdef double k, kw, kx, d1, d2, d3
    # row-major sweep: contiguous reads, per-column accumulators
    with nogil:
        for i in range(N):
            for j in range(n):
                k = kappa[j]
                kw = k * w[j]
                kx = k * x[i]
                d1 = D[1, i, j]
                gw[j] += zb0[i, j] * d1 * kx
                gb[j] += zb0[i, j] * d1 * k
                if has1:
                    d2 = D[2, i, j]
                    gw[j] += g1[i, j] * (d2 * kx * kw + d1 * k)
                    gb[j] += g1[i, j] * d2 * k * kw
                if has2:
                    d2 = D[2, i, j]
                    d3 = D[3, i, j]
                    gw[j] += g2[i, j] * (d3 * kx * kw * kw + d2 * 2.0 * k * kw)
                    gb[j] += g2[i, j] * d3 * k * kw * kw
    return gw_arr, gb_arr


def activation_stack(p_in, int act):
    """σ and its first three derivatives at a 2-D pre-activation array."""
    if act != TANH and act != RELU3:
        raise ValueError(f"unsupported hidden activation code {act}")
    p = np.asarray(p_in, dtype=np.float64)
    out_arr = np.empty((4,) + p.shape)
    out_arr[0] = p
    _fill(out_arr, act)
    return out_arr
