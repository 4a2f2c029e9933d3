# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-scan and tree-routing kernels.

Kept in exact floating-point lockstep with ``_numpy``: sequential prefix
sums, identical gain expression shapes, first-strict-max candidate
selection, ties on missing direction stay left.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_split(double[::1] sorted_grad, double[::1] sorted_hess,
               cnp.int64_t[::1] candidates, double g_miss, double h_miss,
               double lam, double gamma, double min_child_hessian):
    cdef Py_ssize_t n = sorted_grad.shape[0]
    cdef Py_ssize_t nc = candidates.shape[0]
    if n == 0 or nc == 0:
        return (-np.inf, -1, True)

    cdef double[::1] cum_g = np.empty(n)
    cdef double[::1] cum_h = np.empty(n)
    cdef double ag = 0.0, ah = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        ag = ag + sorted_grad[i]
        ah = ah + sorted_hess[i]
        cum_g[i] = ag
        cum_h[i] = ah

    cdef double sum_g = cum_g[n - 1]
    cdef double sum_h = cum_h[n - 1]
    cdef double total_g = sum_g + g_miss
    cdef double total_h = sum_h + h_miss
    cdef double parent = (total_g * total_g) / (total_h + lam)

    cdef double neg_inf = -np.inf
    cdef double best_gain = neg_inf
    cdef Py_ssize_t best_b = -1
    cdef bint best_left = True

    cdef Py_ssize_t b
    cdef double gl, hl, gr, hr, gl_m, hl_m, gr_m, hr_m
    cdef double gain_left, gain_right, gain
    cdef bint missing_left
    for i in range(nc):
        b = candidates[i]
        gl = cum_g[b]
        hl = cum_h[b]
        gr = sum_g - gl
        hr = sum_h - hl

        gl_m = gl + g_miss
        hl_m = hl + h_miss
        if hl_m >= min_child_hessian and hr >= min_child_hessian:
            gain_left = 0.5 * ((gl_m * gl_m) / (hl_m + lam) + (gr * gr) / (hr + lam) - parent) - gamma
        else:
            gain_left = neg_inf

        gr_m = gr + g_miss
        hr_m = hr + h_miss
        if hl >= min_child_hessian and hr_m >= min_child_hessian:
            gain_right = 0.5 * ((gl * gl) / (hl + lam) + (gr_m * gr_m) / (hr_m + lam) - parent) - gamma
        else:
            gain_right = neg_inf

        missing_left = gain_right <= gain_left
        gain = gain_left if missing_left else gain_right
        if gain > best_gain:
            best_gain = gain
            best_b = b
            best_left = missing_left

    if best_b < 0:
        return (-np.inf, -1, True)
    return (best_gain, int(best_b), bool(best_left))


def route_tree(double[:, ::1] X, cnp.int32_t[::1] feature, double[::1] threshold,
               cnp.int32_t[::1] left, cnp.int32_t[::1] right,
               cnp.uint8_t[::1] default_left):
    cdef Py_ssize_t n = X.shape[0]
    out_arr = np.zeros(n, dtype=np.int32)
    cdef cnp.int32_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef cnp.int32_t node
    cdef cnp.int32_t f
    cdef double v
    for i in range(n):
        node = 0
        f = feature[node]
        while f >= 0:
            v = X[i, f]
            if v != v:  # NaN: missing
                node = left[node] if default_left[node] else right[node]
            elif v > threshold[node]:
                node = right[node]
            else:
                node = left[node]
            f = feature[node]
        out[i] = node
    return out_arr
