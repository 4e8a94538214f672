# cython: language_level=3
"""Compiled versions of the hot kernels; see ``_fallback.py`` for semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def lowpass_eval(points, modes, coeffs, double k0):
    cdef const double[:, ::1] x = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[:, ::1] m = np.ascontiguousarray(modes, dtype=np.int64)
    cdef const double complex[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef Py_ssize_t n_pts = x.shape[0]
    cdef Py_ssize_t n_modes = m.shape[0]
    cdef Py_ssize_t n_fields = c.shape[0]
    out_arr = np.zeros((n_fields, n_pts), dtype=np.complex128)
    if n_modes == 0 or n_pts == 0:
        return out_arr
    cdef double complex[:, ::1] out = out_arr

    cdef long long mmax = 0
    cdef Py_ssize_t q, p, f, d
    for q in range(n_modes):
        for d in range(3):
            if m[q, d] > mmax:
                mmax = m[q, d]
            if -m[q, d] > mmax:
                mmax = -m[q, d]
    cdef Py_ssize_t width = 2 * mmax + 1

    # split real/imaginary parts, transposed so the inner loop is contiguous
    ct = np.ascontiguousarray(np.asarray(c).T)
    cdef const double[:, ::1] cr = np.ascontiguousarray(ct.real)
    cdef const double[:, ::1] ci = np.ascontiguousarray(ct.imag)
    cdef double[:, ::1] er = np.empty((3, width))
    cdef double[:, ::1] ei = np.empty((3, width))
    cdef double[::1] accr = np.empty(n_fields)
    cdef double[::1] acci = np.empty(n_fields)
    cdef double ang, pr, pi, tr, ti
    cdef long long j, i0, i1, i2

    for p in range(n_pts):
        for d in range(3):
            ang = k0 * x[p, d]
            er[d, mmax] = 1.0
            ei[d, mmax] = 0.0
            for j in range(1, mmax + 1):
                # direct evaluation keeps the error independent of mmax
                er[d, mmax + j] = cos(ang * j)
                ei[d, mmax + j] = sin(ang * j)
                er[d, mmax - j] = er[d, mmax + j]
                ei[d, mmax - j] = -ei[d, mmax + j]
        for f in range(n_fields):
            accr[f] = 0.0
            acci[f] = 0.0
        for q in range(n_modes):
            i0 = m[q, 0] + mmax
            i1 = m[q, 1] + mmax
            i2 = m[q, 2] + mmax
            tr = er[0, i0] * er[1, i1] - ei[0, i0] * ei[1, i1]
            ti = er[0, i0] * ei[1, i1] + ei[0, i0] * er[1, i1]
            pr = tr * er[2, i2] - ti * ei[2, i2]
            pi = tr * ei[2, i2] + ti * er[2, i2]
            for f in range(n_fields):
                accr[f] += cr[q, f] * pr - ci[q, f] * pi
                acci[f] += cr[q, f] * pi + ci[q, f] * pr
        for f in range(n_fields):
            out[f, p] = accr[f] + 1j * acci[f]
    return out_arr


def dirac_source(psi, A):
    cdef const double[:, ::1] s = np.ascontiguousarray(psi, dtype=np.complex128).view(np.float64)
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[1]
    out_arr = np.empty((4, n), dtype=np.complex128)
    cdef double[:, ::1] out = out_arr.view(np.float64)
    cdef Py_ssize_t i, r, im
    cdef double u1r, u1i, u2r, u2i, v1r, v1i, v2r, v2i
    cdef double a0, a1, a2, a3
    for i in range(n):
        r = 2 * i
        im = r + 1
        u1r = s[0, r]; u1i = s[0, im]; u2r = s[1, r]; u2i = s[1, im]
        v1r = s[2, r]; v1i = s[2, im]; v2r = s[3, r]; v2i = s[3, im]
        a0 = a[0, i]; a1 = a[1, i]; a2 = a[2, i]; a3 = a[3, i]
        # -i a2 w = a2 * (w.imag - i w.real)
        out[0, r] = a0 * u1r + a1 * v2r + a2 * v2i + a3 * v1r
        out[0, im] = a0 * u1i + a1 * v2i - a2 * v2r + a3 * v1i
        out[1, r] = a0 * u2r + a1 * v1r - a2 * v1i - a3 * v2r
        out[1, im] = a0 * u2i + a1 * v1i + a2 * v1r - a3 * v2i
        out[2, r] = a0 * v1r + a1 * u2r + a2 * u2i + a3 * u1r
        out[2, im] = a0 * v1i + a1 * u2i - a2 * u2r + a3 * u1i
        out[3, r] = a0 * v2r + a1 * u1r - a2 * u1i - a3 * u2r
        out[3, im] = a0 * v2i + a1 * u1i + a2 * u1r - a3 * u2i
    return out_arr


def current(psi):
    cdef const double[:, ::1] s = np.ascontiguousarray(psi, dtype=np.complex128).view(np.float64)
    cdef Py_ssize_t n = s.shape[1] // 2
    out_arr = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, r, im
    cdef double u1r, u1i, u2r, u2i, v1r, v1i, v2r, v2i
    for i in range(n):
        r = 2 * i
        im = r + 1
        u1r = s[0, r]; u1i = s[0, im]; u2r = s[1, r]; u2i = s[1, im]
        v1r = s[2, r]; v1i = s[2, im]; v2r = s[3, r]; v2i = s[3, im]
        out[0, i] = -(u1r * u1r + u1i * u1i + u2r * u2r + u2i * u2i
                      + v1r * v1r + v1i * v1i + v2r * v2r + v2i * v2i)
        # conj(u1) v2 + conj(u2) v1, conj(u1) v2 - conj(u2) v1, conj(u1) v1 - conj(u2) v2
        out[1, i] = 2.0 * (u1r * v2r + u1i * v2i + u2r * v1r + u2i * v1i)
        out[2, i] = 2.0 * ((u1r * v2i - u1i * v2r) - (u2r * v1i - u2i * v1r))
        out[3, i] = 2.0 * ((u1r * v1r + u1i * v1i) - (u2r * v2r + u2i * v2i))
    return out_arr
