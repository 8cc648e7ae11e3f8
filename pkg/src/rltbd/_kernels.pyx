# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled TBD likelihood kernels.

All kernels work on a separable range x bearing grid: the PSF of cell (i, l)
is ``fr[i] * fb[l]``, so only ``n_range + n_bearing`` exponentials are needed
per state. Cells whose range or bearing factor falls below ``gate`` are
skipped; ``gate = 0`` evaluates every cell.
"""
from libc.math cimport exp
from libc.stdlib cimport malloc, free

import numpy as np


cdef inline void _factors(const double[::1] centers, double pos, double scale,
                          double* f, double* d) noexcept nogil:
    cdef Py_ssize_t i
    cdef double delta
    for i in range(centers.shape[0]):
        delta = centers[i] - pos
        d[i] = delta
        f[i] = exp(-delta * delta / (2.0 * scale))


cdef double _mismatch(const double[:, ::1] z, const double[::1] rc, const double[::1] bc,
                      double R, double B, double amp, double r, double b, double gate,
                      double* fr, double* dr, double* fb, double* db) noexcept nogil:
    cdef Py_ssize_t i, l
    cdef Py_ssize_t nr = rc.shape[0], nb = bc.shape[0]
    cdef double s = 0.0, ai, yh
    _factors(rc, r, R, fr, dr)
    _factors(bc, b, B, fb, db)
    for i in range(nr):
        if fr[i] < gate:
            continue
        ai = amp * fr[i]
        for l in range(nb):
            if fb[l] < gate:
                continue
            yh = ai * fb[l]
            s += yh * (yh - 2.0 * z[i, l])
    return s


def mismatch(const double[:, ::1] z, const double[::1] rc, const double[::1] bc,
             double R, double B, double amp, double r, double b, double gate=0.0):
    """Return ``sum_j yhat_j * (yhat_j - 2 z_j)`` for the state at polar (r, b)."""
    cdef Py_ssize_t nr = rc.shape[0], nb = bc.shape[0]
    cdef double* buf = <double*> malloc(2 * (nr + nb) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double s
    try:
        s = _mismatch(z, rc, bc, R, B, amp, r, b, gate,
                      buf, buf + nr, buf + 2 * nr, buf + 2 * nr + nb)
    finally:
        free(buf)
    return s


def mismatch_many(const double[:, ::1] z, const double[::1] rc, const double[::1] bc,
                  double R, double B, double amp, const double[::1] r, const double[::1] b,
                  double gate=0.0):
    """Vectorised :func:`mismatch` over arrays of polar positions."""
    cdef Py_ssize_t n = r.shape[0], k
    cdef Py_ssize_t nr = rc.shape[0], nb = bc.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double* buf = <double*> malloc(2 * (nr + nb) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(n):
                o[k] = _mismatch(z, rc, bc, R, B, amp, r[k], b[k], gate,
                                 buf, buf + nr, buf + 2 * nr, buf + 2 * nr + nb)
    finally:
        free(buf)
    return out


def polar_score(const double[:, ::1] z, const double[::1] rc, const double[::1] bc,
                double R, double B, double amp, double r, double b, double gate=0.0):
    """Mismatch plus polar score and information sums.

    Returns ``(s, g_r, g_b, f_rr, f_rb, f_bb)`` where ``g`` sums
    ``(z - yhat) * d yhat/d(r, b)`` and ``f`` sums the outer products of
    ``d yhat/d(r, b)``. Noise variance scaling is left to the caller.
    """
    cdef Py_ssize_t i, l
    cdef Py_ssize_t nr = rc.shape[0], nb = bc.shape[0]
    cdef double s = 0.0, g_r = 0.0, g_b = 0.0, f_rr = 0.0, f_rb = 0.0, f_bb = 0.0
    cdef double ai, yh, res, pr, pb, kr
    cdef double* buf = <double*> malloc(2 * (nr + nb) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* fr = buf
    cdef double* dr = buf + nr
    cdef double* fb = buf + 2 * nr
    cdef double* db = buf + 2 * nr + nb
    try:
        with nogil:
            _factors(rc, r, R, fr, dr)
            _factors(bc, b, B, fb, db)
            for i in range(nr):
                if fr[i] < gate:
                    continue
                ai = amp * fr[i]
                kr = dr[i] / R
                for l in range(nb):
                    if fb[l] < gate:
                        continue
                    yh = ai * fb[l]
                    res = z[i, l] - yh
                    s += yh * (yh - 2.0 * z[i, l])
                    pr = yh * kr
                    pb = yh * db[l] / B
                    g_r += res * pr
                    g_b += res * pb
                    f_rr += pr * pr
                    f_rb += pr * pb
                    f_bb += pb * pb
    finally:
        free(buf)
    return s, g_r, g_b, f_rr, f_rb, f_bb
