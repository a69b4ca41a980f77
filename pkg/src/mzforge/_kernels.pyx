# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: exact fractional phases and rank-1 lattice scanning.

The pure-Python twin lives in ``_kernels_py``; both expose the same
functions with identical semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fma, floor

cnp.import_array()

BACKEND = "cython"


def frac_phase(const double[:, ::1] points, const long long[:, ::1] freqs):
    """fract(<k, x>) for every point/frequency pair, shape (N, n).

    Each product k_j * x_j is split into its rounded value and the exact
    rounding error (fma), so the integer part can be discarded without
    losing the low-order bits.  Frequencies must satisfy |k| < 2**53.
    """
    cdef Py_ssize_t N = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t n = freqs.shape[0]
    cdef Py_ssize_t i, l, j
    cdef double k, x, p, e, acc, comp
    out = np.empty((N, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(N):
        for l in range(n):
            acc = 0.0
            comp = 0.0
            for j in range(d):
                k = <double> freqs[l, j]
                x = points[i, j]
                p = k * x
                e = fma(k, x, -p)
                acc += p - floor(p)
                comp += e
            acc = acc - floor(acc)
            acc = acc + comp
            acc = acc - floor(acc)
            if acc >= 1.0:
                acc -= 1.0
            o[i, l] = acc
    return out


cdef bint _distinct(const long long[:, ::1] kmod, const long long[::1] z, long long M,
                    long long[::1] stamp, long long tag) nogil:
    cdef Py_ssize_t n = kmod.shape[0]
    cdef Py_ssize_t d = kmod.shape[1]
    cdef Py_ssize_t l, j
    cdef long long r
    for l in range(n):
        r = 0
        for j in range(d):
            r = (r + kmod[l, j] * z[j]) % M
        if stamp[r] == tag:
            return False
        stamp[r] = tag
    return True


def residues_distinct(const long long[:, ::1] kmod, const long long[::1] z, long long M):
    """True iff <k, z> mod M are pairwise distinct over the rows of kmod.

    kmod must already be reduced into [0, M).
    """
    stamp = np.zeros(M, dtype=np.int64)
    return bool(_distinct(kmod, z, M, stamp, 1))


def first_generator(const long long[:, ::1] kmod, long long M):
    """Lexicographically first z in {0..M-1}^d with distinct residues, or None."""
    cdef Py_ssize_t d = kmod.shape[1]
    cdef Py_ssize_t j
    cdef long long tag = 0
    if kmod.shape[0] > M:
        return None
    z_arr = np.zeros(d, dtype=np.int64)
    stamp_arr = np.zeros(M, dtype=np.int64)
    cdef long long[::1] z = z_arr
    cdef long long[::1] stamp = stamp_arr
    while True:
        tag += 1
        if _distinct(kmod, z, M, stamp, tag):
            return z_arr.copy()
        j = d - 1
        while j >= 0:
            z[j] += 1
            if z[j] < M:
                break
            z[j] = 0
            j -= 1
        if j < 0:
            return None
