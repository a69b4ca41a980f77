"""Pure-Python (numpy) fallback for the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

BACKEND = "python"

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_product(a, b):
    # Dekker: p + e == a * b exactly (no overflow assumed)
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def frac_phase(points, freqs):
    points = np.ascontiguousarray(points, dtype=np.float64)
    k = np.ascontiguousarray(freqs, dtype=np.int64).astype(np.float64)
    p, e = _two_product(k[None, :, :], points[:, None, :])
    acc = np.sum(p - np.floor(p), axis=2)
    acc -= np.floor(acc)
    acc += np.sum(e, axis=2)
    acc -= np.floor(acc)
    acc[acc >= 1.0] -= 1.0
    return acc


def residues_distinct(kmod, z, M):
    kmod = np.asarray(kmod, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    r = np.zeros(kmod.shape[0], dtype=np.int64)
    for j in range(kmod.shape[1]):
        r = (r + kmod[:, j] * z[j]) % M
    return len(np.unique(r)) == len(r)


def first_generator(kmod, M, chunk=1 << 16):
    kmod = np.asarray(kmod, dtype=np.int64)
    n, d = kmod.shape
    if n > M:
        return None
    total = M**d
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        # lexicographic order: last coordinate varies fastest
        Z = np.empty((len(idx), d), dtype=np.int64)
        rem = idx
        for j in range(d - 1, -1, -1):
            Z[:, j] = rem % M
            rem = rem // M
        r = np.zeros((len(idx), n), dtype=np.int64)
        for j in range(d):
            r = (r + Z[:, j, None] * kmod[None, :, j]) % M
        r.sort(axis=1)
        ok = np.all(np.diff(r, axis=1) != 0, axis=1) if n > 1 else np.ones(len(idx), bool)
        hit = np.flatnonzero(ok)
        if hit.size:
            return Z[hit[0]].copy()
    return None
