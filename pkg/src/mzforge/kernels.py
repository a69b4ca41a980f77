"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``MZFORGE_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy fallback is used.  Both backends return identical results.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_MAX_EXACT_FREQ = 2**53


def _load():
    if os.environ.get("MZFORGE_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py
    return _kernels


_impl = _load()
BACKEND: str = _impl.BACKEND


def backends():
    """Return every importable backend module, compiled first."""
    out = []
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out.append(_kernels)
    except ImportError:
        pass
    out.append(_kernels_py)
    return out


def frac_phase(points, freqs, backend=None):
    """Fractional part of <k, x> for points (N, d) and integer freqs (n, d)."""
    impl = backend or _impl
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    freqs = np.ascontiguousarray(np.atleast_2d(freqs), dtype=np.int64)
    if freqs.size and np.abs(freqs).max() >= _MAX_EXACT_FREQ:
        raise OverflowError("frequencies must be below 2**53 in magnitude")
    return impl.frac_phase(points, freqs)


def residues_distinct(freqs, z, M, backend=None):
    impl = backend or _impl
    kmod = np.ascontiguousarray(np.mod(np.atleast_2d(freqs), M), dtype=np.int64)
    return impl.residues_distinct(kmod, np.ascontiguousarray(z, dtype=np.int64), int(M))


def first_generator(freqs, M, backend=None):
    impl = backend or _impl
    kmod = np.ascontiguousarray(np.mod(np.atleast_2d(freqs), M), dtype=np.int64)
    return impl.first_generator(kmod, int(M))
