"""Carathéodory support reduction for sums of rank-1 Hermitian atoms.

Each atom ``phi(x) phi(x)^*`` is mapped to a real vector in a basis of the
real span of all such matrices.  Weighted sums of atoms are then linear in
those vectors, so removing atoms along null directions of the atom matrix
keeps the Gramian fixed while the weights stay nonnegative.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from . import kernels
from .design import DiscreteMeasure
from .errors import InvalidInput
from .indexsets import difference_set
from .systems import FunctionSystem, TrigSystem

RANK_TOL = 1e-10


class RankAmbiguityWarning(UserWarning):
    """A pivot of the rank-revealing QR sat close to the rank threshold."""


# ---------------------------------------------------------------------------
# vectorization


def _half_frequencies(D: np.ndarray) -> np.ndarray:
    """Representatives v > 0 (first nonzero coordinate positive) of D \\ {0}."""
    nz = D != 0
    first = np.argmax(nz, axis=1)
    sign = D[np.arange(len(D)), first]
    return D[(sign > 0) & nz.any(axis=1)]


def trig_vectorize(system: TrigSystem, X) -> np.ndarray:
    """Rows ``1, cos 2pi<v,x>, sin 2pi<v,x>`` for v in half of D(I); shape (|D|, N)."""
    D = difference_set(system.index_set).array
    H = _half_frequencies(D)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ph = 2.0 * np.pi * kernels.frac_phase(X, H)
    return np.vstack([np.ones((1, len(X))), np.cos(ph).T, np.sin(ph).T])


def hermitian_vectorize(P: np.ndarray) -> np.ndarray:
    """Real coordinates of ``p p^*`` for each row p of ``P``; shape (n^2, N)."""
    n = P.shape[1]
    iu = np.triu_indices(n)
    su = np.triu_indices(n, 1)
    outer = P[:, :, None] * P.conj()[:, None, :]
    return np.vstack([outer[:, iu[0], iu[1]].real.T, outer[:, su[0], su[1]].imag.T])


def row_basis(V: np.ndarray, tol: float = RANK_TOL):
    """Indices of rows of ``V`` forming a numerical basis of its row space.

    Uses QR with column pivoting on ``V^T``.  A warning is emitted when a
    diagonal entry of R is within a factor 10 of the threshold.
    """
    if V.size == 0:
        return np.arange(0), False
    _, R, piv = qr(V.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.arange(0), False
    thresh = tol * diag[0]
    rank = int(np.sum(diag > thresh))
    ambiguous = bool(np.any((diag > thresh / 10) & (diag < thresh * 10)))
    if ambiguous:
        warnings.warn(
            f"numerical rank {rank} is ambiguous: a pivot lies within a factor 10 of {thresh:.2e}",
            RankAmbiguityWarning,
            stacklevel=3,
        )
    return np.sort(piv[:rank]), ambiguous


@dataclass
class AtomizedGramian:
    """A design together with the real vectorization of its atoms.

    Attributes
    ----------
    vectors : ndarray, shape (span_dim, N)
        Real coordinates of ``phi(x_i) phi(x_i)^*`` in a basis of the span.
    span_dim : int
        Dimension of that span (``|D(I)|`` for trigonometric systems).
    """

    system: FunctionSystem
    measure: DiscreteMeasure
    vectors: np.ndarray
    span_dim: int
    ambiguous_rank: bool = False

    @classmethod
    def build(cls, system: FunctionSystem, measure: DiscreteMeasure, tol: float = RANK_TOL):
        if measure.dim != system.d:
            raise InvalidInput("measure and system dimensions differ")
        if isinstance(system, TrigSystem):
            V = trig_vectorize(system, measure.points)
            return cls(system, measure, V, V.shape[0])
        V = hermitian_vectorize(system.evaluate(measure.points))
        rows, amb = row_basis(V, tol)
        return cls(system, measure, V[rows], len(rows), amb)


def span_dimension(system: FunctionSystem, rng=None, tol: float = RANK_TOL) -> int:
    """Dimension of ``span{phi(x) phi(x)^*}`` over the domain.

    Exact for trigonometric systems; otherwise the numerical rank of the
    vectorized atoms at ``2 n^2 + 10`` random points.
    """
    if isinstance(system, TrigSystem):
        return system.product_span_dimension
    rng = np.random.default_rng(0) if rng is None else rng
    X = system.sample(rng, 2 * system.n**2 + 10)
    rows, _ = row_basis(hermitian_vectorize(system.evaluate(X)), tol)
    return len(rows)


# ---------------------------------------------------------------------------
# elimination


def _eliminate(V: np.ndarray, w: np.ndarray, max_atoms: int) -> np.ndarray:
    """Zero out weights along null directions of ``V`` until at most
    ``max_atoms`` remain; ``V @ w`` is preserved."""
    w = w.astype(float).copy()
    r = V.shape[0]
    active = list(np.flatnonzero(w > 0))
    while len(active) > max_atoms:
        T = np.array(active[: r + 1])
        sub = V[:, T]
        _, _, Vh = np.linalg.svd(sub, full_matrices=True)
        c = Vh[-1]
        if c.max() <= 0:
            c = -c
        pos = c > 0
        ratios = np.full(len(T), np.inf)
        ratios[pos] = w[T][pos] / c[pos]
        j = int(np.argmin(ratios))
        w[T] = w[T] - ratios[j] * c
        w[T[j]] = 0.0
        w[T] = np.maximum(w[T], 0.0)
        active = [i for i in active if w[i] > 0]
    return w


def _reduce(ag: AtomizedGramian, convex: bool) -> DiscreteMeasure:
    meas = ag.measure
    V = ag.vectors
    if convex:
        V = np.vstack([V, np.ones((1, V.shape[1]))])
    limit = ag.span_dim + (1 if convex else 0)
    w = meas.weights
    if len(w) <= limit:
        keep = np.arange(len(w))
    elif np.count_nonzero(w) <= limit:
        keep = np.flatnonzero(w > 0)
    else:
        w = _eliminate(V, w, limit)
        keep = np.flatnonzero(w > 0)
    new_w = w[keep]
    assert len(keep) <= limit
    mode = "conic"
    if convex:
        new_w = new_w / new_w.sum()
        mode = "probability"
    src = keep if meas.source_indices is None else meas.source_indices[keep]
    return DiscreteMeasure(meas.points[keep], new_w, mode, source_indices=src)


def _prepare(system_or_ag, measure, tol):
    if isinstance(system_or_ag, AtomizedGramian):
        return system_or_ag
    return AtomizedGramian.build(system_or_ag, measure, tol)


def reduce_conic(ag, measure=None, tol: float = RANK_TOL) -> DiscreteMeasure:
    """Keep at most ``span_dim`` atoms with the same Gramian.

    Accepts an :class:`AtomizedGramian` or ``(system, measure)``.
    """
    return _reduce(_prepare(ag, measure, tol), convex=False)


def reduce_convex(ag, measure=None, tol: float = RANK_TOL) -> DiscreteMeasure:
    """Keep at most ``span_dim + 1`` atoms with the same Gramian and unit mass."""
    ag = _prepare(ag, measure, tol)
    if abs(ag.measure.weights.sum() - 1.0) > 1e-12:
        raise InvalidInput("convex reduction needs weights summing to one")
    return _reduce(ag, convex=True)


def reduce_moment_vector(values, weights, tol: float = RANK_TOL, convex: bool = True):
    """Reduce a weighted sum of real vectors to few atoms.

    Parameters
    ----------
    values : array_like, shape (dim, N)
        One real column per atom.
    weights : array_like, shape (N,)
        Nonnegative weights.
    convex : bool
        Also preserve the total weight.

    Returns
    -------
    keep : ndarray of int
        Indices of surviving atoms (at most ``rank + 1``, so at most ``dim + 1``).
    new_weights : ndarray
        Their weights.
    """
    V = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if V.ndim != 2 or V.shape[1] != len(w):
        raise InvalidInput("values must have shape (dim, N) matching the weights")
    if np.any(w < 0):
        raise InvalidInput("weights must be nonnegative")
    if convex:
        V = np.vstack([V, np.ones((1, V.shape[1]))])
    rows, _ = row_basis(V, tol)
    V = V[rows]
    limit = len(rows)
    if len(w) <= limit:
        return np.arange(len(w)), w.copy()
    if np.count_nonzero(w) <= limit:
        keep = np.flatnonzero(w > 0)
        return keep, w[keep]
    w = _eliminate(V, w, limit)
    keep = np.flatnonzero(w > 0)
    return keep, w[keep]
