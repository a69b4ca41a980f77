"""Rank-1 lattices: reconstruction tests, minimal sizes, and fooling index sets.

A rank-1 lattice with ``M`` points and generator ``z`` reconstructs the
trigonometric space on ``I`` exactly when the residues ``<k, z> mod M`` are
pairwise distinct over ``k`` in ``I``.  All decisions here use integer
arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import BigIntRequired, InvalidInput, Partial
from .indexsets import MultiIndexSet

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class Rank1Lattice:
    """Points ``(i z / M) mod 1`` for ``i = 0..M-1``."""

    M: int
    z: tuple

    def __post_init__(self):
        if self.M < 1:
            raise InvalidInput("lattice size must be positive")
        object.__setattr__(self, "z", tuple(int(v) for v in np.atleast_1d(self.z)))

    @property
    def dim(self) -> int:
        return len(self.z)

    @property
    def degenerate(self) -> bool:
        """True when ``gcd(M, z_1, ..., z_d) > 1`` (points repeat)."""
        return math.gcd(self.M, *self.z) != 1

    def points(self) -> np.ndarray:
        i = np.arange(self.M, dtype=np.int64)[:, None]
        zm = np.mod(np.array(self.z, dtype=np.int64), self.M)
        return np.mod(i * zm[None, :], self.M) / self.M


def reconstructs(lattice: Rank1Lattice, I: MultiIndexSet) -> bool:
    """Whether ``<k, z> mod M`` are distinct over ``I``."""
    if lattice.dim != I.dim:
        raise InvalidInput("lattice and index set dimensions differ")
    if len(I) > lattice.M:
        return False
    z = np.mod(np.array(lattice.z, dtype=object), lattice.M).astype(np.int64)
    return bool(kernels.residues_distinct(I.array, z, lattice.M))


def minimal_lattice_size(I: MultiIndexSet, M_max: int, M_min: int | None = None, budget: float = 2e9):
    """Smallest ``M <= M_max`` admitting a reconstructing generator.

    Sizes are scanned upward from ``max(|I|, M_min)``; for each size the
    generators are scanned lexicographically and the first hit is the
    witness.  Returns ``(M, z)``, ``(None, None)`` if no size qualifies, or
    a falsy :class:`Partial` when the next size would push the number of
    scanned generators past ``budget``.
    """
    start = max(len(I), M_min or 1)
    spent = 0.0
    for M in range(start, M_max + 1):
        cost = float(M) ** I.dim
        if spent + cost > budget:
            return Partial((start, M - 1), details={"next_size": M, "scanned_generators": spent})
        z = kernels.first_generator(I.array, M)
        if z is not None:
            return M, tuple(int(v) for v in z)
        spent += cost
    return None, None


def all_generators_fail(I: MultiIndexSet, M: int) -> bool:
    """True if no generator of size ``M`` reconstructs ``I``."""
    return kernels.first_generator(I.array, M) is None


def fooling_index_set(a, b, M: int) -> MultiIndexSet:
    """The pair ``{a, a + M! b}``.

    Every rational point with denominator at most ``M`` is a zero of
    ``e_a - e_{a + M! b}``, so no lattice with at most ``M`` points can
    tell the two frequencies apart.

    Raises
    ------
    BigIntRequired
        When a coordinate leaves the signed 64-bit range (from ``M = 21``).
    """
    a = [int(v) for v in np.atleast_1d(a)]
    b = [int(v) for v in np.atleast_1d(b)]
    if len(a) != len(b):
        raise InvalidInput("a and b must have the same dimension")
    if not any(b):
        raise InvalidInput("b must be nonzero")
    if M < 1:
        raise InvalidInput("M must be positive")
    fact = math.factorial(M)
    second = [ai + fact * bi for ai, bi in zip(a, b)]
    if fact > INT64_MAX or any(abs(v) > INT64_MAX for v in second + a):
        raise BigIntRequired(f"{M}! * b does not fit in 64-bit integers")
    return MultiIndexSet(np.array([a, second], dtype=np.int64))


def rational_grid_axis(M: int) -> list[Fraction]:
    """Distinct rationals ``l/K`` in [0, 1) with ``1 <= K <= M``."""
    return sorted({Fraction(l, K) for K in range(1, M + 1) for l in range(K)})


def verify_fooling(I: MultiIndexSet, M: int, samples_per_axis: int | None = None) -> dict:
    """Evaluate ``f = e_a - e_a'`` on every point of the rational grid.

    Phases ``<k, x> mod 1`` are reduced exactly as fractions before the
    exponential, so large frequencies lose nothing.  ``samples_per_axis``
    optionally truncates each axis to its first entries.
    """
    if len(I) != 2:
        raise InvalidInput("a fooling set has exactly two frequencies")
    axis = rational_grid_axis(M)
    if samples_per_axis is not None:
        axis = axis[:samples_per_axis]
    k1, k2 = ([int(v) for v in row] for row in I.array)
    worst = 0.0
    count = 0
    for x in itertools.product(axis, repeat=I.dim):
        ph1 = sum((Fraction(k) * xi for k, xi in zip(k1, x)), Fraction(0)) % 1
        ph2 = sum((Fraction(k) * xi for k, xi in zip(k2, x)), Fraction(0)) % 1
        val = np.exp(2j * np.pi * float(ph1)) - np.exp(2j * np.pi * float(ph2))
        worst = max(worst, abs(val))
        count += 1
    return {"max_abs": float(worst), "grid_points": count, "axis_points": len(axis), "l2_norm_sq": 2.0,
            "vanishes": bool(worst <= 1e-9)}


def lattices_refuted(I: MultiIndexSet, M: int) -> bool:
    """True if every rank-1 lattice with at most ``M`` points fails on ``I``."""
    return all(all_generators_fail(I, Mp) for Mp in range(1, M + 1))
