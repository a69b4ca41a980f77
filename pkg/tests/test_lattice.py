import itertools
from fractions import Fraction

import numpy as np
import pytest

from mzforge.errors import BigIntRequired, InvalidInput, Partial
from mzforge.indexsets import SPARSE_1D, SPARSE_2D, MultiIndexSet, cube, l1ball
from mzforge.lattice import (Rank1Lattice, fooling_index_set, lattices_refuted, minimal_lattice_size,
                             rational_grid_axis, reconstructs, verify_fooling)


def pairwise_differences_vanish_mod(I, M):
    """Oracle for 1-D sets: some difference is divisible by M for every unit generator."""
    return any(all((a - b) * z % M for a, b in itertools.combinations(I, 2)) for z in range(M))


def test_lattice_points():
    lat = Rank1Lattice(5, (1, 2))
    np.testing.assert_allclose(lat.points()[2], [0.4, 0.8])
    assert not lat.degenerate and Rank1Lattice(4, (2, 2)).degenerate


def test_sparse_2d_set_needs_113_points():
    I = MultiIndexSet(SPARSE_2D)
    M, z = minimal_lattice_size(I, 200)
    assert M == 113
    assert reconstructs(Rank1Lattice(M, z), I)
    assert not any(reconstructs(Rank1Lattice(112, zz), I) for zz in itertools.product(range(112), repeat=2))


def test_sparse_1d_set_minimal_size_from_arithmetic():
    I = MultiIndexSet(SPARSE_1D)
    M, z = minimal_lattice_size(I, 200)
    brute = min(m for m in range(10, 201) if pairwise_differences_vanish_mod(SPARSE_1D, m))
    assert (M, z) == (brute, (1,)) == (31, (1,))
    assert reconstructs(Rank1Lattice(103, (1,)), I)
    assert not any(reconstructs(Rank1Lattice(102, (zz,)), I) for zz in range(102))


def test_grid_lattice_reconstructs_cube():
    I = cube(2, 2)
    assert reconstructs(Rank1Lattice(16, (1, 4)), I)
    assert not reconstructs(Rank1Lattice(15, (1, 4)), I)


def test_search_reports_none_and_partial():
    I = l1ball(2, 3)
    assert minimal_lattice_size(I, 20) == (None, None)
    part = minimal_lattice_size(I, 500, budget=100)
    assert isinstance(part, Partial) and not part
    assert part.details["next_size"] == len(I)


def test_rational_grid_axis_counts():
    # Farey sequence sizes: 1 + sum phi(K)
    assert [len(rational_grid_axis(M)) for M in range(1, 7)] == [1, 2, 4, 6, 10, 12]
    assert Fraction(1, 3) in rational_grid_axis(3)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("M", [3, 4, 5])
def test_fooling_sets_are_refuted(d, M):
    I = fooling_index_set([0] * d, [1] + [0] * (d - 1), M)
    rep = verify_fooling(I, M)
    assert rep["vanishes"] and rep["max_abs"] <= 1e-9
    assert rep["grid_points"] == len(rational_grid_axis(M)) ** d
    assert lattices_refuted(I, M)


def test_fooling_limits():
    with pytest.raises(BigIntRequired):
        fooling_index_set([0], [1], 21)
    fooling_index_set([0], [1], 20)
    with pytest.raises(InvalidInput):
        fooling_index_set([0, 0], [0, 0], 3)
