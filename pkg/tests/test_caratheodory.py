import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mzforge.caratheodory import (AtomizedGramian, RankAmbiguityWarning, reduce_conic, reduce_convex,
                                  reduce_moment_vector, row_basis, span_dimension, trig_vectorize)
from mzforge.design import DiscreteMeasure, gramian
from mzforge.errors import InvalidInput
from mzforge.indexsets import MultiIndexSet, l1ball
from mzforge.systems import SphereSystem, TrigSystem, real_trig_system


def random_instance(seed):
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        n = int(rng.integers(1, 7))
        system = TrigSystem(MultiIndexSet(rng.choice(np.arange(-8, 9), size=n, replace=False)))
    else:
        system = real_trig_system(int(rng.integers(1, 3))) if rng.random() < 0.5 else SphereSystem(1)
    N = int(rng.integers(1, 501))
    w = rng.random(N)
    return system, DiscreteMeasure(system.sample(rng, N), w / w.sum(), "probability")


def relative_gap(system, a, b):
    A = gramian(system, a).entries
    B = gramian(system, b).entries
    return np.linalg.norm(A - B) / np.linalg.norm(A)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reductions_preserve_gramian(seed):
    system, measure = random_instance(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankAmbiguityWarning)
        ag = AtomizedGramian.build(system, measure)
        conic = reduce_conic(ag)
        convex = reduce_convex(ag)
    assert len(conic) <= ag.span_dim
    assert len(convex) <= ag.span_dim + 1
    assert convex.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert relative_gap(system, measure, conic) <= 1e-10
    assert relative_gap(system, measure, convex) <= 1e-10
    # reducing again changes nothing
    again = reduce_conic(system, conic)
    assert np.array_equal(again.points, conic.points) and np.array_equal(again.weights, conic.weights)


def test_trig_span_dimension_is_difference_set_size():
    system = TrigSystem(l1ball(2, 2))
    V = trig_vectorize(system, system.sample(np.random.default_rng(0), 400))
    assert V.shape[0] == system.product_span_dimension
    assert np.linalg.matrix_rank(V) == V.shape[0]


def test_numeric_span_dimension():
    # 1, cos, sin, cos2, sin2: real products span 1, cos k, sin k for k <= 4
    assert span_dimension(real_trig_system(2)) == 9
    assert span_dimension(SphereSystem(1)) == 9


def test_source_indices_point_into_original():
    system = TrigSystem(l1ball(1, 1))
    rng = np.random.default_rng(2)
    measure = DiscreteMeasure(rng.random((40, 1)), np.full(40, 1 / 40), "probability")
    out = reduce_convex(system, measure)
    np.testing.assert_array_equal(measure.points[out.source_indices], out.points)


def test_convex_requires_unit_mass():
    system = TrigSystem(l1ball(1, 1))
    with pytest.raises(InvalidInput):
        reduce_convex(system, DiscreteMeasure(np.zeros((3, 1)), np.ones(3)))


def test_moment_vector_reduction():
    rng = np.random.default_rng(5)
    V = rng.standard_normal((4, 100))
    w = rng.random(100)
    keep, nw = reduce_moment_vector(V, w)
    assert len(keep) <= 5
    np.testing.assert_allclose(V[:, keep] @ nw, V @ w, rtol=1e-10)
    assert nw.sum() == pytest.approx(w.sum())


def test_rank_ambiguity_warns():
    V = np.diag([1.0, 3e-10])
    with pytest.warns(RankAmbiguityWarning):
        rows, ambiguous = row_basis(V)
    assert ambiguous
