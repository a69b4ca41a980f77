import numpy as np
import pytest

from conftest import objective_fd_error
from mzforge import bfgs
from mzforge.design import (DiscreteMeasure, OptimizerConfig, frobenius_parts, gramian, leverage, logdet_parts,
                            optimize_frobenius, optimize_logdet, restart_rng)
from mzforge.errors import InvalidInput
from mzforge.indexsets import l1ball
from mzforge.linalg import spectral_distance_to_identity
from mzforge.systems import SphereSystem, TrigSystem, christoffel_rescale, cosine_system, real_trig_system

GRADIENT_SYSTEMS = {
    "trig": (lambda: TrigSystem(l1ball(2, 2)), 20),
    "sphere": (lambda: SphereSystem(2), 15),
    "christoffel": (lambda: christoffel_rescale(real_trig_system(2)), 8),
}


@pytest.mark.parametrize("name", GRADIENT_SYSTEMS)
@pytest.mark.parametrize("parts", [frobenius_parts, logdet_parts], ids=["frobenius", "logdet"])
def test_gradients_match_central_differences(name, parts):
    make, N = GRADIENT_SYSTEMS[name]
    system = make()
    rng = np.random.default_rng(7)
    errs = [objective_fd_error(parts, system, rng, N) for _ in range(5)]
    assert max(errs) < 1e-5


def test_measure_validation():
    with pytest.raises(InvalidInput):
        DiscreteMeasure(np.zeros((3, 1)), [0.5, 0.5])
    with pytest.raises(InvalidInput):
        DiscreteMeasure(np.zeros((2, 1)), [1.5, -0.5])
    with pytest.raises(InvalidInput):
        DiscreteMeasure(np.zeros((2, 1)), [0.5, 0.4], "probability")
    with pytest.raises(InvalidInput):
        DiscreteMeasure([[np.inf]], [1.0])
    m = DiscreteMeasure.uniform(np.zeros((4, 2)))
    assert m.mode == "probability" and m.weights.sum() == pytest.approx(1.0)


def test_subset_tracks_source_indices():
    m = DiscreteMeasure(np.arange(5.0)[:, None], np.ones(5))
    sub = m.subset([1, 3]).subset([1])
    assert sub.source_indices.tolist() == [3]


def test_config_validation():
    with pytest.raises(InvalidInput):
        OptimizerConfig(weight_mode="sometimes")
    with pytest.raises(InvalidInput):
        OptimizerConfig(max_restarts=0)


def test_restart_streams_are_independent():
    a = restart_rng(5, 0).random(4)
    assert np.array_equal(a, restart_rng(5, 0).random(4))
    assert not np.array_equal(a, restart_rng(5, 1).random(4))


def test_gramian_of_equidistant_points():
    system = TrigSystem(l1ball(1, 3))
    m = DiscreteMeasure.uniform(np.arange(7)[:, None] / 7)
    assert spectral_distance_to_identity(gramian(system, m)) < 1e-14


def test_leverage_of_exact_design_equals_dimension():
    system = TrigSystem(l1ball(1, 2))
    X = np.arange(5)[:, None] / 5
    lev = leverage(system, np.random.default_rng(0).random((10, 1)), np.eye(5))
    assert np.allclose(lev, 5.0)
    assert np.allclose(leverage(system, X, np.eye(5)), 5.0)


def test_frobenius_finds_small_design_and_is_deterministic():
    system = TrigSystem(l1ball(2, 1))
    cfg = OptimizerConfig(max_restarts=5, seed=3)
    res = optimize_frobenius(system, 9, cfg)
    assert res.exact and res.mz_constant <= 1e-13
    assert res.recompute(system) == pytest.approx(res.mz_constant, abs=1e-15)
    again = optimize_frobenius(system, 9, cfg)
    assert np.array_equal(res.measure.points, again.measure.points)
    assert np.array_equal(res.measure.weights, again.measure.weights)


def test_equal_weights_stay_equal():
    system = TrigSystem(l1ball(1, 2))
    res = optimize_frobenius(system, 6, OptimizerConfig(max_restarts=3, weight_mode="equal"))
    assert np.allclose(res.measure.weights, 1 / 6)
    assert res.exact


def test_too_few_points_reports_failure():
    system = TrigSystem(l1ball(1, 2))
    res = optimize_frobenius(system, 3, OptimizerConfig(max_restarts=2, max_iters=200))
    assert not res.exact
    # rank at most 3 < 5 keeps at least one eigenvalue at zero
    assert res.mz_constant >= 1.0 - 1e-9
    assert len(res.restart_log) == 2


def test_constant_outside_span_keeps_free_mass():
    res = optimize_frobenius(cosine_system(), 2, OptimizerConfig(max_restarts=3))
    assert res.exact and res.measure.mode == "conic"


@pytest.mark.parametrize("make", [lambda: real_trig_system(2), lambda: SphereSystem(1),
                                  lambda: christoffel_rescale(cosine_system())])
def test_logdet_certifies_optimum(make):
    system = make()
    res = optimize_logdet(system, 2 * system.n + 1, OptimizerConfig(max_restarts=3))
    assert res.exact
    A = gramian(system, res.measure).entries
    X = system.sample(np.random.default_rng(1), 4000)
    assert leverage(system, X, A).max() <= system.n * (1 + 1e-6)


def test_bfgs_solves_quadratic():
    Q = np.diag([1.0, 10.0, 100.0])
    out = bfgs.minimize(lambda x: (0.5 * x @ Q @ x, Q @ x), np.ones(3), max_iters=200, f_floor=1e-24)
    assert out.f <= 1e-20 and out.reason in ("floor", "stationary", "line_search")


def test_bfgs_rejects_nonfinite_start():
    with pytest.raises(FloatingPointError):
        bfgs.minimize(lambda x: (np.nan, x), np.ones(2))
