"""Equal-norm tight frames from D-optimal designs, and a Parseval checker."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .caratheodory import span_dimension
from .design import DesignResult, DiscreteMeasure, OptimizerConfig, gramian, optimize_logdet
from .linalg import HermitianMatrix, inverse_sqrt, spectral_distance_to_identity
from .systems import FunctionSystem, LinearTransformedSystem

SUPPORT_THRESHOLD = 1e-14
CERT_TOL = 1e-6


@dataclass
class EntfResult:
    """An equal-norm tight frame ``psi = T phi`` on a probability design.

    ``certificate`` records squared norms: ``support_norm_deviation`` is
    ``max_i | |psi(x_i)|^2 - n |`` over the support and
    ``max_sampled_norm`` is the largest ``|psi(x)|^2`` seen on random
    samples.  Both should be within ``1e-6`` of ``n``.
    """

    transform: HermitianMatrix
    measure: DiscreteMeasure
    norm_cap: float
    certificate: dict
    ok: bool
    system: FunctionSystem
    design: DesignResult | None = field(default=None, repr=False)


def _certificate(system, measure, T, samples, rng):
    n = system.n
    psi = LinearTransformedSystem(system, T.entries)
    on_support = np.sum(np.abs(psi.evaluate(measure.points)) ** 2, axis=1)
    sup = 0.0
    for start in range(0, samples, 20000):
        X = system.sample(rng, min(20000, samples - start))
        sup = max(sup, float(np.max(np.sum(np.abs(psi.evaluate(X)) ** 2, axis=1))))
    sup = max(sup, float(on_support.max()))
    return psi, {
        "support_norm_deviation": float(np.max(np.abs(on_support - n))),
        "max_sampled_norm": sup,
        "trace_identity_error": float(abs(measure.weights @ on_support - n)),
        "samples": int(samples),
    }


def build_entf(system: FunctionSystem, config: OptimizerConfig | None = None, n_points: int | None = None,
               samples: int = 100_000) -> EntfResult:
    """Construct an equal-norm tight frame for ``system``.

    The raw system's Gramian determinant is maximized over probability
    designs; atoms with weight at most 1e-14 are dropped, and the frame is
    ``psi = A^{-1/2} phi``.  On the support ``|psi|^2 = n``; everywhere else
    it should not exceed ``n``, which is checked on ``samples`` random
    points.

    Raises
    ------
    IllConditioned
        If the optimized Gramian is (numerically) singular.
    """
    config = config or OptimizerConfig()
    if n_points is None:
        n_points = span_dimension(system) + 1
    res = optimize_logdet(system, n_points, config)
    meas = res.measure
    keep = meas.weights > SUPPORT_THRESHOLD
    w = meas.weights[keep] / meas.weights[keep].sum()
    measure = DiscreteMeasure(meas.points[keep], w, "probability", source_indices=np.flatnonzero(keep))
    T = inverse_sqrt(gramian(system, measure))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(2**20,)))
    psi, cert = _certificate(system, measure, T, samples, rng)
    n = system.n
    ok = cert["support_norm_deviation"] <= CERT_TOL and cert["max_sampled_norm"] <= n + CERT_TOL
    return EntfResult(T, measure, float(np.sqrt(n)), cert, bool(ok), psi, res)


def verify_parseval(system: FunctionSystem, measure: DiscreteMeasure, trials: int = 100, seed: int = 0) -> dict:
    """Compare ``sum_i w_i |<a, phi(x_i)>|^2`` with ``|a|^2 = 1`` for random unit ``a``.

    The deviation never exceeds the reported ε (Rayleigh quotient bound).
    """
    A = gramian(system, measure)
    eps = spectral_distance_to_identity(A)
    dev = 0.0
    if trials > 0:
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((trials, system.n)) + 1j * rng.standard_normal((trials, system.n))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        coeffs = system.evaluate(measure.points).conj() @ a.T
        sums = measure.weights @ (np.abs(coeffs) ** 2)
        dev = float(np.max(np.abs(sums - 1.0)))
    return {"max_relative_deviation": dev, "mz_constant": eps, "trials": int(trials)}
