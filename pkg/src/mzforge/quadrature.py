"""Exact L2 and even-p Marcinkiewicz-Zygmund designs and positive quadrature.

Every builder optimizes a design, reduces its support, and recomputes ε on
the reduced measure before returning.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .caratheodory import AtomizedGramian, reduce_conic, reduce_convex, reduce_moment_vector, span_dimension
from .design import DesignResult, DiscreteMeasure, OptimizerConfig, gramian, optimize_frobenius
from .errors import InvalidInput, SizeLimit
from .indexsets import MultiIndexSet, sumset
from .linalg import spectral_distance_to_identity
from .systems import FunctionSystem, LinearTransformedSystem, ProductSystem, TrigSystem

TRANSFER_TOL = 1e-10


@dataclass
class MzDesign:
    """A design together with what it discretizes.

    ``p`` is the exponent (2 for plain L2, ``"quad"`` for quadrature rules).
    ``mz_constant`` is ε of the system the design was built for (the lifted
    system when ``p > 2``); for quadrature it is the largest error over
    basis integrals.
    """

    measure: DiscreteMeasure
    target: dict
    p: int | str
    mz_constant: float
    exact: bool
    eps_target: float
    pre_reduction_eps: float | None = None
    span_dim: int | None = None
    design: DesignResult | None = field(default=None, repr=False)
    system: FunctionSystem | None = field(default=None, repr=False)


def default_point_budget(system: FunctionSystem) -> int:
    """``|D(I)|`` for trigonometric systems, numeric product-span rank otherwise."""
    return span_dimension(system)


def _reduce_design(system, measure):
    ag = AtomizedGramian.build(system, measure)
    if system.constant_coefficients() is not None or abs(measure.weights.sum() - 1.0) > 1e-12:
        return reduce_conic(ag), ag.span_dim
    return reduce_convex(ag), ag.span_dim


def build_exact_l2_mz(system: FunctionSystem, config: OptimizerConfig | None = None,
                      n_points: int | None = None) -> MzDesign:
    """Optimize an exact L2-MZ design and reduce it to few atoms.

    The system must be orthonormal for the target measure.  Conic
    reduction is used when the constant lies in the span (the weights then
    sum to one automatically); otherwise convex reduction is used when
    the weights sum to one, and conic reduction when they do not.
    """
    config = config or OptimizerConfig()
    if n_points is None:
        n_points = default_point_budget(system)
    res = optimize_frobenius(system, n_points, config)
    eps_pre = res.mz_constant
    reduced, span_dim = _reduce_design(system, res.measure)
    if abs(reduced.weights.sum() - 1.0) <= 1e-12 and reduced.mode == "conic":
        reduced = DiscreteMeasure(reduced.points, reduced.weights / reduced.weights.sum(), "probability",
                                  source_indices=reduced.source_indices)
    eps = spectral_distance_to_identity(gramian(system, reduced))
    exact = eps <= config.eps_target and eps <= eps_pre + TRANSFER_TOL
    return MzDesign(reduced, system.describe(), 2, eps, bool(exact), config.eps_target, eps_pre, span_dim,
                    res, system)


def verify_inner_product_discretization(system: FunctionSystem, measure: DiscreteMeasure, trials: int = 100,
                                        seed: int = 0) -> dict:
    """Max ``|sum_i w_i f(x_i) conj(g(x_i)) - <f, g>|`` over random unit f, g.

    ``<f, g>`` is computed from coefficients, which is exact for an
    orthonormal system.  Each deviation is bounded by ε.
    """
    rng = np.random.default_rng(seed)
    n = system.n
    c = rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))
    d = rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    P = system.evaluate(measure.points)
    F, G = P @ c.T, P @ d.T
    discrete = measure.weights @ (F * G.conj())
    exact = np.sum(c * d.conj(), axis=1)
    eps = spectral_distance_to_identity(gramian(system, measure))
    return {"max_deviation": float(np.max(np.abs(discrete - exact))) if trials else 0.0, "mz_constant": eps}


# ---------------------------------------------------------------------------
# quadrature


def orthonormal_with_constant(system: FunctionSystem) -> FunctionSystem:
    """An orthonormal system whose span is ``span(system) + constants``."""
    if isinstance(system, TrigSystem):
        if system.constant_coefficients() is not None:
            return system
        return TrigSystem(MultiIndexSet(np.vstack([system.K, np.zeros((1, system.d), dtype=np.int64)])))
    if system.orthonormal and system.constant_coefficients() is not None:
        return system
    from .systems import AugmentedSystem

    aug = system if system.constant_coefficients() is not None else AugmentedSystem(system)
    return orthonormalize(aug)


def orthonormalize(system: FunctionSystem, degree: int | None = None, tol: float = 1e-10) -> LinearTransformedSystem:
    """Orthonormal basis of ``span(system)`` from its Gram matrix on a reference rule.

    Directions with Gram eigenvalue below ``tol`` times the largest are
    dropped, so the result has the numerical rank of the span.
    """
    rule = system.reference_rule(degree)
    if rule is None:
        raise InvalidInput("system has no reference quadrature; cannot orthonormalize")
    X, W = rule
    P = system.evaluate(X)
    G = (P.T * W) @ P.conj()
    G = 0.5 * (G + G.conj().T)
    lam, U = np.linalg.eigh(G)
    keep = lam > tol * lam[-1]
    T = (U[:, keep] / np.sqrt(lam[keep])).conj().T
    # G = sum_i w phi phi^*, so rows T phi are orthonormal
    out = LinearTransformedSystem(system, T)
    out.orthonormal = True
    return out


def build_tchakaloff(system: FunctionSystem, config: OptimizerConfig | None = None,
                     n_points: int | None = None) -> MzDesign:
    """Positive quadrature with at most ``2n + 1`` nodes, exact on ``system``.

    An exact L2-MZ design for the span plus constants integrates every
    basis function exactly; its support is then reduced by Carathéodory on
    the stacked real and imaginary parts of the basis values.
    """
    integrals = system.integrals()
    if integrals is None:
        raise InvalidInput("exact integrals of the basis functions are required")
    config = config or OptimizerConfig()
    W = orthonormal_with_constant(system)
    step1 = build_exact_l2_mz(W, config, n_points)
    meas = step1.measure
    P = system.evaluate(meas.points)
    values = np.vstack([P.real.T, P.imag.T])
    w = meas.weights / meas.weights.sum()
    keep, new_w = reduce_moment_vector(values, w, convex=True)
    new_w = new_w / new_w.sum()
    src = keep if meas.source_indices is None else meas.source_indices[keep]
    quad = DiscreteMeasure(meas.points[keep], new_w, "probability", source_indices=src)
    err = quadrature_error(system, quad)
    exact = step1.exact and err <= 1e-10
    assert len(quad) <= 2 * system.n + 1
    return MzDesign(quad, system.describe(), "quad", err, bool(exact), config.eps_target,
                    step1.mz_constant, step1.span_dim, step1.design, system)


def quadrature_error(system: FunctionSystem, measure: DiscreteMeasure) -> float:
    """Largest ``|sum_i w_i phi_k(x_i) - int phi_k|`` over the basis."""
    P = system.evaluate(measure.points)
    return float(np.max(np.abs(measure.weights @ P - system.integrals())))


# ---------------------------------------------------------------------------
# even p


def lifted_system(system: FunctionSystem, p: int, size_limit: int = 2000) -> FunctionSystem:
    """Orthonormal system spanning all products of ``p/2`` functions of ``system``.

    For trigonometric systems this is the exponential system on the exact
    ``p/2``-fold sumset of frequencies.  Otherwise the degree-``p/2``
    monomials in the basis are orthonormalized on a reference rule.
    """
    if p < 2 or p % 2:
        raise InvalidInput("p must be an even integer >= 2")
    q = p // 2
    if q == 1:
        return system
    if isinstance(system, TrigSystem):
        J = sumset(system.index_set, q)
        if len(J) > size_limit:
            raise SizeLimit(f"lifted space has dimension {len(J)} > {size_limit}")
        return TrigSystem(J)
    combos = list(itertools.combinations_with_replacement(range(system.n), q))
    if len(combos) > size_limit:
        raise SizeLimit(f"{len(combos)} products exceed the limit {size_limit}")
    degree = None
    if hasattr(system, "degree"):
        degree = 2 * q * system.degree
    lifted = orthonormalize(ProductSystem(system, combos), degree)
    if lifted.n > size_limit:
        raise SizeLimit(f"lifted space has dimension {lifted.n} > {size_limit}")
    return lifted


def build_lp_mz_even(system: FunctionSystem, p: int, config: OptimizerConfig | None = None,
                     n_points: int | None = None, size_limit: int = 2000) -> MzDesign:
    """Exact Lp-MZ design for even ``p`` via an exact L2 design on the lifted space.

    If ``sum w |g|^2 = int |g|^2`` for every ``g`` in the span of
    ``(p/2)``-fold products, then taking ``g = f^{p/2}`` gives the Lp
    identity for ``f``.
    """
    lifted = lifted_system(system, p, size_limit)
    design = build_exact_l2_mz(lifted, config, n_points)
    design.p = p
    design.target = {"p": p, "base": system.describe(), "lifted_dim": lifted.n}
    limit = (design.span_dim or 0) + 1
    assert len(design.measure) <= limit
    return design


def trig_power_coefficients(I: MultiIndexSet, c, q: int) -> dict:
    """Fourier coefficients of ``f^q`` for ``f = sum_k c_k e_k`` by exact convolution."""
    base = {tuple(int(v) for v in k): complex(ck) for k, ck in zip(I.array, c)}
    acc = {tuple([0] * I.dim): 1.0 + 0j}
    for _ in range(q):
        nxt = defaultdict(complex)
        for k1, a in acc.items():
            for k2, b in base.items():
                nxt[tuple(x + y for x, y in zip(k1, k2))] += a * b
        acc = dict(nxt)
    return acc


def lp_check(system: TrigSystem, measure: DiscreteMeasure, p: int, trials: int = 50, seed: int = 0) -> dict:
    """Compare ``sum_i w_i |f(x_i)|^p`` with ``int |f|^p`` for random ``f``.

    The continuous value comes from Parseval applied to the coefficients of
    ``f^{p/2}``, an oracle independent of the design.
    """
    if not isinstance(system, TrigSystem):
        raise InvalidInput("the convolution oracle needs a trigonometric system")
    rng = np.random.default_rng(seed)
    P = system.evaluate(measure.points)
    worst = 0.0
    for _ in range(trials):
        c = rng.standard_normal(system.n) + 1j * rng.standard_normal(system.n)
        exact = sum(abs(v) ** 2 for v in trig_power_coefficients(system.index_set, c, p // 2).values())
        discrete = float(measure.weights @ np.abs(P @ c) ** p)
        worst = max(worst, abs(discrete - exact) / exact)
    return {"max_relative_error": worst, "trials": trials}
