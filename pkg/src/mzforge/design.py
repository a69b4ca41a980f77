"""Design optimization: Frobenius matching of the Gramian and log-det maximization.

A design is a discrete measure ``sum_i w_i delta_{x_i}``; its Gramian is
``A = sum_i w_i phi(x_i) phi(x_i)^*``.  The Frobenius route drives
``||A - I||_F^2`` to zero over points and weights.  The log-det route
maximizes ``log det A`` over points and probability weights.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import bfgs
from .errors import InvalidInput
from .linalg import HermitianMatrix, spectral_distance_to_identity
from .systems import ChristoffelRescaledSystem, FunctionSystem

log = logging.getLogger(__name__)

MACHINE_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# data types


@dataclass
class DiscreteMeasure:
    """Atoms ``points`` (N, d) with nonnegative ``weights`` (N,).

    In ``"probability"`` mode the weights must sum to one within 1e-12; in
    ``"conic"`` mode only nonnegativity is required.
    """

    points: np.ndarray
    weights: np.ndarray
    mode: str = "conic"
    source_indices: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float)
        self.weights = np.array(self.weights, dtype=float).reshape(-1)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.points.ndim != 2 or len(self.points) != len(self.weights):
            raise InvalidInput(
                f"points {self.points.shape} and weights {self.weights.shape} do not match"
            )
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.weights))):
            raise InvalidInput("measure contains non-finite values")
        if np.any(self.weights < 0):
            raise InvalidInput("weights must be nonnegative")
        if self.mode not in ("probability", "conic"):
            raise InvalidInput(f"unknown measure mode {self.mode!r}")
        if self.mode == "probability" and abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"probability weights sum to {self.weights.sum():.15g}")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, idx, mode=None) -> "DiscreteMeasure":
        idx = np.asarray(idx)
        src = idx if self.source_indices is None else self.source_indices[idx]
        return DiscreteMeasure(self.points[idx], self.weights[idx], mode or "conic", source_indices=src)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        N = len(points)
        return cls(points, np.full(N, 1.0 / N), "probability")


@dataclass
class OptimizerConfig:
    """Knobs shared by both optimizers.

    ``max_iters`` caps the accepted BFGS steps per restart, summed over
    alternation blocks (the final polish has its own ``polish_iters``).
    """

    max_restarts: int = 10
    max_iters: int = 3000
    seed: int = 0
    weight_mode: str = "free"
    eps_target: float = 1e-13
    block_iters: int = 30
    polish_iters: int = 1000
    init_points: np.ndarray | None = None
    init_weights: np.ndarray | None = None
    stop_on_success: bool = True
    workers: int | None = None
    precondition: bool = True
    unit_mass: bool = False
    # log-det route
    exchange_rounds: int = 8
    exchange_samples: int = 4000
    leverage_tol: float = 1e-7

    def __post_init__(self):
        if self.weight_mode not in ("free", "equal"):
            raise InvalidInput("weight_mode must be 'free' or 'equal'")
        if self.max_restarts < 1:
            raise InvalidInput("need at least one restart")


@dataclass
class DesignResult:
    measure: DiscreteMeasure
    mz_constant: float
    frobenius_residual: float
    iterations: int
    restarts_used: int
    seed: int
    objective_trace: list
    exact: bool
    eps_target: float
    objective: str = "frobenius"
    log_det: float | None = None
    best_restart: int = 0
    restart_log: list = field(default_factory=list)

    def recompute(self, system: FunctionSystem) -> float:
        """ε of the stored measure, computed from scratch."""
        return spectral_distance_to_identity(gramian(system, self.measure))


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for restart ``index`` under a master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


# ---------------------------------------------------------------------------
# objectives


def _as_xw(system, measure):
    if measure.dim != system.d:
        raise InvalidInput(f"measure points have dimension {measure.dim}, system expects {system.d}")
    return measure.points, measure.weights


def gramian_matrix(system, X, w) -> np.ndarray:
    P = system.evaluate(X)
    return (P.T * w) @ P.conj()


def gramian(system: FunctionSystem, measure: DiscreteMeasure) -> HermitianMatrix:
    """``sum_i w_i phi(x_i) phi(x_i)^*`` as a :class:`HermitianMatrix`."""
    X, w = _as_xw(system, measure)
    if len(w) == 0:
        return HermitianMatrix(np.zeros((system.n, system.n)))
    return HermitianMatrix(gramian_matrix(system, X, w), check=False)


def frobenius_parts(system, X, w, need_points=True):
    """Objective ``||A - I||_F^2`` with its point and weight gradients.

    With ``R = A - I`` the gradients are ``4 w_i Re(phi_i^* R d_j phi_i)``
    for point coordinates and ``2 Re(phi_i^* R phi_i)`` for weights.
    """
    P = system.evaluate(X)
    R = (P.T * w) @ P.conj()
    R[np.diag_indices_from(R)] -= 1.0
    f = float(np.sum(R.real**2 + R.imag**2))
    Gc = P.conj() @ R
    gw = 2.0 * np.real(np.sum(Gc * P, axis=1))
    gx = None
    if need_points:
        gx = 4.0 * w[:, None] * np.real(system.contract_jacobian(X, Gc, P))
    return f, gx, gw


def frobenius_objective(system, measure) -> float:
    X, w = _as_xw(system, measure)
    return frobenius_parts(system, X, w, need_points=False)[0]


def frobenius_gradient(system, measure):
    """Point gradients (N, d) and weight gradients (N,) of the Frobenius objective."""
    X, w = _as_xw(system, measure)
    _, gx, gw = frobenius_parts(system, X, w)
    return gx, gw


def logdet_parts(system, X, w, need_points=True):
    """``log det A`` with gradients; ``-inf`` and zero gradients if singular.

    The weight gradient is the leverage ``Re(phi_i^* A^{-1} phi_i)`` and the
    point gradient is ``2 w_i Re(phi_i^* A^{-1} d_j phi_i)``.
    """
    P = system.evaluate(X)
    A = (P.T * w) @ P.conj()
    lam, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    N, d = X.shape
    if lam[0] < 1e-300:
        return -np.inf, np.zeros((N, d)), np.zeros(N)
    Ainv = (U / lam) @ U.conj().T
    B = P.conj() @ Ainv
    lev = np.real(np.sum(B * P, axis=1))
    gx = None
    if need_points:
        gx = 2.0 * w[:, None] * np.real(system.contract_jacobian(X, B, P))
    return float(np.sum(np.log(lam))), gx, lev


def logdet_objective_and_gradient(system, measure):
    X, w = _as_xw(system, measure)
    return logdet_parts(system, X, w)


def leverage(system, X, A) -> np.ndarray:
    """``phi(x)^* A^{-1} phi(x)`` at each row of ``X``."""
    P = system.evaluate(X)
    sol = np.linalg.solve(A, P.T)
    return np.real(np.sum(P.conj() * sol.T, axis=1))


# ---------------------------------------------------------------------------
# point parametrization


class _PointParam:
    """Unconstrained coordinates for points.

    Torus points are scaled per coordinate; sphere points are ``y / |y|``
    for free ``y`` in R^3, with the gradient mapped through the projection.
    """

    def __init__(self, system, shape, precondition):
        self.shape = shape
        self.sphere = system.domain == "sphere"
        if self.sphere or not precondition:
            self.scale = np.ones(shape[1])
        else:
            self.scale = np.asarray(system.coordinate_scale(), dtype=float)

    def to_vec(self, X):
        return (X / self.scale).ravel()

    def points(self, u):
        X = u.reshape(self.shape) * self.scale
        if self.sphere:
            X = X / np.linalg.norm(X, axis=1, keepdims=True)
        return X

    def grad(self, u, gX):
        if self.sphere:
            Y = u.reshape(self.shape)
            r = np.linalg.norm(Y, axis=1, keepdims=True)
            Xn = Y / r
            return ((gX - np.sum(gX * Xn, axis=1, keepdims=True) * Xn) / r).ravel()
        return (gX * self.scale).ravel()


def _normalizes(system, config) -> bool:
    # With the constant in an orthonormal span, exactness already forces unit mass.
    return config.weight_mode == "equal" or config.unit_mass or system.constant_coefficients() is not None


# ---------------------------------------------------------------------------
# Frobenius restarts


def _frobenius_restart(system, n_points, config, index):
    rng = restart_rng(config.seed, index)
    if index == 0 and config.init_points is not None:
        X = np.array(config.init_points, dtype=float).reshape(n_points, system.d)
    else:
        X = system.sample(rng, n_points)
    if index == 0 and config.init_weights is not None and config.weight_mode == "free":
        w = np.array(config.init_weights, dtype=float)
    else:
        w = np.full(n_points, 1.0 / n_points)
    normalize = _normalizes(system, config)
    floor = (system.n * MACHINE_EPS) ** 2
    param = _PointParam(system, X.shape, config.precondition)
    trace = []
    total = 0

    def point_fg(u, w_fixed):
        Xu = param.points(u)
        f, gx, _ = frobenius_parts(system, Xu, w_fixed)
        return f, param.grad(u, gx)

    def weight_fg(wv, X_fixed):
        f, _, gw = frobenius_parts(system, X_fixed, wv, need_points=False)
        return f, gw

    f = frobenius_parts(system, X, w, need_points=False)[0]
    trace.append(f)
    if config.weight_mode == "equal":
        out = bfgs.minimize(lambda u: point_fg(u, w), param.to_vec(X), max_iters=config.max_iters, f_floor=floor)
        X, f, total = param.points(out.x), out.f, out.iterations
        trace.extend(out.trace[1:])
    else:
        Hp = Hw = None
        while total < config.max_iters and f > floor:
            f_start = f
            budget = min(config.block_iters, config.max_iters - total)
            out = bfgs.minimize(lambda u: point_fg(u, w), param.to_vec(X), max_iters=budget, H0=Hp, f_floor=floor)
            X, Hp, total = param.points(out.x), out.H, total + out.iterations
            out = bfgs.minimize(lambda v: weight_fg(v, X), w, max_iters=budget, H0=Hw, f_floor=floor)
            Hw, total = out.H, total + out.iterations
            w = np.maximum(out.x, 0.0)
            if not w.any():
                raise FloatingPointError("all weights vanished")
            if normalize:
                w = w / w.sum()
            f = frobenius_parts(system, X, w, need_points=False)[0]
            trace.append(f)
            if not f < f_start * (1.0 - 1e-16):
                break
        out = bfgs.minimize(lambda u: point_fg(u, w), param.to_vec(X), max_iters=config.polish_iters, f_floor=floor)
        if out.f <= f:
            X, f = param.points(out.x), out.f
        total += out.iterations
        trace.extend(out.trace[1:])
    if not np.isfinite(f):
        raise FloatingPointError("objective became non-finite")
    w = np.maximum(w, 0.0)
    if normalize:
        w = w / w.sum()
    X = system.canonicalize(X)
    A = HermitianMatrix(gramian_matrix(system, X, w), check=False)
    eps = spectral_distance_to_identity(A)
    frob = float(np.linalg.norm(A.entries - np.eye(system.n)) ** 2)
    return {"index": index, "points": X, "weights": w, "eps": eps, "frob": frob, "iterations": total,
            "trace": [float(t) for t in trace], "status": "ok", "normalized": normalize}


def _safe_restart(kind, system, n_points, config, index):
    worker = _frobenius_restart if kind == "frobenius" else _logdet_restart
    try:
        with np.errstate(all="ignore"):
            return worker(system, n_points, config, index)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        log.info("restart %d abandoned: %s", index, exc)
        return {"index": index, "status": f"abandoned: {exc}", "eps": np.inf, "frob": np.inf, "iterations": 0}


def _worker_count(config) -> int:
    env = os.environ.get("MZFORGE_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else 1
    return max(1, min(cap, config.workers or cap))


def _run_restarts(kind, system, n_points, config):
    """Run restarts in index order, stopping after the first success.

    In parallel mode restarts run in batches, and results past the first
    success are discarded, so the outcome does not depend on worker count.
    """
    workers = _worker_count(config)
    results = []
    idx = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while idx < config.max_restarts:
            batch = list(range(idx, min(idx + workers, config.max_restarts)))
            if pool is None:
                outs = [_safe_restart(kind, system, n_points, config, i) for i in batch]
            else:
                outs = list(pool.map(_safe_restart, [kind] * len(batch), [system] * len(batch),
                                     [n_points] * len(batch), [config] * len(batch), batch))
            idx = batch[-1] + 1
            done = False
            for out in outs:
                results.append(out)
                if config.stop_on_success and out.get("success", out["eps"] <= config.eps_target):
                    done = True
                    break
            if done:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return results


def _pick_best(results):
    ok = [r for r in results if r["status"] == "ok"]
    if not ok:
        return None
    return min(ok, key=lambda r: (not r.get("success", True), r["eps"], r["frob"], r["index"]))


def _summaries(results):
    keys = ("index", "status", "eps", "frob", "iterations", "log_det", "max_leverage")
    return [{k: (float(r[k]) if isinstance(r.get(k), (float, np.floating)) else r.get(k))
             for k in keys if k in r} for r in results]


def optimize_frobenius(system: FunctionSystem, n_points: int, config: OptimizerConfig | None = None) -> DesignResult:
    """Search for an exact design by minimizing ``||A - I||_F^2``.

    Each restart alternates point and weight BFGS blocks (weights are
    clamped at zero afterwards, and renormalized when the constant function
    lies in the span), then polishes the points with weights frozen.  The
    best restart by ε is returned; it is flagged exact when ``ε <=
    eps_target``.  A result that misses the target is still returned.
    """
    config = config or OptimizerConfig()
    if n_points < 1:
        raise InvalidInput("need at least one point")
    results = _run_restarts("frobenius", system, n_points, config)
    best = _pick_best(results)
    if best is None:
        raise FloatingPointError("every restart was abandoned")
    mode = "probability" if best["normalized"] else "conic"
    measure = DiscreteMeasure(best["points"], best["weights"], mode)
    return DesignResult(
        measure=measure, mz_constant=best["eps"], frobenius_residual=best["frob"],
        iterations=best["iterations"], restarts_used=len(results), seed=config.seed,
        objective_trace=best["trace"], exact=bool(best["eps"] <= config.eps_target),
        eps_target=config.eps_target, best_restart=best["index"], restart_log=_summaries(results),
    )


# ---------------------------------------------------------------------------
# log-det restarts


def _joint_logdet(system, X, w, config, iters):
    """BFGS on points and weights ``w = v^2 / |v|^2`` maximizing log det."""
    N, d = X.shape
    param = _PointParam(system, X.shape, config.precondition)
    nu = N * d

    def fg(z):
        u, v = z[:nu], z[nu:]
        s = v @ v
        wv = v * v / s
        Xu = param.points(u)
        val, gx, lev = logdet_parts(system, Xu, wv)
        if not np.isfinite(val):
            return np.inf, np.zeros_like(z)
        gv = (2.0 * v / s) * (lev - wv @ lev)
        return -val, -np.concatenate([param.grad(u, gx), gv])

    z0 = np.concatenate([param.to_vec(X), np.sqrt(w)])
    out = bfgs.minimize(fg, z0, max_iters=iters, f_floor=-np.inf, stall_window=40, stall_rtol=1e-15)
    v = out.x[nu:]
    return param.points(out.x[:nu]), v * v / (v @ v), out


def _refine_leverage_peak(system, x0, Ainv, config):
    param = _PointParam(system, (1, system.d), config.precondition)

    def fg(u):
        X = param.points(u)
        P = system.evaluate(X)
        B = P.conj() @ Ainv
        val = np.real(np.sum(B * P))
        g = 2.0 * np.real(system.contract_jacobian(X, B, P))
        return -val, -param.grad(u, g)

    out = bfgs.minimize(fg, param.to_vec(x0[None, :]), max_iters=200, f_floor=-np.inf, stall_window=20,
                        stall_rtol=1e-14)
    return param.points(out.x)[0], -out.f


def _logdet_restart(system, n_points, config, index):
    rng = restart_rng(config.seed, index)
    if index == 0 and config.init_points is not None:
        X = np.array(config.init_points, dtype=float).reshape(-1, system.d)
    else:
        X = system.sample(rng, n_points)
    if index == 0 and config.init_weights is not None:
        w = np.array(config.init_weights, dtype=float)
        w = w / w.sum()
    else:
        w = np.full(len(X), 1.0 / len(X))
    m = system.n
    param = _PointParam(system, X.shape, config.precondition)
    total = 0
    trace = []
    val = logdet_parts(system, X, w, need_points=False)[0]
    if not np.isfinite(val):
        raise FloatingPointError("initial Gramian is singular")
    # alternate point BFGS with multiplicative weight updates
    for _ in range(max(1, config.max_iters // (4 * config.block_iters))):
        start = val

        def point_fg(u):
            v, gx, _ = logdet_parts(system, param.points(u), w)
            return (-v, param.grad(u, gx)) if np.isfinite(v) else (np.inf, np.zeros_like(u))

        out = bfgs.minimize(point_fg, param.to_vec(X), max_iters=config.block_iters, f_floor=-np.inf)
        X, total = param.points(out.x), total + out.iterations
        for _ in range(config.block_iters):
            _, _, lev = logdet_parts(system, X, w, need_points=False)
            w = w * lev / m
            w = w / w.sum()
        val = logdet_parts(system, X, w, need_points=False)[0]
        trace.append(val)
        if val - start < 1e-10 * max(1.0, abs(val)):
            break
    X, w, out = _joint_logdet(system, X, w, config, config.polish_iters)
    total += out.iterations
    # exchange: add the global leverage peak while it exceeds m
    rounds = 0
    max_lev = np.inf
    while True:
        keep = w > 1e-13 * w.max()
        X, w = X[keep], w[keep] / w[keep].sum()
        A = gramian_matrix(system, X, w)
        Ainv = np.linalg.inv(0.5 * (A + A.conj().T))
        cand = system.sample(rng, config.exchange_samples)
        lev_c = leverage(system, cand, A)
        x_star, max_lev = _refine_leverage_peak(system, cand[np.argmax(lev_c)], Ainv, config)
        trace.append(float(-out.f))
        if max_lev <= m * (1.0 + config.leverage_tol) or rounds >= config.exchange_rounds:
            break
        rounds += 1
        alpha = min(0.5, (max_lev - m) / (m * (max_lev - 1.0)))
        X = np.vstack([X, x_star])
        w = np.append((1.0 - alpha) * w, alpha)
        X, w, out = _joint_logdet(system, X, w, config, config.polish_iters)
        total += out.iterations
    X = system.canonicalize(X)
    val, _, lev = logdet_parts(system, X, w, need_points=False)
    A = HermitianMatrix(gramian_matrix(system, X, w), check=False)
    eps = spectral_distance_to_identity(A)
    support_dev = float(np.max(np.abs(lev - m)))
    success = max_lev <= m * (1.0 + config.leverage_tol) and support_dev <= config.leverage_tol * m
    if isinstance(system, ChristoffelRescaledSystem):
        success = success and val >= np.log1p(-1e-12) - 1e-15
    return {"index": index, "points": X, "weights": w, "eps": eps,
            "frob": float(np.linalg.norm(A.entries - np.eye(m)) ** 2), "iterations": total, "trace": trace,
            "status": "ok", "normalized": True, "log_det": val, "max_leverage": float(max_lev),
            "support_deviation": support_dev, "success": bool(success)}


def optimize_logdet(system: FunctionSystem, n_points: int, config: OptimizerConfig | None = None) -> DesignResult:
    """Maximize ``log det`` of the Gramian over points and probability weights.

    Alternating point BFGS and multiplicative weight updates lead into a
    joint BFGS polish; sampled leverage peaks above ``n`` are then exchanged
    into the design.  The result is exact when the leverage
    ``phi^* A^{-1} phi`` equals ``n`` on the support and nowhere exceeds
    it (within ``leverage_tol``), which certifies the maximum.
    """
    config = config or OptimizerConfig()
    if n_points < 1:
        raise InvalidInput("need at least one point")
    results = _run_restarts("logdet", system, n_points, config)
    best = _pick_best(results)
    if best is None:
        raise FloatingPointError("every restart was abandoned")
    measure = DiscreteMeasure(best["points"], best["weights"], "probability")
    return DesignResult(
        measure=measure, mz_constant=best["eps"], frobenius_residual=best["frob"],
        iterations=best["iterations"], restarts_used=len(results), seed=config.seed,
        objective_trace=best["trace"], exact=best["success"], eps_target=config.eps_target,
        objective="logdet", log_det=best["log_det"], best_restart=best["index"],
        restart_log=_summaries(results),
    )


def with_overrides(config: OptimizerConfig | None, **kw) -> OptimizerConfig:
    return replace(config or OptimizerConfig(), **kw)
