"""Minimal BFGS with backtracking Armijo line search.

scipy's BFGS does not expose its inverse Hessian for warm restarts between
alternation blocks, nor a stall rule tuned for objectives that hit exact
zero, so the loop is written out here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BfgsOutcome:
    x: np.ndarray
    f: float
    g: np.ndarray
    H: np.ndarray | None
    iterations: int
    reason: str
    trace: list = field(default_factory=list)


def minimize(fun_grad, x0, *, max_iters=100, H0=None, f_floor=0.0, c1=1e-4,
             min_step=1e-12, stall_window=50, stall_rtol=1e-10) -> BfgsOutcome:
    """Minimize a smooth function given as ``fun_grad(x) -> (f, g)``.

    Stops when ``f <= f_floor``, when backtracking shrinks below
    ``min_step`` (round-off floor reached), when ``f`` has not dropped by a
    relative ``stall_rtol`` over ``stall_window`` iterations, or after
    ``max_iters`` accepted steps.  ``H0`` warm-starts the inverse Hessian.

    Raises
    ------
    FloatingPointError
        If the objective is not finite at ``x0``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise FloatingPointError("objective is not finite at the starting point")
    n = x.size
    H = None if H0 is None else np.array(H0, dtype=float)
    trace = [f]
    reason = "max_iters"
    it = 0
    while it < max_iters:
        if f <= f_floor:
            reason = "floor"
            break
        if not np.any(g):
            reason = "stationary"
            break
        p = -g if H is None else -(H @ g)
        slope = g @ p
        if slope >= 0:
            H = None
            p = -g
            slope = -(g @ g)
        t = 1.0
        while True:
            x_new = x + t * p
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + c1 * t * slope:
                break
            t *= 0.5
            if t < min_step:
                break
        if t < min_step:
            reason = "line_search"
            break
        if not np.all(np.isfinite(g_new)):
            raise FloatingPointError("gradient became non-finite")
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-300:
            if H is None:
                H = np.eye(n) * (sy / (y @ y))
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * (y @ Hy) + rho) * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        it += 1
        trace.append(f)
        if it >= stall_window and trace[-stall_window - 1] - f <= stall_rtol * abs(trace[-stall_window - 1]):
            reason = "stall"
            break
    return BfgsOutcome(x, float(f), g, H, it, reason, trace)
