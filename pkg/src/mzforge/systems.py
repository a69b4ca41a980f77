"""Basis systems phi: domain -> C^n with batched evaluation and Jacobians.

Points are rows of an ``(N, d)`` float array.  ``evaluate`` returns an
``(N, n)`` complex array and ``jacobian`` an ``(N, n, d)`` complex array with
entry ``[i, k, j] = d phi_k / d x_j`` at point ``i``.

Torus points are unwrapped reals (every system here is 1-periodic), sphere
points are unit vectors in R^3.  Sphere harmonics are evaluated as
polynomials in the ambient coordinates, so their Jacobian is the ambient
gradient; use :func:`tangent_project` to restrict it to the sphere.
"""
from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from . import kernels
from .errors import DegenerateChristoffel, InvalidInput
from .indexsets import MultiIndexSet, difference_set

TWO_PI = 2.0 * np.pi


class FunctionSystem:
    """Common interface for every basis system.

    Subclasses set ``n``, ``d`` and ``domain`` and implement ``evaluate`` and
    ``jacobian``.  ``contract_jacobian`` has a generic einsum implementation
    that fast systems override.
    """

    n: int
    d: int
    domain: str
    has_jacobian: bool = True
    orthonormal: bool = False

    def evaluate(self, X) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, X) -> np.ndarray:
        raise NotImplementedError

    def eval(self, x) -> np.ndarray:
        """Evaluate at a single point, returning a length-n vector."""
        return self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))[0]

    def evaluate_with_jacobian(self, X):
        return self.evaluate(X), self.jacobian(X)

    def contract_jacobian(self, X, C, P=None) -> np.ndarray:
        """``out[i, j] = sum_k C[i, k] * d phi_k(x_i) / d x_j``.

        ``P`` is the already evaluated basis; fast systems use it to avoid
        recomputing phases.
        """
        return np.einsum("ik,ikj->ij", C, self.jacobian(X))

    # domain helpers -------------------------------------------------------
    def _points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.d) if self.d > 1 or X.size == 0 else X[:, None]
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InvalidInput(f"points must have shape (N, {self.d}), got {X.shape}")
        return X

    def sample(self, rng: np.random.Generator, N: int) -> np.ndarray:
        if self.domain == "torus":
            return rng.random((N, self.d))
        if self.domain == "sphere":
            y = rng.standard_normal((N, 3))
            return y / np.linalg.norm(y, axis=1, keepdims=True)
        raise NotImplementedError(self.domain)

    def canonicalize(self, X) -> np.ndarray:
        X = np.array(X, dtype=float)
        if self.domain == "torus":
            X = np.mod(X, 1.0)
            X[X >= 1.0] = 0.0
            return X
        if self.domain == "sphere":
            return X / np.linalg.norm(X, axis=1, keepdims=True)
        return X

    def coordinate_scale(self) -> np.ndarray:
        """Per-coordinate step scaling used to precondition point updates."""
        return np.ones(self.d)

    def integrals(self):
        """Exact ``int phi_k dmu`` for each basis function, or ``None``."""
        return None

    def constant_coefficients(self):
        """Coefficients c with ``sum_k c_k phi_k = 1``, or ``None`` if unknown."""
        return None

    def reference_rule(self, degree: int):
        """A positive rule exact for products phi_k * conj(phi_l), or ``None``."""
        return None

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "n": self.n, "domain": self.domain}


# ---------------------------------------------------------------------------
# torus


class TrigSystem(FunctionSystem):
    """Exponentials ``exp(2 pi i <k, x>)`` for ``k`` in a frequency set.

    Phases are reduced exactly modulo one before exponentiation so that
    frequencies of size ~1e7 keep full relative precision.
    """

    domain = "torus"
    orthonormal = True

    def __init__(self, I: MultiIndexSet):
        if not isinstance(I, MultiIndexSet):
            I = MultiIndexSet(I)
        self.index_set = I
        self.K = I.array
        self._Kf = self.K.astype(float)
        self.n = len(I)
        self.d = I.dim

    def phases(self, X) -> np.ndarray:
        return kernels.frac_phase(self._points(X), self.K)

    def evaluate(self, X):
        return np.exp(TWO_PI * 1j * self.phases(X))

    def jacobian(self, X):
        P = self.evaluate(X)
        return (TWO_PI * 1j) * P[:, :, None] * self._Kf[None, :, :]

    def contract_jacobian(self, X, C, P=None):
        if P is None:
            P = self.evaluate(X)
        return (TWO_PI * 1j) * ((C * P) @ self._Kf)

    def coordinate_scale(self):
        kmax = np.abs(self.K).max(axis=0).astype(float)
        return np.where(kmax > 0, 1.0 / (TWO_PI * np.maximum(kmax, 1.0)), 1.0)

    def integrals(self):
        return np.all(self.K == 0, axis=1).astype(complex)

    def constant_coefficients(self):
        c = self.integrals()
        return c if c.any() else None

    @cached_property
    def product_span_dimension(self) -> int:
        return len(difference_set(self.index_set))

    def reference_rule(self, degree=None):
        # equidistant grid exact for every difference frequency, if small enough
        D = difference_set(self.index_set).array
        sizes = 2 * np.abs(D).max(axis=0) + 1
        if np.prod(sizes.astype(float)) > 2e6:
            return None
        axes = [np.arange(s) / s for s in sizes]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return X, np.full(len(X), 1.0 / len(X))

    def describe(self):
        return {"kind": "trig", "n": self.n, "domain": "torus", "index_set": self.index_set.to_list()}


def trig_system(I) -> TrigSystem:
    return TrigSystem(I)


# ---------------------------------------------------------------------------
# sphere


def harmonic_labels(degree: int) -> list[tuple[int, int, str]]:
    """(l, m, 'c'|'s') labels in basis order."""
    out = []
    for l in range(degree + 1):
        out.append((l, 0, "c"))
        for m in range(1, l + 1):
            out.append((l, m, "c"))
            out.append((l, m, "s"))
    return out


class SphereSystem(FunctionSystem):
    """Real spherical harmonics of degree <= m on the unit sphere in R^3.

    Orthonormal for the normalized surface measure.  ``Y_lm`` is written as
    ``N_lm * Q_l^m(z) * Re/Im (x + i y)^m`` so that evaluation and the
    ambient gradient are plain polynomial recurrences.
    """

    domain = "sphere"
    orthonormal = True

    def __init__(self, degree: int):
        if degree < 0 or int(degree) != degree:
            raise InvalidInput("sphere degree must be a nonnegative integer")
        self.degree = int(degree)
        self.n = (self.degree + 1) ** 2
        self.d = 3
        self.labels = harmonic_labels(self.degree)
        self._norm = np.array([self._nlm(l, m) for l, m, _ in self.labels])

    @staticmethod
    def _nlm(l, m):
        v = math.sqrt((2 * l + 1) * math.factorial(l - m) / math.factorial(l + m))
        return v * math.sqrt(2.0) if m > 0 else v

    def _raw(self, X, with_grad):
        X = self._points(X)
        x, y, z = X[:, 0], X[:, 1], X[:, 2]
        N, L = len(X), self.degree
        # C_m + i S_m = (x + i y)^m
        C = np.zeros((L + 1, N))
        S = np.zeros((L + 1, N))
        C[0] = 1.0
        for m in range(1, L + 1):
            C[m] = x * C[m - 1] - y * S[m - 1]
            S[m] = x * S[m - 1] + y * C[m - 1]
        # Q[l][m] and dQ/dz
        Q = {}
        dQ = {}
        for m in range(L + 1):
            Q[m, m] = np.full(N, float(_double_factorial(2 * m - 1)))
            dQ[m, m] = np.zeros(N)
            if m + 1 <= L:
                Q[m + 1, m] = z * (2 * m + 1) * Q[m, m]
                dQ[m + 1, m] = (2 * m + 1) * Q[m, m]
            for l in range(m + 2, L + 1):
                Q[l, m] = ((2 * l - 1) * z * Q[l - 1, m] - (l + m - 1) * Q[l - 2, m]) / (l - m)
                dQ[l, m] = (
                    (2 * l - 1) * (Q[l - 1, m] + z * dQ[l - 1, m]) - (l + m - 1) * dQ[l - 2, m]
                ) / (l - m)
        V = np.empty((N, self.n))
        G = np.zeros((N, self.n, 3)) if with_grad else None
        for col, (l, m, kind) in enumerate(self.labels):
            T = C[m] if kind == "c" else S[m]
            V[:, col] = Q[l, m] * T
            if with_grad:
                if m > 0:
                    if kind == "c":
                        dx, dy = m * C[m - 1], -m * S[m - 1]
                    else:
                        dx, dy = m * S[m - 1], m * C[m - 1]
                    G[:, col, 0] = Q[l, m] * dx
                    G[:, col, 1] = Q[l, m] * dy
                G[:, col, 2] = dQ[l, m] * T
        V *= self._norm
        if with_grad:
            G *= self._norm[None, :, None]
        return V, G

    def evaluate(self, X):
        return self._raw(X, False)[0].astype(complex)

    def jacobian(self, X):
        return self._raw(X, True)[1].astype(complex)

    def evaluate_with_jacobian(self, X):
        V, G = self._raw(X, True)
        return V.astype(complex), G.astype(complex)

    def contract_jacobian(self, X, C, P=None):
        G = self._raw(X, True)[1]
        return np.einsum("ik,ikj->ij", C, G)

    def integrals(self):
        e = np.zeros(self.n, dtype=complex)
        e[0] = 1.0
        return e

    def constant_coefficients(self):
        return self.integrals()

    def reference_rule(self, degree=None):
        return sphere_product_rule(2 * self.degree if degree is None else degree)

    def describe(self):
        return {"kind": "sphere", "n": self.n, "domain": "sphere", "degree": self.degree}


def sphere_system(degree: int) -> SphereSystem:
    return SphereSystem(degree)


def _double_factorial(k: int) -> int:
    return 1 if k <= 0 else math.prod(range(k, 0, -2))


def sphere_product_rule(degree: int):
    """Gauss-Legendre in z times equispaced azimuth; exact up to ``degree``.

    Returns unit vectors ``(N, 3)`` and weights summing to one.
    """
    q = degree // 2 + 1
    p = degree + 1
    z, wz = roots_legendre(q)
    phi = TWO_PI * np.arange(p) / p
    r = np.sqrt(1.0 - z**2)
    X = np.stack(
        [np.outer(r, np.cos(phi)), np.outer(r, np.sin(phi)), np.repeat(z[:, None], p, axis=1)],
        axis=-1,
    ).reshape(-1, 3)
    W = np.repeat(wz / 2.0, p) / p
    return X, W


def tangent_project(X, G) -> np.ndarray:
    """Project ambient gradients ``G`` (N, 3) onto the tangent planes at ``X``."""
    X = np.asarray(X, dtype=float)
    return G - np.sum(G * X, axis=1, keepdims=True) * X


def sphere_monomial_integral(a: int, b: int, c: int) -> float:
    """Average of ``x^a y^b z^c`` over the unit sphere in R^3."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    num = _double_factorial(a - 1) * _double_factorial(b - 1) * _double_factorial(c - 1)
    return num / _double_factorial(a + b + c + 1)


# ---------------------------------------------------------------------------
# wrappers


class _Wrapped(FunctionSystem):
    def __init__(self, base: FunctionSystem):
        self.base = base
        self.d = base.d
        self.domain = base.domain

    def _points(self, X):
        return self.base._points(X)

    def coordinate_scale(self):
        return self.base.coordinate_scale()

    def sample(self, rng, N):
        return self.base.sample(rng, N)

    def canonicalize(self, X):
        return self.base.canonicalize(X)

    def reference_rule(self, degree=None):
        return self.base.reference_rule(degree)


class AugmentedSystem(_Wrapped):
    """Base system with the constant function appended as a last column."""

    def __init__(self, base: FunctionSystem):
        super().__init__(base)
        self.n = base.n + 1

    def evaluate(self, X):
        P = self.base.evaluate(X)
        return np.hstack([P, np.ones((len(P), 1), dtype=complex)])

    def jacobian(self, X):
        J = self.base.jacobian(X)
        return np.concatenate([J, np.zeros((J.shape[0], 1, self.d), dtype=complex)], axis=1)

    def contract_jacobian(self, X, C, P=None):
        return self.base.contract_jacobian(X, C[:, :-1], None if P is None else P[:, :-1])

    def integrals(self):
        b = self.base.integrals()
        return None if b is None else np.append(b, 1.0)

    def constant_coefficients(self):
        c = np.zeros(self.n, dtype=complex)
        c[-1] = 1.0
        return c

    def describe(self):
        return {"kind": "augmented", "n": self.n, "domain": self.domain, "base": self.base.describe()}


class ChristoffelRescaledSystem(_Wrapped):
    """``psi_k = phi_k / sqrt(eta)`` with ``eta = mean_k |phi_k|^2``.

    By construction ``sum_k |psi_k(x)|^2 = m`` at every point.
    """

    def __init__(self, base: FunctionSystem, constant_in_span: bool | None = None):
        if constant_in_span is None:
            constant_in_span = base.constant_coefficients() is not None
        inner = base if constant_in_span else AugmentedSystem(base)
        super().__init__(inner)
        self.original = base
        self.augmented = not constant_in_span
        self.n = self.m = inner.n

    def eta(self, X, P=None):
        if P is None:
            P = self.base.evaluate(X)
        eta = np.sum(np.abs(P) ** 2, axis=1) / self.m
        if np.any(~(eta > 0.0)):
            raise DegenerateChristoffel("Christoffel normalizer vanished; the base system has a common zero")
        return eta

    def evaluate(self, X):
        P = self.base.evaluate(X)
        return P / np.sqrt(self.eta(X, P))[:, None]

    def evaluate_with_jacobian(self, X):
        P, J = self.base.evaluate_with_jacobian(X)
        eta = self.eta(X, P)
        deta = (2.0 / self.m) * np.real(np.einsum("ik,ikj->ij", P.conj(), J))
        s = 1.0 / np.sqrt(eta)
        Jpsi = J * s[:, None, None] - 0.5 * (P * (s**3)[:, None])[:, :, None] * deta[:, None, :]
        return P * s[:, None], Jpsi

    def jacobian(self, X):
        return self.evaluate_with_jacobian(X)[1]

    def contract_jacobian(self, X, C, P=None):
        Pb = self.base.evaluate(X)
        eta = self.eta(X, Pb)
        s = 1.0 / np.sqrt(eta)
        # d psi = s d phi - (s^3 / 2) phi d eta, with d eta = (2/m) Re(conj(phi) . d phi)
        direct = self.base.contract_jacobian(X, C * s[:, None], Pb)
        coef = np.sum(C * Pb, axis=1) * (-0.5 * s**3)
        deta_raw = self.base.contract_jacobian(X, Pb.conj(), Pb)
        deta = (2.0 / self.m) * np.real(deta_raw)
        return direct + coef[:, None] * deta

    def constant_coefficients(self):
        return None

    def describe(self):
        return {"kind": "christoffel", "n": self.n, "domain": self.domain, "base": self.original.describe(),
                "augmented": self.augmented}


def christoffel_rescale(base: FunctionSystem, constant_in_span: bool | None = None) -> ChristoffelRescaledSystem:
    return ChristoffelRescaledSystem(base, constant_in_span)


class LinearTransformedSystem(_Wrapped):
    """``psi(x) = T @ phi(x)`` for a fixed (r, n) matrix ``T``."""

    def __init__(self, base: FunctionSystem, T):
        super().__init__(base)
        self.T = np.asarray(T, dtype=complex)
        if self.T.ndim != 2 or self.T.shape[1] != base.n:
            raise InvalidInput("transform must have shape (r, n_base)")
        self.n = self.T.shape[0]
        self.orthonormal = False

    def evaluate(self, X):
        return self.base.evaluate(X) @ self.T.T

    def jacobian(self, X):
        return np.einsum("rk,ikj->irj", self.T, self.base.jacobian(X))

    def evaluate_with_jacobian(self, X):
        P, J = self.base.evaluate_with_jacobian(X)
        return P @ self.T.T, np.einsum("rk,ikj->irj", self.T, J)

    def contract_jacobian(self, X, C, P=None):
        return self.base.contract_jacobian(X, C @ self.T)

    def integrals(self):
        b = self.base.integrals()
        return None if b is None else self.T @ b

    def constant_coefficients(self):
        c = self.base.constant_coefficients()
        if c is None:
            return None
        sol, *_ = np.linalg.lstsq(self.T.T, c, rcond=None)
        return sol if np.allclose(self.T.T @ sol, c, atol=1e-10) else None

    def describe(self):
        return {"kind": "linear", "n": self.n, "domain": self.domain, "base": self.base.describe()}


class SubsetSystem(LinearTransformedSystem):
    """A selection of columns of a base system."""

    def __init__(self, base: FunctionSystem, columns):
        cols = np.asarray(columns, dtype=int)
        T = np.zeros((len(cols), base.n))
        T[np.arange(len(cols)), cols] = 1.0
        super().__init__(base, T)
        self.columns = cols

    def evaluate(self, X):
        return self.base.evaluate(X)[:, self.columns]


class ProductSystem(_Wrapped):
    """Products ``prod_{c in combo} phi_c`` for a list of index tuples."""

    def __init__(self, base: FunctionSystem, combos):
        super().__init__(base)
        self.combos = [tuple(int(c) for c in combo) for combo in combos]
        if not self.combos:
            raise InvalidInput("need at least one product")
        self.n = len(self.combos)

    def evaluate(self, X):
        P = self.base.evaluate(X)
        out = np.ones((P.shape[0], self.n), dtype=complex)
        for col, combo in enumerate(self.combos):
            for c in combo:
                out[:, col] *= P[:, c]
        return out

    def evaluate_with_jacobian(self, X):
        P, J = self.base.evaluate_with_jacobian(X)
        N = P.shape[0]
        V = np.ones((N, self.n), dtype=complex)
        G = np.zeros((N, self.n, self.d), dtype=complex)
        for col, combo in enumerate(self.combos):
            for pos, c in enumerate(combo):
                rest = np.ones(N, dtype=complex)
                for q, c2 in enumerate(combo):
                    if q != pos:
                        rest *= P[:, c2]
                G[:, col, :] += rest[:, None] * J[:, c, :]
                V[:, col] *= P[:, c]
        return V, G

    def jacobian(self, X):
        return self.evaluate_with_jacobian(X)[1]

    def describe(self):
        return {"kind": "product", "n": self.n, "domain": self.domain, "base": self.base.describe(),
                "combos": self.combos}


class ExplicitSystem(FunctionSystem):
    """System given by user callables.

    Parameters
    ----------
    evaluate : callable
        ``(N, d) -> (N, n)`` complex.
    jacobian : callable, optional
        ``(N, d) -> (N, n, d)`` complex.
    domain : str
        ``"torus"`` or ``"sphere"``.
    """

    def __init__(self, n, d, evaluate, jacobian=None, domain="torus", integrals=None,
                 constant_coefficients=None):
        self.n, self.d, self.domain = int(n), int(d), domain
        self._f, self._j = evaluate, jacobian
        self.has_jacobian = jacobian is not None
        self._integrals = None if integrals is None else np.asarray(integrals, dtype=complex)
        self._const = None if constant_coefficients is None else np.asarray(constant_coefficients, dtype=complex)

    def evaluate(self, X):
        return np.asarray(self._f(self._points(X)), dtype=complex)

    def jacobian(self, X):
        if self._j is None:
            raise InvalidInput("this system has no Jacobian")
        return np.asarray(self._j(self._points(X)), dtype=complex)

    def integrals(self):
        return self._integrals

    def constant_coefficients(self):
        return self._const


def real_trig_system(r: int) -> ExplicitSystem:
    """``1, sqrt2 cos(2 pi k x), sqrt2 sin(2 pi k x)`` for ``k = 1..r`` on T^1.

    Orthonormal but not unimodular, so its Christoffel function varies.
    """
    ks = np.arange(1, r + 1, dtype=float)
    s2 = math.sqrt(2.0)

    def f(X):
        t = TWO_PI * X[:, :1] * ks[None, :]
        return np.hstack([np.ones((len(X), 1)), s2 * np.cos(t), s2 * np.sin(t)])

    def j(X):
        t = TWO_PI * X[:, :1] * ks[None, :]
        g = np.hstack([np.zeros((len(X), 1)), -s2 * TWO_PI * ks * np.sin(t), s2 * TWO_PI * ks * np.cos(t)])
        return g[:, :, None]

    integ = np.zeros(2 * r + 1)
    integ[0] = 1.0
    sys_ = ExplicitSystem(2 * r + 1, 1, f, j, "torus", integ, integ)
    sys_.orthonormal = True
    return sys_


def cosine_system() -> ExplicitSystem:
    """The single function ``sqrt2 cos(2 pi x)`` on T^1 (constant not in span)."""
    s2 = math.sqrt(2.0)
    return ExplicitSystem(
        1, 1,
        lambda X: s2 * np.cos(TWO_PI * X[:, :1]),
        lambda X: (-s2 * TWO_PI * np.sin(TWO_PI * X[:, :1]))[:, :, None],
        "torus", integrals=[0.0],
    )


# ---------------------------------------------------------------------------
# density modification


class DensityModifiedSystem(_Wrapped):
    """``phi_j = psi_j / sqrt(omega)`` where ``omega`` is supplied by a spectrum.

    ``spectrum`` must provide ``eigensystem(n)`` and ``density(X, n)``
    returning ``omega`` values, plus ``density_gradient(X, n)``.
    """

    def __init__(self, spectrum, n: int):
        super().__init__(spectrum.eigensystem(n))
        self.spectrum = spectrum
        self.truncation = n
        self.n = n

    def omega(self, X):
        return self.spectrum.density(self._points(X), self.truncation)

    def evaluate(self, X):
        X = self._points(X)
        return self.base.evaluate(X) / np.sqrt(self.omega(X))[:, None]

    def evaluate_with_jacobian(self, X):
        X = self._points(X)
        P, J = self.base.evaluate_with_jacobian(X)
        om = self.omega(X)
        dom = self.spectrum.density_gradient(X, self.truncation)
        s = 1.0 / np.sqrt(om)
        Jm = J * s[:, None, None] - 0.5 * (P * (s**3)[:, None])[:, :, None] * dom[:, None, :]
        return P * s[:, None], Jm

    def jacobian(self, X):
        return self.evaluate_with_jacobian(X)[1]

    def contract_jacobian(self, X, C, P=None):
        return np.einsum("ik,ikj->ij", C, self.jacobian(X))

    def describe(self):
        return {"kind": "density-modified", "n": self.n, "domain": self.domain}


def density_modified_system(spectrum, n: int) -> DensityModifiedSystem:
    return DensityModifiedSystem(spectrum, n)
