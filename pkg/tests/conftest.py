import numpy as np
import pytest


def tangent_directions(X, rng):
    """Random unit directions tangent to the sphere at each row of X."""
    T = rng.standard_normal(X.shape)
    T -= np.sum(T * X, axis=1, keepdims=True) * X
    return T / np.linalg.norm(T, axis=1, keepdims=True)


def unit_sphere_points(rng, N):
    Y = rng.standard_normal((N, 3))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def move(X, T, h, sphere):
    Y = X + h * T
    if sphere:
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    return Y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def objective_fd_error(parts, system, rng, N, h=1e-6):
    """Relative gap between the analytic directional derivative of
    ``parts(system, X, w) -> (f, gx, gw)`` and a central difference along a
    random joint direction in points and weights."""
    sphere = system.domain == "sphere"
    X = system.sample(rng, N)
    w = rng.uniform(0.5, 1.5, N) / N
    T = tangent_directions(X, rng) if sphere else rng.standard_normal(X.shape)
    dw = rng.standard_normal(N) / N
    _, gx, gw = parts(system, X, w)
    analytic = float(np.sum(gx * T) + gw @ dw)
    fp = parts(system, move(X, T, h, sphere), w + h * dw, need_points=False)[0]
    fm = parts(system, move(X, T, -h, sphere), w - h * dw, need_points=False)[0]
    fd = (fp - fm) / (2 * h)
    return abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-12)


# One verdict line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
