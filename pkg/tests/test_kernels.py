import itertools
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mzforge import _kernels_py, kernels
from mzforge.indexsets import SPARSE_2D, MultiIndexSet

BACKENDS = kernels.backends()
IDS = [b.BACKEND for b in BACKENDS]


def exact_frac(x, k):
    return float(sum((Fraction(int(kj)) * Fraction(float(xj)) for kj, xj in zip(k, x)), Fraction(0)) % 1)


def brute_first_generator(I, M):
    for z in itertools.product(range(M), repeat=I.shape[1]):
        if len({int(np.dot(k, z)) % M for k in I}) == len(I):
            return tuple(z)
    return None


def test_compiled_backend_available():
    assert kernels.BACKEND in ("cython", "python")
    assert _kernels_py in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_frac_phase_matches_rational_oracle(backend):
    rng = np.random.default_rng(3)
    X = rng.random((40, 2))
    K = MultiIndexSet(SPARSE_2D).array
    got = kernels.frac_phase(X, K, backend=backend)
    want = np.array([[exact_frac(x, k) for k in K] for x in X])
    assert np.all((got >= 0) & (got < 1))
    # the correctly rounded fractional part, up to one ulp of 1.0
    assert np.max(np.abs(got - want)) <= 2.0**-52


def test_backends_agree_bitwise():
    rng = np.random.default_rng(4)
    X = rng.random((300, 3))
    K = rng.integers(-10**9, 10**9, size=(25, 3))
    outs = [kernels.frac_phase(X, K, backend=b) for b in BACKENDS]
    for o in outs[1:]:
        assert np.array_equal(o, outs[0])


def test_frac_phase_refuses_unsafe_frequencies():
    with pytest.raises(OverflowError):
        kernels.frac_phase(np.zeros((1, 1)), np.array([[2**53]]))


@settings(max_examples=40, deadline=None)
@given(rows=st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=2, max_size=6, unique=True),
       M=st.integers(2, 13))
def test_first_generator_matches_brute_force(rows, M):
    I = np.array(rows, dtype=np.int64)
    want = brute_first_generator(I, M)
    for b in BACKENDS:
        got = kernels.first_generator(I, M, backend=b)
        assert (None if got is None else tuple(int(v) for v in got)) == want


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_residues_distinct(backend):
    I = np.array([[0], [1], [5]])
    assert kernels.residues_distinct(I, np.array([1]), 4, backend=backend) is not None
    assert bool(kernels.residues_distinct(I, np.array([1]), 4, backend=backend)) is False
    assert bool(kernels.residues_distinct(I, np.array([1]), 6, backend=backend)) is True


def test_environment_forces_pure_python():
    env = dict(os.environ, MZFORGE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from mzforge import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
