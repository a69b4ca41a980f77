"""Finite frequency sets in Z^d and the named families used by the tool."""
from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInput

# Two sparse sets with huge frequencies whose minimal reconstructing
# lattices (113 in 2-D, 103 in 1-D) are far larger than the set sizes.
SPARSE_2D = [
    (0, 0),
    (2671704, 2671704),
    (-3111990, 3111990),
    (-4145974, -4145974),
    (4520742, -4520742),
    (-5553600, -5553600),
    (-6867835, 6867835),
    (18119640, 18119640),
    (39011940, -39011940),
    (-39021892, 39021892),
]
SPARSE_1D = [0, 107062, 124928, 1033760, 1414818, 2142995, 2820145, 4210229, 4645143, 5264579]


class MultiIndexSet:
    """An ordered set of distinct integer frequency vectors.

    Parameters
    ----------
    indices : array_like of int, shape (n, d) or (n,)
        The frequencies.  A 1-D input is read as ``n`` one-dimensional
        frequencies.  Order is preserved; duplicates are rejected.
    """

    __slots__ = ("_k",)

    def __init__(self, indices, dim: int | None = None):
        k = np.asarray(indices)
        if k.size == 0:
            raise InvalidInput("an index set needs at least one frequency")
        if k.dtype.kind not in "iu":
            kr = np.rint(np.asarray(k, dtype=float))
            if not np.array_equal(kr, k):
                raise InvalidInput("frequencies must be integers")
            k = kr
        k = np.asarray(k, dtype=np.int64)
        if k.ndim == 1:
            k = k[:, None] if dim in (None, 1) else k.reshape(-1, dim)
        if k.ndim != 2:
            raise InvalidInput(f"frequencies must form an (n, d) array, got shape {k.shape}")
        if dim is not None and k.shape[1] != dim:
            raise InvalidInput(f"expected dimension {dim}, got {k.shape[1]}")
        if len(np.unique(k, axis=0)) != len(k):
            raise InvalidInput("index set contains duplicate frequencies")
        k.setflags(write=False)
        self._k = k

    @property
    def array(self) -> np.ndarray:
        return self._k

    @property
    def dim(self) -> int:
        return self._k.shape[1]

    def __len__(self) -> int:
        return self._k.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self._k)

    def __contains__(self, k) -> bool:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        return bool(np.any(np.all(self._k == k, axis=1)))

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndexSet) and np.array_equal(self._k, other._k)

    def __hash__(self):
        return hash(self._k.tobytes())

    def __repr__(self) -> str:
        return f"MultiIndexSet(n={len(self)}, d={self.dim})"

    def as_set(self) -> set:
        return set(iter(self))

    def sorted(self) -> "MultiIndexSet":
        order = np.lexsort(self._k.T[::-1])
        return MultiIndexSet(self._k[order])

    def to_list(self) -> list:
        return [list(row) for row in self]


def _from_rows(rows, d) -> MultiIndexSet:
    arr = np.array(sorted(rows), dtype=np.int64).reshape(-1, d)
    return MultiIndexSet(arr)


def l1ball(d: int, r: int) -> MultiIndexSet:
    """All k in Z^d with |k_1| + ... + |k_d| <= r."""
    _check_family(d, r)
    rng = range(-r, r + 1)
    return _from_rows([k for k in itertools.product(rng, repeat=d) if sum(map(abs, k)) <= r], d)


def hyperbolic(d: int, T: int) -> MultiIndexSet:
    """Hyperbolic cross: all k with prod_j (|k_j| + 1) <= T."""
    _check_family(d, T)
    if T < 1:
        raise InvalidInput("hyperbolic cross needs T >= 1")
    rng = range(-(T - 1), T)
    rows = [k for k in itertools.product(rng, repeat=d) if np.prod([abs(v) + 1 for v in k]) <= T]
    return _from_rows(rows, d)


def cube(d: int, r: int) -> MultiIndexSet:
    """Full grid {-r, ..., r-1}^d, reconstructed exactly by the (2r)^d grid."""
    _check_family(d, r)
    if r < 1:
        raise InvalidInput("cube needs r >= 1")
    return _from_rows(list(itertools.product(range(-r, r), repeat=d)), d)


def _check_family(d, r):
    if d < 1 or r < 0:
        raise InvalidInput(f"invalid family parameters d={d}, r={r}")


def explicit(path) -> MultiIndexSet:
    """Load an index set from a JSON array of integer vectors."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if isinstance(data, dict):
        data = data.get("index_set", data.get("indices"))
    if not isinstance(data, list) or not data:
        raise InvalidInput(f"{path}: expected a non-empty JSON array of integer vectors")
    for i, row in enumerate(data):
        vals = row if isinstance(row, list) else [row]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
            raise InvalidInput(f"{path}: entry {i} is not an integer vector: {row!r}")
    rows = [r if isinstance(r, list) else [r] for r in data]
    if len({len(r) for r in rows}) != 1:
        raise InvalidInput(f"{path}: vectors have inconsistent lengths")
    return MultiIndexSet(np.array(rows, dtype=np.int64))


def save(I: MultiIndexSet, path) -> None:
    Path(path).write_text(json.dumps(I.to_list()))


NAMED = {
    "sparse2d": lambda: MultiIndexSet(SPARSE_2D),
    "i3": lambda: MultiIndexSet(SPARSE_2D),
    "sparse1d": lambda: MultiIndexSet(SPARSE_1D),
    "exp3-1d": lambda: MultiIndexSet(SPARSE_1D),
}

FAMILIES = {"l1ball": l1ball, "hyperbolic": hyperbolic, "cube": cube}


def parse_index_set(spec: str) -> MultiIndexSet:
    """Resolve ``family:d:r``, a named set, or a JSON file path."""
    if spec in NAMED:
        return NAMED[spec]()
    head, *rest = spec.split(":")
    if head in FAMILIES:
        if len(rest) != 2:
            raise InvalidInput(f"expected {head}:d:r, got {spec!r}")
        try:
            d, r = (int(v) for v in rest)
        except ValueError as exc:
            raise InvalidInput(f"non-integer parameters in {spec!r}") from exc
        return FAMILIES[head](d, r)
    if head == "explicit" and rest:
        return explicit(":".join(rest))
    if Path(spec).exists():
        return explicit(spec)
    raise InvalidInput(f"unknown index set {spec!r}")


def difference_set(I: MultiIndexSet) -> MultiIndexSet:
    """D(I) = {k - l : k, l in I}, sorted lexicographically."""
    k = I.array
    diffs = (k[:, None, :] - k[None, :, :]).reshape(-1, I.dim)
    D = np.unique(diffs, axis=0)
    n = len(I)
    assert len(D) <= n * n - n + 1
    return MultiIndexSet(D)


def sumset(I: MultiIndexSet, times: int) -> MultiIndexSet:
    """The ``times``-fold sumset I + ... + I, sorted lexicographically."""
    if times < 1:
        raise InvalidInput("sumset needs at least one summand")
    acc = np.unique(I.array, axis=0)
    for _ in range(times - 1):
        acc = np.unique((acc[:, None, :] + I.array[None, :, :]).reshape(-1, I.dim), axis=0)
    return MultiIndexSet(acc)
