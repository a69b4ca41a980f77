"""JSON and CSV serialization for designs, frames and recovery operators."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .design import DiscreteMeasure
from .errors import InvalidInput
from .indexsets import MultiIndexSet
from .systems import FunctionSystem, SphereSystem, TrigSystem

DESIGN_SCHEMA = "mzdesign/1"
ENTF_SCHEMA = "mzentf/1"
OPERATOR_SCHEMA = "mzrecovery/1"


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def _field(data, key, path, kind=None):
    if not isinstance(data, dict) or key not in data:
        raise InvalidInput(f"{path}: missing field '{key}'")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise InvalidInput(f"{path}: field '{key}' has type {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# designs


def system_descriptor(system: FunctionSystem) -> dict:
    if isinstance(system, TrigSystem):
        return {"domain": "torus", "index_set": system.index_set.to_list()}
    if isinstance(system, SphereSystem):
        return {"domain": "sphere", "degree": system.degree}
    raise InvalidInput(f"design files support torus and sphere systems, not {type(system).__name__}")


def design_to_dict(system: FunctionSystem, measure: DiscreteMeasure, mz_constant: float, exact: bool, p=2,
                   meta: dict | None = None) -> dict:
    out = {"schema": DESIGN_SCHEMA, **system_descriptor(system), "p": p,
           "points": measure.points.tolist(), "weights": measure.weights.tolist(),
           "mz_constant": float(mz_constant), "exact": bool(exact)}
    out["meta"] = {"tool_version": __version__, **(meta or {})}
    return out


def save_design(path, system, measure, mz_constant, exact, p=2, meta=None) -> None:
    _write_json(path, design_to_dict(system, measure, mz_constant, exact, p, meta))


@dataclass
class LoadedDesign:
    system: FunctionSystem
    measure: DiscreteMeasure
    p: int | str
    mz_constant: float
    exact: bool
    meta: dict
    raw: dict


def system_from_descriptor(data: dict, path="<design>") -> FunctionSystem:
    domain = _field(data, "domain", path, str)
    if domain == "torus":
        idx = _field(data, "index_set", path, list)
        try:
            return TrigSystem(MultiIndexSet(np.array(idx, dtype=np.int64)))
        except (ValueError, TypeError) as exc:
            raise InvalidInput(f"{path}: field 'index_set': {exc}") from exc
    if domain == "sphere":
        deg = _field(data, "degree", path, int)
        return SphereSystem(deg)
    raise InvalidInput(f"{path}: field 'domain' must be 'torus' or 'sphere', got {domain!r}")


def load_design(path) -> LoadedDesign:
    data = _read_json(path)
    schema = _field(data, "schema", path, str)
    if schema != DESIGN_SCHEMA:
        raise InvalidInput(f"{path}: field 'schema' is {schema!r}, expected {DESIGN_SCHEMA!r}")
    system = system_from_descriptor(data, path)
    points = _field(data, "points", path, list)
    weights = _field(data, "weights", path, list)
    try:
        pts = np.array(points, dtype=float).reshape(len(points), -1) if points else np.zeros((0, system.d))
        measure = DiscreteMeasure(pts, np.array(weights, dtype=float), "conic")
    except (ValueError, TypeError) as exc:
        raise InvalidInput(f"{path}: fields 'points'/'weights': {exc}") from exc
    if measure.dim != system.d:
        raise InvalidInput(f"{path}: field 'points' has dimension {measure.dim}, expected {system.d}")
    p = data.get("p", 2)
    if not (p == "quad" or (isinstance(p, int) and p >= 2 and p % 2 == 0)):
        raise InvalidInput(f"{path}: field 'p' must be an even integer or 'quad'")
    return LoadedDesign(system, measure, p, float(data.get("mz_constant", np.nan)), bool(data.get("exact", False)),
                        data.get("meta", {}), data)


def write_csv(path, measure: DiscreteMeasure) -> None:
    d = measure.dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{j + 1}" for j in range(d)] + ["weight"])
        for x, wt in zip(measure.points, measure.weights):
            w.writerow([repr(float(v)) for v in x] + [repr(float(wt))])


def read_csv(path) -> DiscreteMeasure:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "weight":
        raise InvalidInput(f"{path}: line 1: expected a header ending in 'weight'")
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            body.append([float(v) for v in row])
        except ValueError as exc:
            raise InvalidInput(f"{path}: line {lineno}: {exc}") from exc
    arr = np.array(body, dtype=float).reshape(len(body), len(rows[0]))
    return DiscreteMeasure(arr[:, :-1], arr[:, -1], "conic")


# ---------------------------------------------------------------------------
# frames and operators


def _complex_pairs(M):
    M = np.asarray(M)
    return [[[float(v.real), float(v.imag)] for v in row] for row in M]


def _from_pairs(rows):
    arr = np.array(rows, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def entf_to_dict(result) -> dict:
    return {"schema": ENTF_SCHEMA, "n": result.system.n, "transform": _complex_pairs(result.transform.entries),
            "points": result.measure.points.tolist(), "weights": result.measure.weights.tolist(),
            "norm_cap": result.norm_cap, "certificate": result.certificate, "ok": result.ok,
            "meta": {"tool_version": __version__}}


def save_entf(path, result) -> None:
    _write_json(path, entf_to_dict(result))


def load_entf_transform(path) -> np.ndarray:
    data = _read_json(path)
    return _from_pairs(_field(data, "transform", path, list))


def spectrum_from_descriptor(desc: dict, path="<operator>"):
    from .recovery import PeriodicSobolevSpectrum

    kind = _field(desc, "kind", path, str)
    if kind != "sobolev":
        raise InvalidInput(f"{path}: field 'kernel.kind' must be 'sobolev', got {kind!r}")
    return PeriodicSobolevSpectrum(float(_field(desc, "s", path)), int(_field(desc, "dim", path, int)))


def operator_to_dict(op) -> dict:
    return {"schema": OPERATOR_SCHEMA, "kernel": op.spectrum.describe(), "n": op.n,
            "points": op.points.tolist(), "weights": op.weights.tolist(), "omega": op.omega.tolist(),
            "exact": op.exact, "orthonormality_error": op.orthonormality_error, "mz_constant": op.mz_constant,
            "meta": {"tool_version": __version__, **op.meta}}


def save_operator(path, op) -> None:
    _write_json(path, operator_to_dict(op))


def load_operator(path):
    from .recovery import operator_from_design

    data = _read_json(path)
    schema = _field(data, "schema", path, str)
    if schema != OPERATOR_SCHEMA:
        raise InvalidInput(f"{path}: field 'schema' is {schema!r}, expected {OPERATOR_SCHEMA!r}")
    spectrum = spectrum_from_descriptor(_field(data, "kernel", path, dict), path)
    n = _field(data, "n", path, int)
    pts = np.array(_field(data, "points", path, list), dtype=float)
    measure = DiscreteMeasure(pts.reshape(len(pts), -1), np.array(_field(data, "weights", path, list)), "conic")
    return operator_from_design(spectrum, n, measure, float(data.get("mz_constant", np.nan)), data.get("meta", {}))
