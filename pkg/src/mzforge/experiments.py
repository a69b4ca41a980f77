"""Reproduction runs: fixed index sets, random-frequency sweeps, sharpness probes.

Each run writes ``results.csv``, ``summary.json`` and a ``checkpoint.jsonl``
in its output directory.  Completed cells found in the checkpoint are
reused, so an interrupted run resumes where it stopped.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .design import OptimizerConfig, gramian, optimize_frobenius
from .indexsets import SPARSE_1D, SPARSE_2D, MultiIndexSet, difference_set, hyperbolic, l1ball
from .io import save_design
from .lattice import minimal_lattice_size
from .linalg import spectral_distance_to_identity
from .systems import TrigSystem

log = logging.getLogger(__name__)

SUCCESS_EPS = 1e-10

# Thresholds around which the desk sweep of the random-frequency run is centred.
SWEEP_CENTRES = {1: 241, 2: 192, 3: 129, 4: 97, 5: 78, 6: 66, 7: 56}

DEFAULTS = {
    "exp1": {
        "desk": {"restarts": {"l1ball": 20, "hyperbolic": 50, "sparse2d": 5}, "max_iters": 3000},
        "full": {"restarts": {"l1ball": 50, "hyperbolic": 50, "sparse2d": 50}, "max_iters": 5000},
    },
    "exp2": {
        "desk": {"dims": [1, 2, 3], "factors": [0.75, 1.0, 1.25], "restarts": 10, "max_iters": 10000,
                 "frequencies": 20, "box": 100},
        "full": {"dims": list(range(1, 21)), "n_values": list(range(20, 301)), "restarts": 50,
                 "max_iters": 10000, "frequencies": 20, "box": 100},
    },
    "exp3": {
        "desk": {"n_values": [70, 80, 85, 88, 91, 94, 100, 110], "restarts": 5, "max_iters": 5000},
        "full": {"n_values": list(range(20, 201)), "restarts": 1000, "max_iters": 5000},
    },
}


@dataclass
class ExperimentConfig:
    """Which run, at what scale, and where to write.

    ``restarts``, ``dims``, ``n_values`` and ``max_iters`` override the
    scale defaults in :data:`DEFAULTS` when given.
    """

    experiment: str
    scale: str = "desk"
    seed: int = 0
    outdir: Path = Path("results")
    restarts: int | None = None
    dims: list | None = None
    n_values: list | None = None
    max_iters: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.scale not in ("desk", "full"):
            raise ValueError("scale must be 'desk' or 'full'")
        self.outdir = Path(self.outdir)

    def defaults(self) -> dict:
        return DEFAULTS[self.experiment][self.scale]


def cell_seed(seed: int, *key: int) -> int:
    """Deterministic 32-bit seed for one cell of a sweep."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])


class _Checkpoint:
    def __init__(self, path: Path):
        self.path = path
        self.done = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self.done[rec["key"]] = rec
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def get(self, key):
        return self.done.get(key)

    def put(self, key, rec):
        rec = {"key": key, **rec}
        self.done[key] = rec
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")
        return rec


def _cell(system, n, cfg, seed, restarts, max_iters, weight_mode):
    t0 = time.perf_counter()
    res = optimize_frobenius(system, n, OptimizerConfig(
        max_restarts=restarts, seed=seed, weight_mode=weight_mode, max_iters=max_iters,
        eps_target=cfg.options.get("eps_target", 1e-13)))
    # independent recomputation from the returned atoms
    reverified = spectral_distance_to_identity(gramian(system, res.measure))
    rec = {"n": n, "eps": res.mz_constant, "reverified_eps": reverified, "exact": res.mz_constant < SUCCESS_EPS,
           "restarts_used": res.restarts_used,
           "iterations": [r["iterations"] for r in res.restart_log], "seed": seed, "weights": weight_mode,
           "seconds": round(time.perf_counter() - t0, 3)}
    return rec, res


def _write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _finish(cfg, rows, columns, summary):
    _write_csv(cfg.outdir / "results.csv", rows, columns)
    summary = {"schema": "mzexperiment/1", "tool_version": __version__, "config": _jsonable(asdict(cfg)),
               **summary}
    (cfg.outdir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    return summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def run_exp1(cfg: ExperimentConfig) -> dict:
    """Three fixed index sets at their point counts, plus lattice facts for the sparse set."""
    dfl = cfg.defaults()
    ck = _Checkpoint(cfg.outdir / "checkpoint.jsonl")
    cases = {"l1ball": (l1ball(2, 4), 41), "hyperbolic": (hyperbolic(2, 6), 45),
             "sparse2d": (MultiIndexSet(SPARSE_2D), 91)}
    rows = []
    for i, (name, (I, n)) in enumerate(cases.items()):
        key = f"exp1/{name}"
        rec = ck.get(key)
        if rec is None:
            system = TrigSystem(I)
            restarts = cfg.restarts or dfl["restarts"][name]
            seed = cell_seed(cfg.seed, 1, i)
            rec, res = _cell(system, n, cfg, seed, restarts, cfg.max_iters or dfl["max_iters"], "free")
            rec.update(name=name, index_size=len(I), difference_size=len(difference_set(I)))
            design_path = cfg.outdir / f"exp1_{name}.json"
            save_design(design_path, system, res.measure, res.mz_constant, rec["exact"],
                        meta={"seed": seed, "restarts": res.restarts_used, "iterations": res.iterations})
            rec["design"] = design_path.name
            rec = ck.put(key, rec)
        rows.append(rec)
    lattice = {}
    for name, I in (("sparse2d", MultiIndexSet(SPARSE_2D)), ("sparse1d", MultiIndexSet(SPARSE_1D))):
        M, z = minimal_lattice_size(I, 200)
        lattice[name] = {"minimal_size": M, "generator": list(z), "difference_size": len(difference_set(I))}
    cols = ["name", "index_size", "difference_size", "n", "eps", "reverified_eps", "exact", "restarts_used", "seed",
            "seconds", "design"]
    return _finish(cfg, rows, cols, {"designs": {r["name"]: {"eps": r["eps"], "exact": r["exact"], "n": r["n"]}
                                                 for r in rows}, "lattice": lattice})


def random_frequencies(d: int, count: int, box: int, seed: int) -> MultiIndexSet:
    """``count`` distinct frequencies drawn uniformly from ``{-box..box}^d``."""
    rng = np.random.default_rng(seed)
    chosen = {}
    while len(chosen) < count:
        k = tuple(int(v) for v in rng.integers(-box, box + 1, d))
        chosen.setdefault(k, None)
    return MultiIndexSet(np.array(list(chosen), dtype=np.int64))


def exp2_n_values(d: int, factors) -> list[int]:
    centre = SWEEP_CENTRES.get(d, max(20, 400 // d))
    return sorted({int(round(centre * f)) for f in factors})


def run_exp2(cfg: ExperimentConfig) -> dict:
    """ε against n with equal weights for random frequency sets of growing dimension."""
    dfl = cfg.defaults()
    ck = _Checkpoint(cfg.outdir / "checkpoint.jsonl")
    dims = cfg.dims or dfl["dims"]
    restarts = cfg.restarts or dfl["restarts"]
    rows = []
    nstar = {}
    for d in dims:
        I = random_frequencies(d, dfl["frequencies"], dfl["box"], cell_seed(cfg.seed, 2, d))
        system = TrigSystem(I)
        ns = cfg.n_values or dfl.get("n_values") or exp2_n_values(d, dfl["factors"])
        for n in ns:
            key = f"exp2/{d}/{n}"
            rec = ck.get(key)
            if rec is None:
                rec, _ = _cell(system, n, cfg, cell_seed(cfg.seed, 2, d, n), restarts,
                               cfg.max_iters or dfl["max_iters"], "equal")
                rec.update(d=d, difference_size=system.product_span_dimension)
                rec = ck.put(key, rec)
            rows.append(rec)
        hits = [r["n"] for r in rows if r["d"] == d and r["eps"] < SUCCESS_EPS]
        nstar[str(d)] = {"n_star": min(hits) if hits else None, "floor_400_over_d": 400 // d,
                         "frequencies": I.to_list()}
    cols = ["d", "n", "eps", "reverified_eps", "exact", "restarts_used", "seed", "difference_size", "seconds"]
    return _finish(cfg, rows, cols, {"n_star": nstar})


def run_exp3(cfg: ExperimentConfig) -> dict:
    """ε against n for the sparse 1-D set, with equal and with free weights."""
    dfl = cfg.defaults()
    ck = _Checkpoint(cfg.outdir / "checkpoint.jsonl")
    system = TrigSystem(MultiIndexSet(SPARSE_1D))
    restarts = cfg.restarts or dfl["restarts"]
    rows = []
    drops = {}
    for mode_idx, mode in enumerate(("equal", "free")):
        for n in cfg.n_values or dfl["n_values"]:
            key = f"exp3/{mode}/{n}"
            rec = ck.get(key)
            if rec is None:
                rec, _ = _cell(system, n, cfg, cell_seed(cfg.seed, 3, mode_idx, n), restarts,
                               cfg.max_iters or dfl["max_iters"], mode)
                rec = ck.put(key, rec)
            rows.append(rec)
        hits = [r["n"] for r in rows if r["weights"] == mode and r["eps"] < SUCCESS_EPS]
        drops[mode] = min(hits) if hits else None
    cols = ["weights", "n", "eps", "reverified_eps", "exact", "restarts_used", "seed", "seconds"]
    return _finish(cfg, rows, cols, {"first_exact_n": drops, "difference_size": system.product_span_dimension})


RUNNERS = {"exp1": run_exp1, "exp2": run_exp2, "exp3": run_exp3}


def run_experiment(cfg: ExperimentConfig) -> dict:
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.experiment](cfg)
