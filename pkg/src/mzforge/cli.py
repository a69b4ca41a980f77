"""Command-line interface: ``mzforge design|verify|lattice|recover|experiment``.

Exit codes: 0 success, 2 the result is valid but not exact, 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .design import OptimizerConfig, gramian
from .errors import MzForgeError
from .indexsets import MultiIndexSet, parse_index_set
from .linalg import spectral_distance_to_identity

EXIT_OK, EXIT_ERROR, EXIT_NOT_EXACT = 0, 1, 2

OPTIMIZER_DEFAULTS = {"points": None, "restarts": 10, "seed": 0, "eps_target": 1e-13, "weights": "free",
                      "max_iters": 3000}


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.integer, np.floating, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MzForgeError(f"{args.config}: line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise MzForgeError(f"{args.config}: expected a JSON object")
        for key, value in data.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise MzForgeError(f"{args.config}: unknown field '{key}'")
            if getattr(args, attr) is None:
                setattr(args, attr, value)
    for key, value in OPTIMIZER_DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(max_restarts=args.restarts, seed=args.seed, eps_target=args.eps_target,
                           weight_mode=args.weights, max_iters=args.max_iters)


def _build_system(args):
    from .systems import SphereSystem, TrigSystem

    if args.domain == "torus":
        if not args.index:
            raise MzForgeError("--index is required for the torus domain")
        return TrigSystem(parse_index_set(args.index))
    if args.degree is None:
        raise MzForgeError("--degree is required for the sphere domain")
    return SphereSystem(args.degree)


# ---------------------------------------------------------------------------
# commands


def cmd_design(args) -> int:
    from .io import save_design, write_csv
    from .quadrature import build_exact_l2_mz, build_lp_mz_even, build_tchakaloff

    _apply_config(args)
    system = _build_system(args)
    config = _optimizer_config(args)
    if args.kind == "quad":
        design = build_tchakaloff(system, config, args.points)
    elif args.p != 2:
        design = build_lp_mz_even(system, args.p, config, args.points)
    else:
        design = build_exact_l2_mz(system, config, args.points)
    res = design.design
    meta = {"seed": config.seed, "restarts": res.restarts_used, "iterations": res.iterations}
    p = "quad" if args.kind == "quad" else args.p
    if args.out:
        save_design(args.out, system, design.measure, design.mz_constant, design.exact, p, meta)
    if args.csv:
        write_csv(args.csv, design.measure)
    _emit({"exact": design.exact, "mz_constant": design.mz_constant, "atoms": len(design.measure), "p": p,
           "out": args.out, **meta})
    return EXIT_OK if design.exact else EXIT_NOT_EXACT


def cmd_verify(args) -> int:
    from .frames import verify_parseval
    from .io import load_design
    from .quadrature import lifted_system, quadrature_error

    loaded = load_design(args.design)
    if loaded.p == "quad":
        eps = quadrature_error(loaded.system, loaded.measure)
        report = {"quadrature_error": eps}
    else:
        system = lifted_system(loaded.system, loaded.p)
        eps = spectral_distance_to_identity(gramian(system, loaded.measure))
        report = {"parseval": verify_parseval(system, loaded.measure, args.trials)}
    exact = bool(eps <= args.eps_target)
    stored = loaded.mz_constant
    _emit({"exact": exact, "mz_constant": eps, "stored_mz_constant": stored,
           "matches_stored": bool(abs(eps - stored) <= 1e-14) if np.isfinite(stored) else None,
           "atoms": len(loaded.measure), "weight_sum": float(loaded.measure.weights.sum()), **report})
    return EXIT_OK if exact else EXIT_NOT_EXACT


def _index_arg(args):
    spec = args.index_set or args.index
    if not spec:
        raise MzForgeError("an index set is required (--index-set FILE or --index NAME)")
    return parse_index_set(spec)


def cmd_lattice(args) -> int:
    from .lattice import (Rank1Lattice, fooling_index_set, lattices_refuted, minimal_lattice_size,
                          reconstructs, verify_fooling)

    if args.lattice_cmd == "search":
        I = _index_arg(args)
        out = minimal_lattice_size(I, args.max_size, budget=args.budget)
        if not isinstance(out, tuple):
            _emit({"status": "partial", "scanned": list(out.scanned), **out.details})
            return EXIT_NOT_EXACT
        M, z = out
        _emit({"status": "found" if M else "none", "minimal_size": M, "generator": list(z) if z else None,
               "index_size": len(I)})
        return EXIT_OK if M else EXIT_NOT_EXACT
    if args.lattice_cmd == "fool":
        rows = []
        ok = True
        b = args.b or [1] * args.dim
        a = args.a or [0] * args.dim
        for M in range(args.min_lattice, args.max_lattice + 1):
            I = fooling_index_set(a, b, M)
            rep = verify_fooling(I, M)
            refuted = lattices_refuted(I, M)
            ok &= refuted and rep["vanishes"]
            rows.append({"M": M, "index_set": I.to_list(), "refuted": refuted, **rep})
        _emit({"dim": args.dim, "results": rows, "all_refuted": ok})
        return EXIT_OK if ok else EXIT_NOT_EXACT
    # check
    I = _index_arg(args)
    lat = Rank1Lattice(args.size, tuple(args.gen))
    ok = reconstructs(lat, I)
    _emit({"size": lat.M, "generator": list(lat.z), "reconstructs": ok, "degenerate": lat.degenerate})
    return EXIT_OK if ok else EXIT_NOT_EXACT


def cmd_recover(args) -> int:
    from .errors import NonExactDesign
    from .io import load_operator, save_operator
    from .recovery import PeriodicSobolevSpectrum, build_recovery, recovery_error_bound_check

    if args.recover_cmd == "build":
        spectrum = PeriodicSobolevSpectrum(args.s, args.dim)
        config = OptimizerConfig(max_restarts=args.restarts, seed=args.seed)
        try:
            op = build_recovery(spectrum, args.n, config)
        except NonExactDesign as exc:
            op = exc.result
        if args.out:
            save_operator(args.out, op)
        _emit({"exact": op.exact, "N": op.N, "n": op.n, "orthonormality_error": op.orthonormality_error,
               "tail_trace": spectrum.tail_trace(args.n), "out": args.out})
        return EXIT_OK if op.exact else EXIT_NOT_EXACT
    op = load_operator(args.op)
    rep = recovery_error_bound_check(op, trials=args.trials, seed=args.seed)
    ok = op.exact and rep["max_ratio"] <= 1.0 + 1e-6
    _emit({"exact": op.exact, "orthonormality_error": op.orthonormality_error, **rep})
    return EXIT_OK if ok else EXIT_NOT_EXACT


def cmd_experiment(args) -> int:
    from .experiments import ExperimentConfig, run_experiment

    cfg = ExperimentConfig(args.experiment, args.scale, args.seed, Path(args.out), args.restarts, args.dims,
                           args.n_values, args.max_iters)
    summary = run_experiment(cfg)
    _emit(summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_optimizer_flags(p):
    p.add_argument("--points", type=int, help="number of design points (default: product-span dimension)")
    p.add_argument("--restarts", type=int, help="maximum restarts (default 10)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--eps-target", type=float, help="exactness threshold on ε (default 1e-13)")
    p.add_argument("--weights", choices=["equal", "free"], help="weight mode (default free)")
    p.add_argument("--max-iters", type=int, help="BFGS iteration cap per restart (default 3000)")
    p.add_argument("--config", help="JSON file with any of the above options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mzforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="optimize and reduce an exact design")
    p.add_argument("--domain", choices=["torus", "sphere"], default="torus")
    p.add_argument("--index", help="index set: l1ball:d:r, hyperbolic:d:T, cube:d:r, a name, or a JSON file")
    p.add_argument("--degree", type=int, help="polynomial degree on the sphere")
    p.add_argument("--kind", choices=["mz", "quad"], default="mz", help="MZ design or positive quadrature")
    p.add_argument("--p", type=int, default=2, help="even exponent for Lp designs")
    p.add_argument("--out", help="design JSON output path")
    p.add_argument("--csv", help="also write atoms as CSV")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="recompute ε for a design file")
    p.add_argument("--design", required=True)
    p.add_argument("--eps-target", type=float, default=1e-13)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lattice", help="rank-1 lattice tools")
    lsub = p.add_subparsers(dest="lattice_cmd", required=True)
    q = lsub.add_parser("search", help="minimal reconstructing lattice size")
    q.add_argument("--index-set")
    q.add_argument("--index")
    q.add_argument("--max-size", type=int, default=200)
    q.add_argument("--budget", type=float, default=2e9, help="cap on scanned generators")
    q = lsub.add_parser("fool", help="generate and refute fooling index sets")
    q.add_argument("--dim", type=int, default=1)
    q.add_argument("--max-lattice", type=int, default=8)
    q.add_argument("--min-lattice", type=int, default=1)
    q.add_argument("--a", type=_int_list)
    q.add_argument("--b", type=_int_list)
    q = lsub.add_parser("check", help="does a lattice reconstruct an index set")
    q.add_argument("--size", type=int, required=True)
    q.add_argument("--gen", type=_int_list, required=True)
    q.add_argument("--index-set")
    q.add_argument("--index")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("recover", help="sampling recovery operators")
    rsub = p.add_subparsers(dest="recover_cmd", required=True)
    q = rsub.add_parser("build")
    q.add_argument("--kernel", choices=["sobolev"], default="sobolev")
    q.add_argument("--s", type=float, default=2.0)
    q.add_argument("--dim", type=int, default=1)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--restarts", type=int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q = rsub.add_parser("check")
    q.add_argument("--op", required=True)
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("experiment", help="reproduction runs with CSV/JSON output")
    p.add_argument("experiment", choices=["exp1", "exp2", "exp3"])
    p.add_argument("--scale", choices=["desk", "full"], default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int)
    p.add_argument("--dims", type=_int_list)
    p.add_argument("--n-values", type=_int_list)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MzForgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
