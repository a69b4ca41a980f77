"""Time the compiled and numpy kernels against each other.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import sys
import timeit

import numpy as np

from mzforge import kernels
from mzforge.indexsets import SPARSE_1D, SPARSE_2D, MultiIndexSet, l1ball


def _cases():
    rng = np.random.default_rng(0)
    big = MultiIndexSet(SPARSE_2D).array
    yield "frac_phase l1ball(2,4) x 2000 pts", "frac_phase", (rng.random((2000, 2)), l1ball(2, 4).array)
    yield "frac_phase I3 (|k|~4e7) x 2000 pts", "frac_phase", (rng.random((2000, 2)), big)
    yield "first_generator I3, M=113", "first_generator", (big, 113)
    yield "first_generator I3, M=112 (exhaustive)", "first_generator", (big, 112)
    yield "first_generator 1-D sparse, M=102", "first_generator", (MultiIndexSet(SPARSE_1D).array, 102)


def _same(a, b):
    if a is None or b is None:
        return a is b
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)

    impls = {m.BACKEND: m for m in kernels.backends()}
    if len(impls) < 2:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
    rows = []
    print(f"{'case':42s} " + " ".join(f"{name:>12s}" for name in impls) + "   speedup")
    for label, fn, fargs in _cases():
        times = {}
        outputs = {}
        for name, mod in impls.items():
            call = lambda: getattr(kernels, fn)(*fargs, backend=mod)  # noqa: E731
            outputs[name] = call()
            times[name] = min(timeit.repeat(call, number=1, repeat=args.repeat))
        first = next(iter(outputs.values()))
        agree = all(_same(o, first) for o in outputs.values())
        speedup = times.get("python", np.nan) / times.get("cython", np.nan)
        print(f"{label:42s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times.values())
              + f"   {speedup:6.1f}x" + ("" if agree else "   MISMATCH"))
        rows.append({"case": label, "seconds": times, "speedup": speedup, "agree": agree})
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
