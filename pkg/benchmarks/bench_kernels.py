"""Time the grid kernel on both backends.

    python benchmarks/bench_kernels.py [--samples 1000] [--repeat 3]

Prints one line per (shape, backend) with the best wall time over the
repeats, the node throughput, and the speedup of the compiled core over the
numpy fallback. Both backends are checked to agree before timing.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from logperiod._kernels import BACKENDS, SHAPE_COSINE, SHAPE_COSMOD, SHAPE_SAW
from logperiod.fitter import COND_LIMIT, Grid
from logperiod.model import LpplParams, Shape, eval_lppl

SHAPES = {"cosine": (SHAPE_COSINE, Shape.COSINE), "cosmod": (SHAPE_COSMOD, Shape.COSMOD),
          "saw": (SHAPE_SAW, Shape.SAW)}


def _data(n, shape):
    t = np.linspace(2002.0, 2007.0, n)
    p = LpplParams(t_c=2007.6, alpha=0.45, A=7.0, B=-0.8, C=0.08, phi=1.0, shape=shape)
    y = eval_lppl(t, p) + np.random.default_rng(0).normal(0.0, 0.005, n)
    return t, y


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tc-nodes", type=int, default=146, help="critical-time nodes (146 = 2 years at 5 days)")
    args = ap.parse_args(argv)

    tcs = np.linspace(2007.0 + 5 / 365.25, 2009.0, args.tc_nodes)
    alphas = Grid(0.1, 1.0, 0.05).values()
    phis = Grid(0.0, 2 * math.pi, 2 * math.pi / 24, periodic=True).values()
    print(f"backends: {', '.join(sorted(BACKENDS))}; {args.samples} samples, {len(tcs)} t_c x {len(alphas)} alpha"
          f" (x {len(phis)} phi for non-cosine)")
    for name, (code, shape) in SHAPES.items():
        t, y = _data(args.samples, shape)
        ph = np.zeros(1) if code == SHAPE_COSINE else phis
        nodes = len(tcs) * len(alphas) * len(ph)
        results = {}
        for backend in sorted(BACKENDS):
            fn = BACKENDS[backend]
            results[backend] = _best(lambda: fn(t, y, tcs, alphas, ph, code, 0.3, math.log(2.0), COND_LIMIT),
                                     args.repeat)
        if len(results) == 2:
            a, b = results["cython"][1], results["python"][1]
            assert np.allclose(a, b, rtol=1e-10, atol=0), "backends disagree"
        for backend, (secs, _) in results.items():
            line = f"{name:7s} {backend:7s} {secs * 1e3:9.1f} ms  {nodes / secs / 1e3:9.1f} knodes/s"
            if backend == "cython" and "python" in results:
                line += f"  speedup x{results['python'][0] / secs:.1f}"
            print(line)


if __name__ == "__main__":
    main()
