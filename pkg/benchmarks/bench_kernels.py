"""Benchmark the world-model hot kernels: numba JIT vs pure numpy.

Times `forward` and `loss_grad` on synthetic per-edge batches of several
sizes. The compiled path is what the package uses by default; setting
FOLDPLAN_DISABLE_NUMBA=1 falls back to the numpy implementations, which
this script times directly regardless of the flag.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from foldplan import _kernels
from foldplan.world_model import HIDDEN, N_FEATURES, WorldModel


def _batch(ne, rng):
    X = rng.standard_normal((ne, 2 * N_FEATURES))
    tgt_d = rng.standard_normal((ne, 2))
    tgt_m = (rng.random(ne) < 0.3).astype(np.float64)
    tgt_c = (rng.random(ne) < 0.2).astype(np.float64)
    return np.ascontiguousarray(X), tgt_d, tgt_m, tgt_c


def _grad_bufs():
    f2 = 2 * N_FEATURES
    return (np.zeros((f2, HIDDEN)), np.zeros(HIDDEN),
            np.zeros((HIDDEN, 2)), np.zeros(2),
            np.zeros(HIDDEN), np.zeros(1), np.zeros(HIDDEN), np.zeros(1))


def _time(fn, repeats):
    fn()                       # warm-up (includes JIT compile on first call)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    model = WorldModel.initialize(seed=0)
    params = model._args()

    print(f"numba available and active: {_kernels.USING_NUMBA}")
    header = f"{'kernel':<12}{'edges':>8}{'numpy us':>12}{'numba us':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for ne in (16, 112, 1024):
        X, tgt_d, tgt_m, tgt_c = _batch(ne, rng)

        t_np = _time(lambda: _kernels.forward_numpy(X, *params), args.repeats)
        t_nb = _time(lambda: _kernels.forward(X, *params), args.repeats)
        print(f"{'forward':<12}{ne:>8}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}"
              f"{t_np / t_nb:>9.2f}x")

        def run_np():
            _kernels.loss_grad_numpy(X, tgt_d, tgt_m, tgt_c, *params,
                                     *_grad_bufs())

        def run_nb():
            _kernels.loss_grad(X, tgt_d, tgt_m, tgt_c, *params, *_grad_bufs())

        t_np = _time(run_np, args.repeats)
        t_nb = _time(run_nb, args.repeats)
        print(f"{'loss_grad':<12}{ne:>8}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}"
              f"{t_np / t_nb:>9.2f}x")


if __name__ == "__main__":
    main()
