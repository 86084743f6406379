"""Benchmark the batched bound kernel: compiled extension vs NumPy fallback.

The kernel (one symmetric eigendecomposition plus the selected trace of
the inverse per draw) dominates sweep runtime, so this is the number that
matters when choosing a backend.

Usage:
    python benchmarks/bench_kernels.py [--trials 4096] [--dim 120]
                                       [--targets 40] [--threads N]
                                       [--full-cell]
"""
import argparse
import time

import numpy as np

from wavecrb._kernels import pyref

try:
    from wavecrb._kernels import _speig
except ImportError:
    _speig = None


def make_batch(trials: int, dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((trials, dim, dim))
    return g @ g.transpose(0, 2, 1) + 0.05 * np.eye(dim)


def time_backend(fn, stack, sel, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(stack, sel, 1e-12)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernel(args) -> None:
    stack = make_batch(args.trials, args.dim)
    sel = np.arange(args.targets)
    t_ref = time_backend(pyref.eig_crb_batch, stack, sel, args.repeat)
    print(f"batch: {args.trials} matrices of size {args.dim}, {args.targets} selected")
    print(f"  python  : {t_ref:8.3f} s  ({args.trials / t_ref:8.0f} matrices/s)")
    if _speig is None:
        print("  ext     : not built")
        return

    # Pin BLAS pools to one thread while OpenMP parallelizes over matrices,
    # exactly as the library dispatcher does; without this the two thread
    # pools fight each other.
    from threadpoolctl import threadpool_limits

    def ext_call(a, s, r):
        with threadpool_limits(limits=1, user_api="blas"):
            return _speig.eig_crb_batch(a, s, r, args.threads)

    t_ext = time_backend(ext_call, stack, sel, args.repeat)
    print(
        f"  ext({args.threads}t) : {t_ext:8.3f} s  ({args.trials / t_ext:8.0f} "
        f"matrices/s)  speedup x{t_ref / t_ext:.2f}"
    )


def bench_full_cell(args) -> None:
    """One sweep cell end to end (symbols, weights, assembly, kernel)."""
    import os

    import wavecrb as w

    scenario = w.random_scenario(seed=11, n=128, l=40)
    const = w.by_name("qam16")
    sel = w.selection("delay", 40)
    basis = w.basis_sc(128)
    for backend, env in (("python", "python"), ("ext", None)):
        if backend == "ext" and _speig is None:
            continue
        os.environ["WAVECRB_BACKEND"] = env or "auto"
        import importlib

        import wavecrb._kernels as kernels

        importlib.reload(kernels)
        import wavecrb.montecarlo as mc

        importlib.reload(mc)
        start = time.perf_counter()
        mc.estimate_crb(
            scenario, basis, const, sel, trials=args.trials, seed=1, threads=args.threads
        )
        elapsed = time.perf_counter() - start
        print(f"  cell[{backend:6s}]: {elapsed:7.2f} s  ({args.trials / elapsed:6.0f} trials/s)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=4096)
    parser.add_argument("--dim", type=int, default=120)
    parser.add_argument("--targets", type=int, default=40)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument(
        "--full-cell",
        action="store_true",
        help="also time one full sweep cell per backend",
    )
    args = parser.parse_args()
    bench_kernel(args)
    if args.full_cell:
        print("full sweep cell (N=128, L=40, 16-QAM, single-carrier):")
        bench_full_cell(args)


if __name__ == "__main__":
    main()
