"""Benchmark the numba iteration kernels against the pure-numpy fallback.

Runs the reconstruction workloads that dominate real usage: a basin-style
grid in dimension 3 and flat-target searches in dimensions 7 and 13.  Both
backends produce the same converged states; the table reports wall time
and throughput.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from pauli_forge import backend, kernels
from pauli_forge.core import Distribution, computational_basis, fourier_basis
from pauli_forge.imposition import default_config
from pauli_forge.partner_search import (
    GridStrategy,
    RandomStrategy,
    ReconstructionProblem,
    build_seeds,
)


def workloads():
    for n, strategy, label in (
        (3, GridStrategy(64), "dim 3, 64x64 grid (basin map)"),
        (7, RandomStrategy(4096), "dim 7, 4096 random seeds"),
        (13, RandomStrategy(1024), "dim 13, 1024 random seeds"),
    ):
        flat = Distribution.flat(n)
        problem = ReconstructionProblem(
            (computational_basis(n), fourier_basis(n)), (flat, flat))
        yield label, problem, build_seeds(problem, strategy)


def run(problem, seeds, max_iter):
    chain = problem.to_chain()
    config = default_config(chain)
    return kernels.iterate_batch(chain.basis_matrices(), chain.sqrt_targets(),
                                 seeds, max_iter, config.tol,
                                 config.cycle_window, config.stall_tol)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    names = ["numpy"]
    if backend.numba_available():
        names.append("numba")
        # trigger compilation outside the timed region
        backend.set_backend("numba")
        for _label, problem, seeds in workloads():
            run(problem, seeds[:8], 50)
        backend.set_backend(None)
    else:
        print("numba not importable; benchmarking the fallback only")

    print(f"{'workload':38s} {'backend':7s} {'time':>9s} {'seeds/s':>10s}  statuses")
    for label, problem, seeds in workloads():
        max_iter = min(default_config(problem.to_chain()).max_iter,
                       600 * problem.dim)
        reference = None
        for name in names:
            backend.set_backend(name)
            try:
                best = float("inf")
                for _ in range(args.repeat):
                    start = time.perf_counter()
                    finals, _iters, status, _resid = run(problem, seeds, max_iter)
                    best = min(best, time.perf_counter() - start)
            finally:
                backend.set_backend(None)
            counts = np.bincount(status, minlength=3)
            print(f"{label:38s} {name:7s} {best:8.3f}s {seeds.shape[0] / best:10.0f}"
                  f"  conv={counts[0]} cycle={counts[1]} cap={counts[2]}")
            if reference is None:
                reference = finals[status == kernels.STATUS_CONVERGED]
            else:
                current = finals[status == kernels.STATUS_CONVERGED]
                agree = (reference.shape == current.shape
                         and np.abs(reference - current).max() < 1e-7)
                if not agree:
                    print(f"{'':38s} (backends disagree beyond 1e-7)")


if __name__ == "__main__":
    main()
