"""Compare the numba and numpy backends of the Hamiltonian hot kernel.

Run:  python benchmarks/bench_kernels.py [--repeats N] [--big]
"""

import argparse
import time

import numpy as np

import fermiwell as fw
from fermiwell import kernels
from fermiwell.fockspace import determinant_basis


def make_case(m, n_a, n_b, grid, trap):
    basis = fw.solve_one_body(grid, trap, m)
    ba, bb = determinant_basis(m, n_a), determinant_basis(m, n_b)
    rng = np.random.default_rng(0)
    coeff = rng.normal(size=(len(ba), len(bb))) + 1j * rng.normal(size=(len(ba), len(bb)))
    coeff /= np.linalg.norm(coeff)
    return basis, fw.CIState(ba, bb, coeff)


def time_apply(state, basis, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fw.apply_hamiltonian(state, basis, 4.0)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--big", action="store_true",
                        help="include the (10, 5, 5) stretch case")
    args = parser.parse_args()

    grid = fw.build_grid(400)
    trap = fw.TrapParams()
    cases = [(8, 2, 2), (10, 3, 1), (12, 2, 2), (12, 3, 1)]
    if args.big:
        cases.append((10, 5, 5))

    print(f"{'case':>14} {'dim':>8} {'numba':>12} {'numpy':>12} {'speedup':>8}")
    for m, n_a, n_b in cases:
        basis, state = make_case(m, n_a, n_b, grid, trap)
        dim = state.coeff.size
        timings = {}
        for backend in ("numba", "numpy"):
            kernels.set_backend(backend)
            fw.apply_hamiltonian(state, basis, 4.0)  # warm-up / jit
            timings[backend] = time_apply(state, basis, args.repeats)
        kernels.set_backend(None)
        ratio = timings["numpy"] / timings["numba"]
        print(f"M={m} ({n_a},{n_b})".rjust(14)
              + f" {dim:>8d} {timings['numba'] * 1e3:>10.2f}ms"
              + f" {timings['numpy'] * 1e3:>10.2f}ms {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
