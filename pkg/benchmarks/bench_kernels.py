"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--N 100]

Times each hot kernel in isolation, then whole solves with the backend
switched. Prints one row per case with the speedup of the compiled backend.
"""

import argparse
import timeit

import numpy as np

from riswsr import _kernels
from riswsr.channels import Placement, draw_channels, noise_power_dbm
from riswsr.fpbcd import bcd_solve, initial_state
from riswsr.model import LinkBudget, SystemDims
from riswsr.rcg import alternating_optimize, effective_gains

USERS = [(205.65, 34.48), (193.47, 30.24), (198.30, 22.40), (207.00, 24.28)]


def scenario(N, seed=0, p_dbm=5.0):
    dims = SystemDims(M=4, N=N, K=4)
    ch = draw_channels(dims, Placement((0, 0), (200, 0), USERS), np.random.default_rng(seed))
    return ch, LinkBudget(p_dbm, noise_power_dbm(), np.full(4, 0.25))


def kernel_cases(ch, budget):
    N = ch.ap_to_ris.shape[0]
    theta = np.exp(1j * np.random.default_rng(1).uniform(0, 2 * np.pi, N))
    st = initial_state(ch, budget, np.angle(theta))
    g = effective_gains(ch, st.W)
    w, s2, p = budget.weights, budget.noise, budget.p_max
    return {
        "combined_channel": lambda k: k.combined_channel(ch.direct, ch.effective, theta),
        "block_cycle": lambda k: k.block_cycle(st.h, st.W, st.W_prev, st.alpha, st.beta, w, s2, p, st.d, st.L),
        "phase_residual": lambda k: k.phase_residual(ch.effective, st.h, st.W, st.alpha, st.beta, w),
        "fc_value_grad": lambda k: k.fc_value_grad(theta, g.a, g.b, w, s2),
    }


def best_time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--N", type=int, default=100)
    args = ap.parse_args()

    if "cython" not in _kernels.available_backends():
        print("compiled kernels are not built; only the numpy backend is available")
        return
    py, cy = _kernels.get_backend("numpy"), _kernels.get_backend("cython")
    ch, budget = scenario(args.N)

    print(f"{'case':<22}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for name, fn in kernel_cases(ch, budget).items():
        t_py = best_time(lambda: fn(py), args.repeat, 200)
        t_cy = best_time(lambda: fn(cy), args.repeat, 200)
        print(f"{name:<22}{t_py * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us{t_py / t_cy:>9.1f}x")

    solvers = {"bcd_solve": lambda: bcd_solve(ch, budget), "alternating_optimize": lambda: alternating_optimize(ch, budget)}
    previous = _kernels.backend_name()
    try:
        for name, fn in solvers.items():
            times = {}
            for backend in ("numpy", "cython"):
                _kernels.set_backend(backend)
                times[backend] = best_time(fn, max(1, args.repeat // 2), 1)
            print(f"{name:<22}{times['numpy'] * 1e3:>10.1f}ms{times['cython'] * 1e3:>10.1f}ms"
                  f"{times['numpy'] / times['cython']:>9.1f}x")
    finally:
        _kernels.set_backend(previous)


if __name__ == "__main__":
    main()
