"""Compare the numba and numpy propagation kernels on a rotating-NV Hamiltonian.

    python3 benchmarks/bench_kernels.py --steps 200000 --repeat 3
"""
import argparse
import math
import time

import numpy as np

from nvberry import _kernels
from nvberry.physics import zero_field_matrix


def build_hamiltonians(steps, d_over_omega=1000.0, theta=math.pi / 3):
    omega = 4000 * math.pi
    D = d_over_omega * omega
    period = 2 * math.pi / omega
    t = np.linspace(0.0, period, 2 * steps + 1)
    H = zero_field_matrix(np.full_like(t, theta), omega * t, D)
    return H, period / steps


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    H_rk4, dt = build_hamiltonians(args.steps)
    H_mid = H_rk4[1::2].copy()
    psi = np.array([0, 1, 0], dtype=complex)

    # warm up the JIT so compile time is not counted
    _kernels.evolve_midpoint_numba(H_mid[:4], dt, psi)
    _kernels.evolve_rk4_numba(H_rk4[:9], dt, psi)

    cases = [
        ("midpoint", _kernels.evolve_midpoint_numpy, _kernels.evolve_midpoint_numba, H_mid),
        ("rk4", _kernels.evolve_rk4_numpy, _kernels.evolve_rk4_numba, H_rk4),
    ]
    print(f"{'kernel':<10}{'steps':>10}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, np_fn, nb_fn, H in cases:
        t_np, a = best_of(lambda: np_fn(H, dt, psi), args.repeat)
        t_nb, b = best_of(lambda: nb_fn(H, dt, psi), args.repeat)
        print(f"{name:<10}{args.steps:>10}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.2f}{np.max(np.abs(a - b)):>13.2e}")


if __name__ == "__main__":
    main()
