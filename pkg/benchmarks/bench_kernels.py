"""Compare the jitted integrator against the pure-Python path.

Run:  python benchmarks/bench_kernels.py
"""
from __future__ import annotations

import time

import numpy as np

from slingsim.kernels import integrate_numba, integrate_python
from slingsim.model import default_config


def run(fn, spheres, reps: int) -> float:
    b = default_config().ballistic
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(0.0, 0.0, 1.5, 12.0, 3.0, 4.0, spheres,
           b.rho, b.cd, b.area_x, b.area_y, b.area_z, b.mass, b.g,
           False, 0.001, 10.0)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    spheres = np.array([[30.0, 5.0, 0.5, 0.3]])
    # warm up the jit so compile time stays out of the numbers
    run(integrate_numba, spheres, 1)
    t_py = run(integrate_python, spheres, 5)
    t_nb = run(integrate_numba, spheres, 20)
    print(f"pure python : {t_py * 1e3:9.3f} ms per trajectory")
    print(f"numba       : {t_nb * 1e3:9.3f} ms per trajectory")
    print(f"speedup     : {t_py / t_nb:9.1f}x")


if __name__ == "__main__":
    main()
