"""Benchmark the compiled interpolation core against the numpy reference.

Times the table-lookup kernels in isolation and a full ensemble integration
through each backend.  Run directly:

    python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from pilotlab._kernels import _ref

try:
    from pilotlab._kernels import _core
except ImportError:
    _core = None


def bench(fn, *args, repeats=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def kernel_benchmarks():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'m':>8} {'python':>12} {'compiled':>12} {'speedup':>9}")

    fa1 = rng.normal(size=1024)
    fb1 = rng.normal(size=1024)
    fa2 = rng.normal(size=(256, 256))
    fb2 = rng.normal(size=(256, 256))
    for m in (1_000, 10_000, 100_000):
        xs = rng.uniform(-0.9, 0.9, size=m)
        ys = rng.uniform(-0.9, 0.9, size=m)
        args1 = (fa1, fb1, 0.5, -1.0, 512.0, xs)
        args2 = (fa2, fb2, 0.5, -1.0, -1.0, 128.0, 128.0, xs, ys)
        for name, ref_fn, core_fn, args in (
            ("interp_time_1d", _ref.interp_time_1d, getattr(_core, "interp_time_1d", None), args1),
            ("interp_time_2d", _ref.interp_time_2d, getattr(_core, "interp_time_2d", None), args2),
        ):
            t_py = bench(ref_fn, *args)
            if core_fn is None:
                print(f"{name:<16} {m:>8} {t_py * 1e6:>10.1f}us {'n/a':>12} {'n/a':>9}")
                continue
            t_c = bench(core_fn, *args)
            print(f"{name:<16} {m:>8} {t_py * 1e6:>10.1f}us {t_c * 1e6:>10.1f}us {t_py / t_c:>8.1f}x")


INTEGRATION_SNIPPET = """
import time
import numpy as np
from pilotlab import _kernels
from pilotlab.dynamics import Standard, WavefunctionHistory, integrate_ensemble, sample_initial
from pilotlab.grid import FreePotential, Grid, make_gaussian_packet

grid = Grid.regular((-30.0, 30.0), 1024)
wf = make_gaussian_packet(grid, -1.0, 2.0, 1.0)
hist = WavefunctionHistory.evolve(wf, FreePotential(), 2.0, 0.05, keep_psi=True)
x0 = sample_initial(wf, 20000, 3).final_positions()
integrate_ensemble(Standard(), hist, x0, 0.0, 2.0, 0.01, base_seed=3)  # warm up
t0 = time.perf_counter()
integrate_ensemble(Standard(), hist, x0, 0.0, 2.0, 0.01, base_seed=3)
print(f"{_kernels.BACKEND}: {time.perf_counter() - t0:.3f}s")
"""


def integration_benchmark():
    print("\nfull ensemble integration (20000 members, 200 RK4 steps):")
    for force in ("0", "1"):
        env = dict(os.environ)
        env.pop("PILOTLAB_FORCE_PYTHON", None)
        if force == "1":
            env["PILOTLAB_FORCE_PYTHON"] = "1"
        res = subprocess.run(
            [sys.executable, "-c", INTEGRATION_SNIPPET],
            env=env, capture_output=True, text=True,
        )
        sys.stdout.write(res.stdout if res.returncode == 0 else res.stderr)


if __name__ == "__main__":
    if _core is None:
        print("compiled core unavailable; benchmarking the reference only\n")
    kernel_benchmarks()
    integration_benchmark()
