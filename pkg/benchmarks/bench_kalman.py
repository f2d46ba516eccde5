"""Compare the compiled and pure-Python Kalman kernels.

Usage: python benchmarks/bench_kalman.py [--T 142] [--repeat 200]

Times the log-likelihood (the inner loop of the variance search), the
filter, the smoother and one full maximum-likelihood fit per backend, and
checks that both backends agree.
"""
import argparse
import importlib
import os
import subprocess
import sys
import timeit

import numpy as np

from airfrac import _kalman_py


def _inputs(T):
    rng = np.random.default_rng(0)
    e = np.concatenate([4.3 + np.cumsum(0.1 + 0.19 * rng.standard_normal(64)), np.linspace(10, -4, T - 64)])
    g = 0.45 * e + 0.9 * rng.standard_normal(T)
    f, c = np.ones(T), np.zeros(T)
    k = int(np.flatnonzero(e < 0)[0])
    f[k - 1], c[k - 1] = -1.0, 1.0
    return g, e, f, c


def bench_kernels(T, repeat):
    try:
        fast = importlib.import_module("airfrac._kalman")
    except ImportError:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return
    g, e, f, c = _inputs(T)
    args = (g, e, f, c, 0.45, 1e7, 0.8, 1e-3)
    print(f"T = {T}, {repeat} calls each (microseconds per call)")
    print(f"{'kernel':<15}{'cython':>12}{'python':>12}{'speedup':>10}")
    for name in ("kalman_loglik", "kalman_filter"):
        tf = min(timeit.repeat(lambda: getattr(fast, name)(*args), number=repeat, repeat=3)) / repeat
        tp = min(timeit.repeat(lambda: getattr(_kalman_py, name)(*args), number=repeat, repeat=3)) / repeat
        print(f"{name:<15}{tf * 1e6:>12.1f}{tp * 1e6:>12.1f}{tp / tf:>10.1f}")
    filt = fast.kalman_filter(*args)
    tf = min(timeit.repeat(lambda: fast.kalman_smooth(*filt[:4], f), number=repeat, repeat=3)) / repeat
    tp = min(timeit.repeat(lambda: _kalman_py.kalman_smooth(*filt[:4], f), number=repeat, repeat=3)) / repeat
    print(f"{'kalman_smooth':<15}{tf * 1e6:>12.1f}{tp * 1e6:>12.1f}{tp / tf:>10.1f}")
    diff = abs(fast.kalman_loglik(*args) - _kalman_py.kalman_loglik(*args))
    print(f"|loglik difference| = {diff:.2e}")


_FIT = """
import time, numpy as np
from airfrac.ingest import AnnualSeries
from airfrac.tvaf import fit_tvaf, BACKEND
rng = np.random.default_rng(0)
e = np.concatenate([4.3 + np.cumsum(0.1 + 0.19 * rng.standard_normal(64)), np.linspace(10, -4, {n})])
g = 0.45 * e + 0.9 * rng.standard_normal(e.size)
t0 = time.perf_counter()
est = fit_tvaf(AnnualSeries(1959, g), AnnualSeries(1959, e))
print(BACKEND, time.perf_counter() - t0, est.ml_params[0], est.ml_params[1])
"""


def bench_fit(T):
    # backend choice happens at import, so each run gets its own interpreter
    print(f"\nfull ML fit, T = {T}")
    for pure in ("0", "1"):
        env = dict(os.environ, AIRFRAC_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _FIT.format(n=T - 64)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"{out[0]:<8} {float(out[1]):.3f}s  sigma_u2={float(out[2]):.6g} sigma_eta2={float(out[3]):.6g}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=int, default=142)
    p.add_argument("--repeat", type=int, default=200)
    a = p.parse_args()
    bench_kernels(a.T, a.repeat)
    bench_fit(a.T)


if __name__ == "__main__":
    main()
