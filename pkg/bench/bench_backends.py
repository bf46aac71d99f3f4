"""Compare the compiled and pure numpy kernel backends.

Runs the single fits and the batched Monte-Carlo kernels on identical
data and reports wall time per backend. Invoke directly:

    python3 bench/bench_backends.py [--trials 2000] [--d 8] [--n 22]
"""

import argparse
import time

import numpy as np


def _load_backends():
    from escov.kernels import numpy_backend

    backends = [("numpy", numpy_backend)]
    try:
        from escov.kernels import numba_backend

        backends.insert(0, ("numba", numba_backend))
    except ImportError:
        print("numba backend unavailable, benchmarking numpy only")
    return backends


def _data(trials, n, d, seed=7):
    rng = np.random.default_rng(seed)
    train = (rng.standard_normal((trials, n, d)) + 1j * rng.standard_normal((trials, n, d)))
    train = np.ascontiguousarray(train / np.sqrt(2))
    test = (rng.standard_normal((trials, d)) + 1j * rng.standard_normal((trials, d)))
    test = np.ascontiguousarray(test / np.sqrt(2))
    s = np.ascontiguousarray(np.ones(d, np.complex128) / np.sqrt(d))
    return train, test, s


def _time(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--n", type=int, default=22)
    args = ap.parse_args()

    train, test, s = _data(args.trials, args.n, args.d)
    eps, max_iter = 1e-8, 100
    cases = [
        ("tyler_fit (single)", lambda b: b.tyler_fit(train[0], eps, max_iter, 0.0)),
        ("bt_fit (single)", lambda b: b.bt_fit(train[0], eps, max_iter)),
        ("cg_fit (single)", lambda b: b.cg_fit(train[0], eps, max_iter)),
        ("mc_tyler_nmf", lambda b: b.mc_tyler_nmf(train, test, s, eps, max_iter, 0.0)),
        ("mc_bt_nmf", lambda b: b.mc_bt_nmf(train, test, s, eps, max_iter)),
        ("mc_scm_mf", lambda b: b.mc_scm_mf(train, test, s)),
        ("mc_cg_glrcg", lambda b: b.mc_cg_glrcg(train, test, s, eps, max_iter)),
    ]

    backends = _load_backends()
    for _, mod in backends:
        mod.warmup()

    print(f"trials={args.trials} n={args.n} d={args.d}")
    header = f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, call in cases:
        times = [_time(lambda m=mod: call(m)) for _, mod in backends]
        row = f"{label:<22}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
