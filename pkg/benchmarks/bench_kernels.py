"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both versions are imported by name, so the result does not depend on
MODELGROWTH_JIT. The first jit call (compilation or cache load) is excluded.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from modelgrowth.forecasters.svr import kernel_matrix
from modelgrowth.kernels import arima, holt, nn, smo
from modelgrowth.timeseries import make_lagged


def cases():
    r = np.random.default_rng(0)
    y = np.cumsum(r.normal(1, 1, 300)) + 100
    alphas = np.linspace(0.05, 0.95, 19)
    yield "holt_grid 19x19 n=300", holt.holt_grid_jit, holt.holt_grid_numpy, (y, alphas, alphas)

    w = np.diff(y)
    w = w - w.mean()
    x = np.array([0.1, 0.3, -0.2, 0.2])
    obj = (x, w, 2, 1, True, 2, 1.05)
    yield "css_objective ARMA(2,1) n=300", arima.css_objective_jit, arima.css_objective_numpy, obj
    sim = np.vstack([np.zeros(4), 0.1 * np.eye(4)])
    nm = (sim, w, 2, 1, True, 2, 1.05, 1e-8, 1e-12, 2000, 4000, False)
    yield "css_nelder_mead ARMA(2,1) n=300", arima.css_nelder_mead_jit, arima.css_nelder_mead_numpy, nm

    ds = make_lagged((y - y.min()) / np.ptp(y), 5)
    K = np.ascontiguousarray(kernel_matrix(ds.windows, ds.windows, "rbf", 0.1))
    yield f"smo rbf l={ds.targets.size}", smo.smo_jit, smo.smo_numpy, (K, ds.targets, 10.0, 0.01, 1e-3, 100000)

    perms = np.array([r.permutation(ds.targets.size) for _ in range(100)])
    ann_theta = r.normal(0, 0.5, nn.ann_size(5, 4))
    yield "ann_train 100 epochs", nn.ann_train_jit, nn.ann_train_numpy, \
        (ann_theta, ds.windows, ds.targets, 4, 0.1, perms, 16, nn.SGD), True
    lstm_theta = r.normal(0, 0.3, nn.lstm_size(8))
    yield "lstm_train 100 epochs h=8", nn.lstm_train_jit, nn.lstm_train_numpy, \
        (lstm_theta, ds.windows, ds.targets, 8, 0.01, perms, 16, nn.ADAM), True


def best_time(fn, args, repeat, copy_first):
    times = []
    for _ in range(repeat):
        call = (args[0].copy(), *args[1:]) if copy_first else args
        t0 = time.perf_counter()
        fn(*call)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    rows = []
    print(f"{'kernel':36s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, jit_fn, np_fn, fargs, *rest in cases():
        copy_first = bool(rest and rest[0])  # training kernels update theta in place
        best_time(jit_fn, fargs, 1, copy_first)  # compile / load cache
        tj = best_time(jit_fn, fargs, args.repeat, copy_first)
        tn = best_time(np_fn, fargs, max(1, args.repeat // 2), copy_first)
        rows.append({"kernel": name, "numba_s": tj, "numpy_s": tn, "speedup": tn / tj})
        print(f"{name:36s} {tj * 1e3:10.2f} {tn * 1e3:10.2f} {tn / tj:7.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return rows


if __name__ == "__main__":
    main()
