"""Compare the compiled and numpy kernel backends.

    python -m qcredit.bench [--repeat 5] [--qubits 12 16 20]

Times three workloads per backend: a layer of controlled rotations, a
register permutation, and a full amplitude-estimation run on the two-asset
portfolio. Results are checked for agreement before timings are printed.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ._backend import available_backends
from .circuit import StateVector, apply, compose, permutation_operator, ry_gate
from .distributions import Asset, Portfolio, build_latent_grid
from .model_circuits import build_A
from .qae import run_qae


def _random_state(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def _rotation_layer(n):
    ops = [ry_gate(n, 0.1 * (q + 1), q, [(q + 1) % n]) for q in range(n)]
    return compose(*ops, name="layer")


def _perm(n):
    k = min(n, 8)
    table = (np.arange(1 << k) * 5 + 3) % (1 << k)
    return permutation_operator(table, range(n - k, n), n, name="affine")


def _time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(qubits=(12, 16, 20), repeat=5, m=6):
    backends = available_backends()
    rows = []
    for n in qubits:
        state = _random_state(n)
        for label, op in (("rotations", _rotation_layer(n)), ("permutation", _perm(n))):
            results = {}
            for b in backends:
                apply(op, state, backend=b)  # warm caches
                results[b] = _time(lambda: apply(op, state, backend=b), repeat)
            ref = results[backends[0]][1].amplitudes
            for b in backends[1:]:
                assert np.allclose(results[b][1].amplitudes, ref, atol=1e-12)
            rows.append((f"{label} n={n}", {b: t for b, (t, _) in results.items()}))
    portfolio = Portfolio([Asset(1, 0.15, 0.1), Asset(2, 0.25, 0.05)])
    oracle = build_A(portfolio, build_latent_grid(2), 2)
    results = {b: _time(lambda: run_qae(oracle, m, backend=b), max(1, repeat // 2))
               for b in backends}
    ref = results[backends[0]][1].outcome_probs
    for b in backends[1:]:
        assert np.allclose(results[b][1].outcome_probs, ref, atol=1e-12)
    rows.append((f"qae two-asset m={m}", {b: t for b, (t, _) in results.items()}))
    return backends, rows


def main(argv=None):
    ap = argparse.ArgumentParser(description="kernel backend benchmark")
    ap.add_argument("--qubits", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--m", type=int, default=6)
    args = ap.parse_args(argv)
    backends, rows = run(args.qubits, args.repeat, args.m)
    header = f"{'workload':<24}" + "".join(f"{b + ' [ms]':>16}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, times in rows:
        line = f"{label:<24}" + "".join(f"{1e3 * times[b]:>16.3f}" for b in backends)
        if "cython" in times and "python" in times:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
