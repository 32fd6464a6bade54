"""Compare the compiled and pure-Python product backends.

Run with ``python benchmarks/bench_kernel.py [--repeat R]``.  Each workload is
timed on every available backend and the results are checked to be
bit-identical before the timings are printed.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from lietx import kernel
from lietx.algebra import Field, Poly, commutator, poly_ring
from lietx.io import spec_from_json
from lietx.normalform import normalize


def _random_poly(ring, max_degree, rng):
    terms = {}
    for _ in range(400):
        key = tuple(int(e) for e in rng.integers(0, max_degree // ring.nvars + 1, ring.nvars))
        if 2 <= sum(key) <= max_degree:
            terms[key] = complex(rng.normal(), rng.normal())
    return Poly(ring, terms)


def workload_product():
    ring = poly_ring(3)
    rng = np.random.default_rng(0)
    a, b = _random_poly(ring, 10, rng), _random_poly(ring, 10, rng)
    return lambda: a.mul(b, 12).terms


def workload_commutator():
    ring = poly_ring(2)
    rng = np.random.default_rng(1)
    X = Field(ring, [_random_poly(ring, 12, rng) for _ in range(2)])
    V = Field(ring, [_random_poly(ring, 12, rng) for _ in range(2)])
    return lambda: [c.terms for c in commutator(X, V, 14)]


def workload_twist():
    omega = 2 * math.pi * (math.sqrt(5) - 1) / 2
    doc = {"kind": "kronecker", "angles": 1, "actions": 1, "omega": [omega], "order": 8, "fourier_cutoff": 1,
           "epsilon": 0.01, "perturbation": [
               {"component": 1, "mode": [1], "exponents": [0], "order": 1, "re": 0.5, "im": 0.0},
               {"component": 1, "mode": [-1], "exponents": [0], "order": 1, "re": 0.5, "im": 0.0},
               {"component": 2, "mode": [1], "exponents": [0], "order": 1, "re": 0.0, "im": -0.5},
               {"component": 2, "mode": [-1], "exponents": [0], "order": 1, "re": 0.0, "im": 0.5}]}
    spec = spec_from_json(doc)
    return lambda: [c.terms for _, Z in normalize(spec).Z.items() for c in Z]


WORKLOADS = {
    "product 3 vars deg 10": workload_product,
    "commutator 2 vars deg 12": workload_commutator,
    "twist normal form N=8": workload_twist,
}


def best_time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = kernel.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'workload':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, make in WORKLOADS.items():
        times, outputs = [], []
        for b in backends:
            previous = kernel.set_backend(b)
            try:
                fn = make()
                t, out = best_time(fn, args.repeat)
            finally:
                kernel.set_backend(previous)
            times.append(t)
            outputs.append(out)
        if any(o != outputs[0] for o in outputs[1:]):
            raise SystemExit(f"{name}: backends disagree")
        row = f"{name:28s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
