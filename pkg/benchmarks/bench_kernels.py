"""Compare the compiled and numpy kernels: SBP first derivative and a full RHS.

    python benchmarks/bench_kernels.py [--n 101] [--repeat 50] [--threads 1]
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from elastic_pml import backend
from elastic_pml.curvilinear import rectangle_grid
from elastic_pml.medium import make_isotropic
from elastic_pml.sbp import build_sbp_4
from elastic_pml.solver import Discretization, LayerSpec, PmlProfile


def two_layer(n: int) -> Discretization:
    m1 = make_isotropic(1.5, 4.86, 4.8629)
    m2 = make_isotropic(3.0, 27.0, 26.9952)
    P = math.pi
    g1 = rectangle_grid(0, 4.4 * P, 0, 4 * P, n, n)
    g2 = rectangle_grid(0, 4.4 * P, -4 * P, 0, n, n)
    pml = PmlProfile.from_reflection(4 * P, 0.4 * P, math.sqrt(3 * 27 / 3.0))
    return Discretization([LayerSpec(g1, m1), LayerSpec(g2, m2)], pml=[pml])


def bench(fn, repeat: int) -> float:
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--repeat", type=int, default=50)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    backend.set_threads(args.threads)

    rng = np.random.default_rng(0)
    n = args.n
    u = rng.standard_normal((2, n, n))
    op = build_sbp_4(n, 1.0 / (n - 1))
    disc = two_layer(n)
    Y = rng.standard_normal(disc.size) * 1e-3
    out = np.empty_like(Y)

    names = ["numpy"] + (["native"] if backend.has_native() else [])
    results = {}
    for name in names:
        backend.set_backend(name)
        results[name] = {
            "d1 x": bench(lambda: op.apply(u, -1), args.repeat),
            "d1 y": bench(lambda: op.apply(u, -2), args.repeat),
            "rhs": bench(lambda: disc.rhs(0.0, Y, out), max(5, args.repeat // 5)),
        }
    if "native" in results:
        backend.set_backend("numpy")
        ref = disc.rhs(0.0, Y).copy()
        backend.set_backend("native")
        diff = float(np.max(np.abs(disc.rhs(0.0, Y) - ref)) / np.max(np.abs(ref)))
    print(f"grid 2 x {n} x {n}, threads {args.threads}")
    print(f"{'kernel':8s}" + "".join(f"{k:>14s}" for k in names) + ("     speedup" if len(names) > 1 else ""))
    for key in ("d1 x", "d1 y", "rhs"):
        row = f"{key:8s}" + "".join(f"{results[k][key] * 1e3:12.3f}ms" for k in names)
        if len(names) > 1:
            row += f"{results['numpy'][key] / results['native'][key]:11.2f}x"
        print(row)
    if "native" in results:
        print(f"relative RHS difference native vs numpy: {diff:.2e}")


if __name__ == "__main__":
    main()
