"""Compare the numba and numpy backends of the grid sweep and the walk simulator.

Usage: python3 benchmarks/bench_psi_step.py [--sizes 21 41 61] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from infocost import _accel
from infocost.costs import bernoulli_direct, llr_cost, named_f
from infocost.seqlearn import _simulate_walk_numba, _simulate_walk_numpy, psi_step, table_from_cost
from infocost.simplex import BeliefGrid


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_psi(sizes, repeat):
    rows = []
    for n in sizes:
        grid = BeliefGrid.logodds(n)
        for C in (bernoulli_direct(named_f("l2")), llr_cost(np.ones((2, 2)))):
            table = table_from_cost(C, grid)
            t_np, out_np = _best(lambda: psi_step(table, "numpy"), repeat)
            row = {"n": n, "cost": C.name, "numpy_s": t_np}
            if _accel.HAVE_NUMBA:
                psi_step(table, "numba")  # compile outside the timing
                t_nb, out_nb = _best(lambda: psi_step(table, "numba"), repeat)
                fin = np.isfinite(out_np.values)
                same = np.array_equal(fin, np.isfinite(out_nb.values)) and np.allclose(
                    out_np.values[fin], out_nb.values[fin], rtol=0, atol=1e-12)
                row.update(numba_s=t_nb, speedup=t_np / t_nb, identical=bool(same))
            rows.append(row)
    return rows


def bench_walk(n_paths, repeat):
    N, up = 8, 1 / (1 + np.exp(-1 / 8))
    t_np, _ = _best(lambda: _simulate_walk_numpy(N, up, n_paths, 0), repeat)
    row = {"paths": n_paths, "numpy_s": t_np}
    if _accel.HAVE_NUMBA:
        _simulate_walk_numba(N, up, 10, 0)
        t_nb, _ = _best(lambda: _simulate_walk_numba(N, up, n_paths, 0), repeat)
        row.update(numba_s=t_nb, speedup=t_np / t_nb)
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[21, 41, 61])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--paths", type=int, default=200_000)
    args = ap.parse_args()
    print(f"backend available: {_accel.backend()}")
    print(f"{'n':>4} {'cost':<22} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}  identical")
    for r in bench_psi(args.sizes, args.repeat):
        nb = r.get("numba_s")
        print(f"{r['n']:>4} {r['cost']:<22} {r['numpy_s']:>10.4f} "
              f"{nb if nb is None else format(nb, '10.4f'):>10} "
              f"{r.get('speedup', float('nan')):>8.2f}  {r.get('identical', '-')}")
    w = bench_walk(args.paths, args.repeat)
    print(f"walk simulation, {w['paths']} paths: numpy {w['numpy_s']:.4f} s, "
          f"numba {w.get('numba_s', float('nan')):.4f} s, speedup {w.get('speedup', float('nan')):.1f}x")


if __name__ == "__main__":
    main()
