"""Time the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]

Each row reports the best wall time of ``--repeat`` runs per backend after one
warm-up call (so JIT compilation is excluded) and checks that both backends
return identical arrays.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time

import numpy as np

from cdrum import _accel, kernels, lattice
from cdrum.lptest import column_index


def _best(fn, repeat: int) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _superset_case(n: int, depth: int):
    rng = np.random.default_rng(0)
    base = rng.integers(-1000, 1000, size=(1 << n,) * depth + (n,) * depth).astype(np.int64)

    def run(impl):
        out = base.copy()
        for axis in range(depth):
            pre = int(np.prod(out.shape[:axis]))
            impl(out.reshape(pre, 1 << n, -1), n, -1)
        return out

    return (f"superset transform n={n} T={depth}",
            lambda: run(kernels.superset_axis_numpy), lambda: run(kernels.superset_axis_jit))


def _choice_case(n: int):
    orders = np.ascontiguousarray(lattice.order_array(n))
    return (f"choice table n={n}",
            lambda: kernels.choice_table_numpy(orders, n), lambda: kernels.choice_table_jit(orders, n))


def _extreme_case(n: int):
    orders = lattice.order_array(n)
    k = orders.shape[0]
    ch = kernels.choice_table_numpy(orders, n)
    combos = np.array(list(itertools.product(range(k), repeat=n + 1)), dtype=np.int64)
    menus = lattice.canonical_menus(n)
    cols = column_index(n, [(a, b) for a in menus for b in menus])
    args = (ch, np.ascontiguousarray(combos[:, 0]), np.ascontiguousarray(combos[:, 1:]), cols.blocks, cols.index)
    return (f"vertex columns n={n}",
            lambda: kernels.extreme_columns_numpy(*args), lambda: kernels.extreme_columns_jit(*args))


def _per_choice_case(n: int):
    orders = lattice.order_array(n)
    k = orders.shape[0]
    ch = kernels.choice_table_numpy(orders, n)
    combos = np.array(list(itertools.product(range(k), range(n), range(k))), dtype=np.int64)
    menus = lattice.canonical_menus(n)
    cols = column_index(n, [(a, b) for a in menus for b in menus])
    args = (ch, *(np.ascontiguousarray(combos[:, i]) for i in range(3)), cols.blocks, cols.index)
    return (f"per-choice columns n={n}",
            lambda: kernels.split_columns_numpy(*args), lambda: kernels.split_columns_jit(*args))


def cases():
    return [
        _superset_case(6, 2),
        _superset_case(8, 2),
        _choice_case(6),
        _choice_case(7),
        _extreme_case(3),
        _per_choice_case(4),
    ]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    rows = []
    for name, np_fn, jit_fn in cases():
        same = bool(np.array_equal(np_fn(), jit_fn()))
        t_np = _best(np_fn, args.repeat)
        t_jit = _best(jit_fn, args.repeat)
        rows.append({"case": name, "numpy_s": t_np, "numba_s": t_jit,
                     "speedup": t_np / t_jit if t_jit else float("inf"), "identical": same})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'case':32s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}  same")
        for r in rows:
            print(f"{r['case']:32s} {r['numpy_s']:10.5f} {r['numba_s']:10.5f} {r['speedup']:8.2f}  {r['identical']}")
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
