import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdrum import _accel, kernels, lattice

needs_numba = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")


class TestLattice:
    def test_canonical_menus_order(self):
        assert lattice.canonical_menus(3) == (0b111, 0b011, 0b101, 0b110, 0b001, 0b010, 0b100)

    def test_rank_inverts_menus(self):
        rank = lattice.canonical_rank(4)
        for i, m in enumerate(lattice.canonical_menus(4)):
            assert rank[m] == i
        assert rank[0] == 15

    @given(st.integers(0, 255))
    def test_members_and_popcount(self, mask):
        mem = lattice.members(mask)
        assert len(mem) == lattice.popcount(mask) == bin(mask).count("1")
        assert sum(1 << i for i in mem) == mask

    @given(st.integers(1, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))))
    def test_supersets_match_filter(self, nm):
        n, mask = nm
        brute = {b for b in range(1 << n) if b & mask == mask}
        got = list(lattice.supersets(mask, n))
        assert set(got) == brute and len(got) == len(brute)

    def test_linear_orders_count_and_index(self):
        for n in range(1, 6):
            orders = lattice.linear_orders(n)
            assert len(orders) == math.factorial(n)
            assert all(lattice.order_index(n)[o] == i for i, o in enumerate(orders))

    def test_top_and_cell(self):
        order = (2, 0, 1)
        assert lattice.top(order, 0b011) == 0
        assert lattice.top(order, 0b111) == 2
        assert lattice.cell(order, 0) == 0b011
        assert lattice.cell(order, 2) == 0b111
        assert lattice.in_N(order, 0, 0b011)
        assert not lattice.in_N(order, 1, 0b011)
        with pytest.raises(ValueError):
            lattice.top(order, 0)

    @given(st.permutations(range(4)), st.integers(1, 15))
    def test_top_iff_menu_inside_cell(self, order, mask):
        x = lattice.top(order, mask)
        assert mask & ~lattice.cell(order, x) == 0


def _brute_superset(arr, n, axes):
    out = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        total = 0
        for sup in itertools.product(*(lattice.supersets(idx[a], n) for a in axes)):
            j = list(idx)
            for a, s in zip(axes, sup):
                j[a] = s
            total += arr[tuple(j)]
        out[idx] = total
    return out


class TestKernels:
    @given(st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_superset_numpy_matches_brute_force(self, n, seed):
        rng = np.random.default_rng(seed)
        arr = rng.integers(-5, 6, size=(1 << n, 1 << n, 2)).astype(np.int64)
        fast = arr.copy()
        for axis in (0, 1):
            pre = int(np.prod(fast.shape[:axis]))
            kernels.superset_axis_numpy(fast.reshape(pre, 1 << n, -1), n, +1)
        assert np.array_equal(fast, _brute_superset(arr, n, (0, 1)))

    @given(st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_transform_inverse_round_trip(self, n, seed):
        arr = np.random.default_rng(seed).integers(-9, 10, size=(1 << n, 3)).astype(np.int64)
        there = kernels.superset_transform(arr, [0], n, +1)
        back = kernels.superset_transform(there, [0], n, -1)
        assert np.array_equal(back, arr)

    @needs_numba
    @pytest.mark.parametrize("dtype", [np.float64, np.int64])
    def test_superset_backends_agree(self, dtype):
        rng = np.random.default_rng(3)
        arr = rng.integers(-50, 50, size=(7, 16, 5)).astype(dtype)
        a, b = arr.copy(), arr.copy()
        kernels.superset_axis_numpy(a, 4, -1)
        kernels.superset_axis_jit(b, 4, -1)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_choice_table_numpy_matches_definition(self, n):
        orders = lattice.order_array(n)
        table = kernels.choice_table_numpy(orders, n)
        for k, order in enumerate(lattice.linear_orders(n)):
            assert table[k, 0] == -1
            for m in range(1, 1 << n):
                assert table[k, m] == lattice.top(order, m)

    @needs_numba
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_choice_table_backends_agree(self, n):
        orders = np.ascontiguousarray(lattice.order_array(n))
        assert np.array_equal(kernels.choice_table_numpy(orders, n), kernels.choice_table_jit(orders, n))

    def test_cell_table(self):
        orders = lattice.order_array(3)
        cells = kernels.cell_table(orders)
        for k, order in enumerate(lattice.linear_orders(3)):
            for x in range(3):
                assert cells[k, x] == lattice.cell(order, x)

    @needs_numba
    def test_column_kernels_agree(self):
        n = 3
        orders = lattice.order_array(n)
        ch = kernels.choice_table_numpy(orders, n)
        rng = np.random.default_rng(0)
        rows = 200
        first = rng.integers(0, 6, rows)
        second = rng.integers(0, 6, (rows, n))
        chosen = rng.integers(0, n, rows)
        blocks = np.array([(a, b) for a in range(1, 8) for b in range(1, 8)], dtype=np.int64)
        col_index = rng.integers(0, 1000, size=(8, 8, n, n))
        args = [np.ascontiguousarray(v, dtype=np.int64) for v in (ch, first, second, blocks, col_index)]
        assert np.array_equal(kernels.extreme_columns_numpy(*args), kernels.extreme_columns_jit(*args))
        fargs = [np.ascontiguousarray(v, dtype=np.int64)
                 for v in (ch, first, chosen, second[:, 0], blocks, col_index)]
        assert np.array_equal(kernels.split_columns_numpy(*fargs), kernels.split_columns_jit(*fargs))


def test_backend_flag_respected(monkeypatch):
    import importlib
    import subprocess
    import sys

    code = "from cdrum import _accel; print(_accel.backend_name())"
    env = dict(__import__("os").environ, CDRUM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert importlib.import_module("cdrum._accel").backend_name() in ("numba", "numpy")
