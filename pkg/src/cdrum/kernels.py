"""Hot loops over the subset lattice.

Each kernel exists twice: a numba-compiled loop (``*_jit``) and a vectorised
numpy version (``*_numpy``).  The dispatchers at the bottom pick one according
to :data:`cdrum._accel.USE_NUMBA`.  Object arrays (exact ``Fraction`` data)
always take the numpy path since numba cannot compile them.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


# --------------------------------------------------------------------------
# superset sums / Moebius inversion along one axis


def superset_axis_numpy(a: np.ndarray, nbits: int, sign: int) -> None:
    """In-place superset transform of ``a`` with shape ``(pre, 2**nbits, post)``.

    ``sign=+1`` replaces ``f(A)`` by ``sum_{A <= B} f(B)``; ``sign=-1`` applies
    the inverse (Moebius) transform.
    """
    m = a.shape[1]
    masks = np.arange(m)
    for b in range(nbits):
        bit = 1 << b
        lo = masks[(masks & bit) == 0]
        hi = lo | bit
        if sign > 0:
            a[:, lo, :] += a[:, hi, :]
        else:
            a[:, lo, :] -= a[:, hi, :]


@njit
def superset_axis_jit(a, nbits, sign):
    pre, m, post = a.shape
    for b in range(nbits):
        bit = 1 << b
        for mask in range(m):
            if mask & bit:
                continue
            hi = mask | bit
            for i in range(pre):
                for j in range(post):
                    a[i, mask, j] += sign * a[i, hi, j]


def superset_transform(arr: np.ndarray, axes, nbits: int, sign: int) -> np.ndarray:
    """Apply the superset transform along every axis in ``axes`` (returns a copy)."""
    out = np.array(arr, copy=True, order="C")
    use_jit = USE_NUMBA and out.dtype in (np.float64, np.int64)
    for axis in axes:
        shape = out.shape
        pre = int(np.prod(shape[:axis], dtype=np.int64))
        post = int(np.prod(shape[axis + 1:], dtype=np.int64))
        view = out.reshape(pre, shape[axis], post)
        if use_jit:
            superset_axis_jit(view, nbits, sign)
        else:
            superset_axis_numpy(view, nbits, sign)
    return out


# --------------------------------------------------------------------------
# linear orders against menus


def choice_table_numpy(orders: np.ndarray, nbits: int) -> np.ndarray:
    """``table[k, A]`` is the top element of menu ``A`` under order ``k`` (-1 for the empty menu)."""
    k = orders.shape[0]
    m = 1 << nbits
    table = np.full((k, m), -1, dtype=np.int64)
    masks = np.arange(m)
    # walk each order from worst to best so the best member overwrites
    for pos in range(nbits - 1, -1, -1):
        alt = orders[:, pos]
        hit = (masks[None, :] >> alt[:, None]) & 1
        table = np.where(hit == 1, alt[:, None], table)
    return table


@njit
def choice_table_jit(orders, nbits):
    k = orders.shape[0]
    m = 1 << nbits
    table = np.full((k, m), -1, dtype=np.int64)
    for r in range(k):
        for mask in range(1, m):
            for pos in range(nbits):
                alt = orders[r, pos]
                if (mask >> alt) & 1:
                    table[r, mask] = alt
                    break
    return table


def cell_table(orders: np.ndarray) -> np.ndarray:
    """``cells[k, x]`` is the mask of ``x`` together with everything ranked below it."""
    k, n = orders.shape
    cells = np.zeros((k, n), dtype=np.int64)
    below = np.zeros(k, dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        alt = orders[:, pos]
        below = below | (np.int64(1) << alt)
        cells[np.arange(k), alt] = below
    return cells


# --------------------------------------------------------------------------
# vertex-form matrix columns


def extreme_columns_numpy(ch, first, second, blocks, col_index):
    """Column hit by each extreme point in each observed menu block.

    ``first[r]`` is the first-period order of row ``r``; ``second[r, x]`` the
    second-period order used after choosing ``x``; ``blocks`` holds ``(A, B)``
    pairs.  Returns an ``(rows, blocks)`` array of column ids.
    """
    a = blocks[:, 0]
    b = blocks[:, 1]
    x = ch[first[:, None], a[None, :]]
    o2 = np.take_along_axis(second, x, axis=1)
    y = ch[o2, b[None, :]]
    return col_index[a[None, :], b[None, :], x, y]


@njit
def extreme_columns_jit(ch, first, second, blocks, col_index):
    rows = first.shape[0]
    nb = blocks.shape[0]
    out = np.empty((rows, nb), dtype=np.int64)
    for r in range(rows):
        for j in range(nb):
            a = blocks[j, 0]
            b = blocks[j, 1]
            x = ch[first[r], a]
            y = ch[second[r, x], b]
            out[r, j] = col_index[a, b, x, y]
    return out


def split_columns_numpy(ch, first, chosen, second, blocks, col_index):
    """Columns hit by ``(order, x, order')`` generators; -1 where ``x`` is not chosen."""
    a = blocks[:, 0]
    b = blocks[:, 1]
    x = ch[first[:, None], a[None, :]]
    y = ch[second[:, None], b[None, :]]
    cols = col_index[a[None, :], b[None, :], x, y]
    return np.where(x == chosen[:, None], cols, -1)


@njit
def split_columns_jit(ch, first, chosen, second, blocks, col_index):
    rows = first.shape[0]
    nb = blocks.shape[0]
    out = np.full((rows, nb), -1, dtype=np.int64)
    for r in range(rows):
        for j in range(nb):
            a = blocks[j, 0]
            x = ch[first[r], a]
            if x != chosen[r]:
                continue
            b = blocks[j, 1]
            out[r, j] = col_index[a, b, x, ch[second[r], b]]
    return out


def choice_table(orders: np.ndarray, nbits: int) -> np.ndarray:
    orders = np.ascontiguousarray(orders, dtype=np.int64)
    if USE_NUMBA:
        return choice_table_jit(orders, nbits)
    return choice_table_numpy(orders, nbits)


def extreme_columns(ch, first, second, blocks, col_index):
    args = [np.ascontiguousarray(v, dtype=np.int64) for v in (ch, first, second, blocks, col_index)]
    if USE_NUMBA:
        return extreme_columns_jit(*args)
    return extreme_columns_numpy(*args)


def split_columns(ch, first, chosen, second, blocks, col_index):
    args = [np.ascontiguousarray(v, dtype=np.int64)
            for v in (ch, first, chosen, second, blocks, col_index)]
    if USE_NUMBA:
        return split_columns_jit(*args)
    return split_columns_numpy(*args)
