"""Bitmask helpers for menus and linear orders.

Menus are ints whose bit ``i`` marks alternative ``i`` of the universe.  The
canonical enumeration of nonempty menus is by popcount descending, then by
numeric value ascending.  Linear orders are tuples of alternative indices,
best first, enumerated in lexicographic (``itertools.permutations``) order.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def contains(mask: int, x: int) -> bool:
    return bool((mask >> x) & 1)


@lru_cache(maxsize=None)
def canonical_menus(n: int) -> tuple[int, ...]:
    """Nonempty menus over ``n`` alternatives in canonical order."""
    return tuple(sorted(range(1, 1 << n), key=lambda m: (-popcount(m), m)))


@lru_cache(maxsize=None)
def canonical_rank(n: int) -> np.ndarray:
    """``rank[mask]`` is the position of ``mask`` in :func:`canonical_menus`; the empty menu ranks last."""
    rank = np.full(1 << n, (1 << n) - 1, dtype=np.int64)
    for i, m in enumerate(canonical_menus(n)):
        rank[m] = i
    rank.setflags(write=False)
    return rank


def canonical_sequences(n: int, length: int) -> list[tuple[int, ...]]:
    """All menu sequences of the given length, lexicographic in canonical menu order."""
    return list(itertools.product(canonical_menus(n), repeat=length))


def supersets(mask: int, n: int):
    """Yield every superset of ``mask`` inside the full set (``mask`` included)."""
    free = ((1 << n) - 1) & ~mask
    sub = free
    while True:
        yield mask | sub
        if sub == 0:
            return
        sub = (sub - 1) & free


def proper_nonempty_subsets(n: int) -> tuple[int, ...]:
    full = (1 << n) - 1
    return tuple(m for m in canonical_menus(n) if m != full)


@lru_cache(maxsize=None)
def linear_orders(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(n)))


@lru_cache(maxsize=None)
def order_index(n: int) -> dict:
    return {o: i for i, o in enumerate(linear_orders(n))}


@lru_cache(maxsize=None)
def order_array(n: int) -> np.ndarray:
    arr = np.array(linear_orders(n), dtype=np.int64).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def top(order, mask: int) -> int:
    """Best member of ``mask`` under ``order`` (the M(order, A) of the model)."""
    for x in order:
        if (mask >> x) & 1:
            return x
    raise ValueError("empty menu has no maximiser")


def cell(order, x: int) -> int:
    """Menu ``A`` with ``order`` in I(x, A): ``x`` together with everything ranked below it."""
    pos = order.index(x)
    out = 0
    for z in order[pos:]:
        out |= 1 << z
    return out


def in_I(order, x: int, mask: int) -> bool:
    return cell(order, x) == mask


def in_N(order, x: int, mask: int) -> bool:
    return (mask >> x) & 1 == 1 and top(order, mask) == x
