"""Ground-truth generators: extreme-point mixtures, perturbations and finite samples.

All randomness comes from ``numpy.random.Generator(numpy.random.Philox(...))``,
a counter-based generator, so outputs are fixed functions of their inputs and
seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from . import lattice
from .core import (
    FLOAT,
    RATIONAL,
    ObservationDomain,
    RandomJointChoiceRule,
    Universe,
    rule_from_array,
    valid_mask,
    zeros,
)
from .kernels import cell_table, choice_table

RNG_ALGORITHM = "Philox4x64-10"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` with an optional sub-stream path."""
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExtremePoint:
    """Deterministic CDRUM rule: a first order and one order per earlier choice history."""

    first: tuple[int, ...]
    after: dict          # choice history (tuple) -> order

    def order_for(self, history: tuple[int, ...]) -> tuple[int, ...]:
        return self.first if not history else self.after[history]


@dataclass(frozen=True)
class Mixture:
    components: tuple
    weights: tuple

    def to_dict(self, universe: Universe) -> dict[str, Any]:
        from .core import format_number

        out = []
        for ep, w in zip(self.components, self.weights):
            out.append({
                "weight": format_number(w),
                "first": universe.order_str(ep.first),
                "after": {",".join(universe.alternatives[c] for c in h): universe.order_str(o)
                          for h, o in sorted(ep.after.items())},
            })
        return {"components": out}


def extreme_table(ep: ExtremePoint, n: int, periods: int) -> np.ndarray:
    """Integer 0/1 table of a deterministic rule on the full lattice."""
    orders = lattice.order_array(n)
    ch = choice_table(orders, n)
    index = lattice.order_index(n)
    out = np.zeros((1 << n,) * periods + (n,) * periods, dtype=np.int64)
    for menus in lattice.canonical_sequences(n, periods):
        hist: tuple[int, ...] = ()
        for a in menus:
            hist += (int(ch[index[ep.order_for(hist)], a]),)
        out[menus + hist] = 1
    return out


def random_extreme_point(n: int, periods: int, rng: np.random.Generator) -> ExtremePoint:
    orders = lattice.linear_orders(n)
    first = orders[rng.integers(len(orders))]
    after = {}
    for depth in range(1, periods):
        for h in itertools.product(range(n), repeat=depth):
            after[h] = orders[rng.integers(len(orders))]
    return ExtremePoint(first, after)


def random_mixture(universe: Universe, periods: int = 2, k: int = 3, seed: int = 0,
                   numeric: str = RATIONAL) -> tuple[RandomJointChoiceRule, Mixture]:
    """Rule induced by ``k`` random extreme points with random positive weights.

    Float weights are Dirichlet(1, ..., 1); exact weights are random integers
    in ``1..100`` divided by their total.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = universe.size
    rng = make_rng(seed)
    comps = tuple(random_extreme_point(n, periods, rng) for _ in range(k))
    if numeric == RATIONAL:
        ints = rng.integers(1, 101, size=k)
        tot = int(ints.sum())
        weights = tuple(Fraction(int(i), tot) for i in ints)
    else:
        weights = tuple(float(w) for w in rng.dirichlet(np.ones(k)))
    table = zeros((1 << n,) * periods + (n,) * periods, numeric)
    for ep, w in zip(comps, weights):
        ind = extreme_table(ep, n, periods).astype(bool)
        table[ind] = table[ind] + w
    observed = ObservationDomain.full(n, periods).mask_array(n)
    return rule_from_array(universe, periods, table, observed, numeric), Mixture(comps, weights)


def perturb(p: RandomJointChoiceRule, epsilon: float, seed: int = 0) -> RandomJointChoiceRule:
    """Add mean-zero uniform noise of half-width ``epsilon`` per menu block, clip at zero, renormalise."""
    if epsilon == 0:
        return p
    n, T = p.n, p.periods
    rng = make_rng(seed, 1)
    valid = valid_mask(n, T)
    table = p.table.copy()
    exact = p.numeric == RATIONAL
    eps = Fraction(str(epsilon)) if exact else float(epsilon)
    for menus in p.domain.observed:
        cells = list(itertools.product(*(lattice.members(m) for m in menus)))
        raw = rng.integers(-1000, 1001, size=len(cells))
        if exact:
            noise = [Fraction(int(r), 1000) * eps for r in raw]
            mean = sum(noise, Fraction(0)) / len(noise)
        else:
            noise = list(raw / 1000.0 * eps)
            mean = float(np.mean(noise))
        vals = []
        for c, z in zip(cells, noise):
            v = table[menus + c] + z - mean
            vals.append(v if v > 0 else (Fraction(0) if exact else 0.0))
        total = sum(vals, Fraction(0) if exact else 0.0)
        for c, v in zip(cells, vals):
            table[menus + c] = v / total
    table[~valid] = Fraction(0) if exact else 0.0
    return rule_from_array(p.universe, T, table, p.observed, p.numeric)


def _draw(rng: np.random.Generator, probs: np.ndarray, size: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    probs = probs / probs.sum()
    return rng.choice(len(probs), size=size, p=probs)


def _groups(hist: np.ndarray, k: int, n: int):
    """Agents sharing a history, in sorted history order; keys split the columns at ``k``.

    Columns ``:k`` hold choices (< n) and any further columns hold menus (< 2^n).
    """
    if hist.shape[1] == 0:
        yield ((), ()), np.arange(hist.shape[0])
        return
    dims = (n,) * k + (1 << n,) * (hist.shape[1] - k)
    codes = np.ravel_multi_index(tuple(hist.T), dims)
    keys, inverse = np.unique(codes, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(keys) + 1))
    for g, code in enumerate(keys):
        row = tuple(int(v) for v in np.unravel_index(code, dims))
        yield (row[:k], row[k:]), order[bounds[g]:bounds[g + 1]]


def sample_choices(source, domain: ObservationDomain | None = None, n_agents: int = 1000, seed: int = 0,
                   numeric: str = FLOAT, universe: Universe | None = None,
                   periods: int | None = None) -> RandomJointChoiceRule:
    """Empirical rule from ``n_agents`` simulated trajectories per observed menu sequence.

    ``source`` is a :class:`~cdrum.recovery.CdrumRepresentation` or any object
    with ``universe`` and ``choice_probabilities(choices, menus, menu)``
    returning a probability vector over alternatives.  Menu sequence ``j`` uses
    its own Philox stream ``(seed, j)``; agents within it are drawn together.
    """
    from .recovery import CdrumRepresentation

    u = universe or source.universe
    n = u.size
    if isinstance(source, CdrumRepresentation):
        T = source.periods
    else:
        T = periods or 2
    if domain is None:
        domain = ObservationDomain.full(n, T)
    T = domain.periods
    counts = np.zeros((1 << n,) * T + (n,) * T, dtype=np.int64)
    if isinstance(source, CdrumRepresentation):
        orders = lattice.order_array(n)
        ch = choice_table(orders, n)
        cells = cell_table(orders)
    for j, menus in enumerate(domain.observed):
        rng = make_rng(seed, 2, j)
        xs = np.zeros((n_agents, T), dtype=np.int64)
        if isinstance(source, CdrumRepresentation):
            cs = np.zeros((n_agents, T), dtype=np.int64)
            for k, a in enumerate(menus):
                for key, idx in _groups(np.hstack([xs[:, :k], cs[:, :k]]), k, n):
                    dist = source.nu if k == 0 else source.transitions[k - 1](*key)
                    o = _draw(rng, dist.weights, idx.size)
                    x = ch[o, a]
                    xs[idx, k] = x
                    cs[idx, k] = cells[o, x]
        else:
            for k, a in enumerate(menus):
                for (key, _), idx in _groups(xs[:, :k], k, n):
                    probs = source.choice_probabilities(key, menus[:k], a)
                    xs[idx, k] = _draw(rng, probs, idx.size)
        cell = np.ravel_multi_index(tuple(xs.T), (n,) * T)
        counts[menus] += np.bincount(cell, minlength=n**T).reshape((n,) * T)
    if numeric == RATIONAL:
        table = zeros(counts.shape, RATIONAL)
        nz = np.argwhere(counts)
        for idx in map(tuple, nz):
            table[idx] = Fraction(int(counts[idx]), n_agents)
    else:
        table = counts / float(n_agents)
    return rule_from_array(u, T, table, domain.mask_array(n), numeric)
