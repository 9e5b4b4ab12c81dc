"""Flow-graph construction, path decomposition and CDRUM representations.

For a history ``h = (x^tau, A^tau)`` the graph has one node per subset of
``X`` and an edge ``B -> B - {y}`` carrying ``q(h, y, B)``.  Every path from
``X`` to the empty set removes alternatives one at a time, best first, and so
spells out a linear order.  A path-flow decomposition of the graph is a
distribution over linear orders whose choice behaviour reproduces the
history's Möbius values.

A representation is a first-period distribution ``nu`` plus, for each
``tau < T``, a kernel keyed by ``(x^tau, C^tau)`` where ``C_k`` is the I-cell
menu ``{x_k} + {alternatives ranked below x_k}`` of the period-``k``
preference.  Every (choice, preference) pair lies in exactly one such cell.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from . import lattice
from .core import (
    FLOAT,
    RATIONAL,
    ObservationDomain,
    RandomJointChoiceRule,
    Universe,
    rule_from_array,
    to_number,
    zeros,
)
from .errors import ConservationViolated, NegativeCapacity, NotCdrum
from .mobius import MobiusTable, mobius_inverse, mobius_tables

FLOAT_RESIDUAL = 1e-12


# ---------------------------------------------------------------------------
# preference types


@dataclass(frozen=True)
class LinearOrder:
    """A ranking of alternative indices, best first."""

    ranking: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.ranking) != list(range(len(self.ranking))):
            raise ValueError(f"{self.ranking} is not a permutation")

    def top(self, menu: int) -> int:
        return lattice.top(self.ranking, menu)

    def cell(self, x: int) -> int:
        return lattice.cell(self.ranking, x)

    def label(self, universe: Universe) -> str:
        return universe.order_str(self.ranking)


@dataclass(frozen=True, eq=False)
class PreferenceDistribution:
    """Weights over the ``n!`` linear orders, indexed in ``itertools.permutations`` order."""

    n: int
    weights: np.ndarray

    @classmethod
    def uniform(cls, n: int, numeric: str = RATIONAL) -> "PreferenceDistribution":
        k = math.factorial(n)
        w = zeros(k, numeric)
        w[:] = Fraction(1, k) if numeric == RATIONAL else 1.0 / k
        return cls(n, w)

    @classmethod
    def point(cls, order, numeric: str = RATIONAL) -> "PreferenceDistribution":
        order = tuple(order)
        n = len(order)
        w = zeros(math.factorial(n), numeric)
        w[lattice.order_index(n)[order]] = Fraction(1) if numeric == RATIONAL else 1.0
        return cls(n, w)

    @classmethod
    def from_mapping(cls, n: int, mapping, numeric: str = RATIONAL) -> "PreferenceDistribution":
        w = zeros(math.factorial(n), numeric)
        idx = lattice.order_index(n)
        for order, value in mapping.items():
            w[idx[tuple(order)]] += to_number(value, numeric)
        return cls(n, w)

    def weight(self, order) -> Any:
        return self.weights[lattice.order_index(self.n)[tuple(order)]]

    def support(self) -> list[tuple[tuple[int, ...], Any]]:
        orders = lattice.linear_orders(self.n)
        return [(orders[i], w) for i, w in enumerate(self.weights) if w > 0]

    def total(self):
        return self.weights.sum()

    def to_dict(self, universe: Universe) -> dict[str, str]:
        from .core import format_number

        return {universe.order_str(o): format_number(w) for o, w in self.support()}

    def __eq__(self, other):
        return isinstance(other, PreferenceDistribution) and self.n == other.n and bool(
            np.all(self.weights == other.weights))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TransitionFunction:
    """Kernel of degree ``tau``: ``(x^tau, C^tau) -> distribution`` over next-period orders.

    Keys missing from ``kernel`` map to the uniform distribution.
    """

    degree: int
    kernel: dict
    state_independent: bool = False
    n: int = 0
    numeric: str = RATIONAL

    def __call__(self, choices, cells) -> PreferenceDistribution:
        got = self.kernel.get((tuple(choices), tuple(cells)))
        if got is None:
            return PreferenceDistribution.uniform(self.n, self.numeric)
        return got


@dataclass(frozen=True, eq=False)
class CdrumRepresentation:
    universe: Universe
    nu: PreferenceDistribution
    transitions: tuple = ()
    numeric: str = RATIONAL

    @property
    def periods(self) -> int:
        return len(self.transitions) + 1

    @property
    def state_independent(self) -> bool:
        return all(t.state_independent for t in self.transitions)

    def to_dict(self) -> dict[str, Any]:
        u = self.universe
        trans = []
        for t in self.transitions:
            kernels = []
            for (choices, cells), dist in sorted(t.kernel.items(), key=lambda kv: _kernel_sort(kv[0], u.size)):
                kernels.append({
                    "choices": [u.alternatives[c] for c in choices],
                    "cells": [u.menu_labels(c) for c in cells],
                    "weights": dist.to_dict(u),
                })
            trans.append({"degree": t.degree, "state_independent": t.state_independent, "kernels": kernels})
        return {"alternatives": list(u.alternatives), "numeric_mode": self.numeric,
                "nu": self.nu.to_dict(u), "transitions": trans}

    @classmethod
    def from_dict(cls, obj: dict) -> "CdrumRepresentation":
        u = Universe(tuple(obj["alternatives"]))
        numeric = obj.get("numeric_mode", RATIONAL)
        n = u.size

        def dist(d):
            return PreferenceDistribution.from_mapping(
                n, {u.parse_order(k): to_number(v, numeric) for k, v in d.items()}, numeric)

        trans = []
        for t in obj.get("transitions", []):
            kernel = {}
            for k in t["kernels"]:
                key = (tuple(u.index(c) for c in k["choices"]), tuple(u.menu(c) for c in k["cells"]))
                kernel[key] = dist(k["weights"])
            trans.append(TransitionFunction(int(t["degree"]), kernel, bool(t.get("state_independent", False)),
                                            n, numeric))
        return cls(u, dist(obj["nu"]), tuple(trans), numeric)


def _kernel_sort(key, n):
    rank = lattice.canonical_rank(n)
    choices, cells = key
    return (choices, tuple(rank[c] for c in cells))


# ---------------------------------------------------------------------------
# flow graphs


@dataclass(frozen=True, eq=False)
class FlowGraph:
    """``capacity[B, y]`` is the flow on edge ``B -> B - {y}`` (zero unless ``y`` in ``B``)."""

    n: int
    capacity: np.ndarray
    history: tuple = ((), ())
    numeric: str = RATIONAL

    def outflow(self, node: int):
        return sum((self.capacity[node, y] for y in lattice.members(node)), self.capacity[0, 0] * 0)

    def inflow(self, node: int):
        zero = self.capacity[0, 0] * 0
        return sum((self.capacity[node | (1 << z), z] for z in range(self.n) if not (node >> z) & 1), zero)

    def edges(self):
        for b in lattice.canonical_menus(self.n):
            for y in lattice.members(b):
                yield b, b & ~(1 << y), self.capacity[b, y]


def build_flow_graph(tables: list[MobiusTable], history=((), ())) -> FlowGraph:
    """Graph for ``history = (choices, menus)``; ``tables[k]`` is the depth ``k + 1`` table."""
    choices, menus = (tuple(history[0]), tuple(history[1])) if history else ((), ())
    tau = len(choices)
    q = tables[tau]
    n = q.n
    cap = zeros((1 << n, n), q.numeric)
    block = q.value[menus + (slice(None),) + choices + (slice(None),)]
    for b in range(1, 1 << n):
        for y in lattice.members(b):
            cap[b, y] = block[b, y]
    return FlowGraph(n, cap, (choices, menus), q.numeric)


def decompose(graph: FlowGraph, tolerance: float | None = None) -> PreferenceDistribution:
    """Path-flow decomposition with the canonical smallest-alternative tie-break.

    Zero total outflow at the full set gives the uniform distribution.
    Otherwise capacities are normalised and paths ``X -> ... -> {}`` are
    peeled off, each weighted by its bottleneck residual.
    """
    n = graph.n
    exact = graph.numeric == RATIONAL
    check_tol = 0 if exact else (1e-9 if tolerance is None else tolerance)
    eps = 0 if exact else FLOAT_RESIDUAL
    full = (1 << n) - 1
    cap = graph.capacity
    for b, _, c in graph.edges():
        if c < -check_tol:
            raise NegativeCapacity(f"edge out of {b} has capacity {c}")
    for b in range(1, full):
        if abs(graph.inflow(b) - graph.outflow(b)) > check_tol:
            raise ConservationViolated(f"node {b}: inflow {graph.inflow(b)} != outflow {graph.outflow(b)}")
    total = graph.outflow(full)
    if total <= max(eps, check_tol):
        return PreferenceDistribution.uniform(n, graph.numeric)
    res = cap / total
    if not exact:
        res = np.clip(res.astype(np.float64), 0.0, None)
    weights = zeros(math.factorial(n), graph.numeric)
    index = lattice.order_index(n)
    n_edges = n << (n - 1)
    for _ in range(4 * n_edges + 4):
        if sum(res[full, y] for y in range(n)) <= eps:
            break
        node, path = full, []
        while node:
            options = [y for y in lattice.members(node) if res[node, y] > eps]
            if options:
                y = options[0]
            else:
                y = max(lattice.members(node), key=lambda z: res[node, z])
            path.append((node, y))
            node &= ~(1 << y)
        w = min(res[b, y] for b, y in path)
        if w <= eps:
            break
        for b, y in path:
            res[b, y] -= w
        weights[index[tuple(y for _, y in path)]] += w
    if not exact:
        s = weights.sum()
        weights = weights / s if s > 0 else PreferenceDistribution.uniform(n, FLOAT).weights
    return PreferenceDistribution(n, weights)


# ---------------------------------------------------------------------------
# recovery


_CELL_CACHE: dict = {}


def _cells_of_n(n: int, x: int) -> tuple[int, ...]:
    key = (n, x)
    if key not in _CELL_CACHE:
        _CELL_CACHE[key] = tuple(m for m in lattice.canonical_menus(n) if (m >> x) & 1)
    return _CELL_CACHE[key]


def recover_representation(p: RandomJointChoiceRule, tolerance: float | None = None,
                           check: bool = True) -> CdrumRepresentation:
    """Representation built from per-history path-flow decompositions.

    When choice set independence also holds, every cell history of a choice
    history reuses the decomposition of the canonically first cell history
    with positive mass, so kernels are state independent.
    """
    from .axioms import check_cdrum, check_choice_set_independence

    if check:
        verdict = check_cdrum(p, tolerance)
        if not verdict.holds:
            raise NotCdrum(verdict)
    si = check_choice_set_independence(p, tolerance).holds
    tables = mobius_tables(p, check=False)
    n, T = p.n, p.periods
    tol = p.tolerance if tolerance is None else tolerance
    nu = decompose(build_flow_graph(tables, ((), ())), tol)
    transitions = []
    for tau in range(1, T):
        mass = tables[tau - 1].value
        kernel = {}
        for choices in itertools.product(range(n), repeat=tau):
            cell_hists = list(itertools.product(*(_cells_of_n(n, x) for x in choices)))
            if si:
                shared = None
                for cells in cell_hists:
                    if mass[cells + choices] > tol:
                        shared = decompose(build_flow_graph(tables, (choices, cells)), tol)
                        break
                if shared is None:
                    shared = PreferenceDistribution.uniform(n, p.numeric)
                for cells in cell_hists:
                    kernel[(choices, cells)] = shared
            else:
                for cells in cell_hists:
                    kernel[(choices, cells)] = decompose(build_flow_graph(tables, (choices, cells)), tol)
        transitions.append(TransitionFunction(tau, kernel, si, n, p.numeric))
    return CdrumRepresentation(p.universe, nu, tuple(transitions), p.numeric)


# ---------------------------------------------------------------------------
# forward evaluation


def _supports(rep: CdrumRepresentation):
    cache: dict = {}

    def support(tau, choices, cells):
        key = (tau, choices, cells)
        got = cache.get(key)
        if got is None:
            dist = rep.nu if tau == 0 else rep.transitions[tau - 1](choices, cells)
            got = dist.support()
            cache[key] = got
        return got

    return support


def evaluate_representation(rep: CdrumRepresentation, domain: ObservationDomain | None = None) -> RandomJointChoiceRule:
    """Exact forward evaluation of the representation on ``domain`` (default: full lattice).

    Preferences are drawn period by period; the agent picks the top of each
    menu and the next preference is drawn from the kernel at the history of
    choices and I-cells.
    """
    u, n, T = rep.universe, rep.universe.size, rep.periods
    if domain is None:
        domain = ObservationDomain.full(n, T)
    numeric = rep.numeric
    support = _supports(rep)
    orders = lattice.order_array(n)
    from .kernels import cell_table, choice_table

    ch = choice_table(orders, n)
    cells = cell_table(orders)
    index = lattice.order_index(n)
    table = zeros((1 << n,) * T + (n,) * T, numeric)
    observed = domain.mask_array(n)
    prefixes = [set() for _ in range(T + 1)]
    for seq in domain.observed:
        for k in range(T + 1):
            prefixes[k].add(seq[:k])
    zero = Fraction(0) if numeric == RATIONAL else 0.0

    def step(menus, states):
        k = len(menus)
        if k == T:
            for (xs, _), m in states.items():
                table[menus + xs] += m
            return
        for a in sorted((s[k] for s in prefixes[k + 1] if s[:k] == menus), key=lambda m: lattice.canonical_rank(n)[m]):
            new: dict = {}
            for (xs, cs), m in states.items():
                for order, w in support(k, xs, cs):
                    r = index[order]
                    x = int(ch[r, a])
                    key = (xs + (x,), cs + (int(cells[r, x]),))
                    new[key] = new.get(key, zero) + m * w
            step(menus + (a,), new)

    one = Fraction(1) if numeric == RATIONAL else 1.0
    step((), {((), ()): one})
    return rule_from_array(u, T, table, observed, numeric)


def implied_mobius(rep: CdrumRepresentation) -> MobiusTable:
    """``q(x, C) = P(cell(pref_k, x_k) = C_k for every k)`` summed along preference paths."""
    u, n, T = rep.universe, rep.universe.size, rep.periods
    numeric = rep.numeric
    support = _supports(rep)
    value = zeros((1 << n,) * T + (n,) * T, numeric)
    zero = Fraction(0) if numeric == RATIONAL else 0.0
    one = Fraction(1) if numeric == RATIONAL else 1.0
    for xs in itertools.product(range(n), repeat=T):
        states = {(): one}
        for k in range(T):
            new: dict = {}
            for cs, m in states.items():
                for order, w in support(k, xs[:k], cs):
                    key = cs + (lattice.cell(order, xs[k]),)
                    new[key] = new.get(key, zero) + m * w
            states = new
        for cs, m in states.items():
            value[cs + xs] += m
    return MobiusTable(u, T, value, numeric)


def verify_representation(rep: CdrumRepresentation, p: RandomJointChoiceRule):
    """Sup-norm gap between the rule's Möbius table and the one the representation implies.

    On a limited domain the comparison falls back to the choice probabilities
    of observed cells.
    """
    if p.is_full:
        target = mobius_inverse(p).value
        implied = implied_mobius(rep).value
    else:
        implied = evaluate_representation(rep, p.domain).table
        target = p.table
    diff = abs(np.asarray(implied, dtype=object) - np.asarray(target, dtype=object)) \
        if p.numeric == RATIONAL else np.abs(np.asarray(implied, float) - np.asarray(target, float))
    gap = max(diff.reshape(-1), default=0)
    return gap if p.numeric == RATIONAL else float(gap)
