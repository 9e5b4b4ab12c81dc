"""Axiom checks with deterministic witnesses.

Every check returns an :class:`AxiomReport`.  The witness is the first
violation in canonical order (menus by canonical rank, then choices by index)
and ``n_violations`` counts all violating index tuples.  Tolerance is 0 for
exact data and 1e-9 for float data unless overridden.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import lattice
from .core import RandomJointChoiceRule, default_tolerance, marginal_table, valid_mask
from .mobius import MobiusTable, collapse, mobius_inverse


@dataclass(frozen=True)
class AxiomReport:
    axiom: str
    holds: bool
    witnesses: tuple = ()
    n_violations: int = 0
    tolerance: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "axiom": self.axiom,
            "holds": self.holds,
            "n_violations": self.n_violations,
            "tolerance": self.tolerance,
            "witnesses": [{"cell": w[0], "lhs": _num(w[1]), "rhs": _num(w[2])} for w in self.witnesses],
        }


@dataclass(frozen=True)
class Verdict:
    name: str
    holds: bool
    reports: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"model": self.name, "holds": self.holds,
                "reports": {k: r.to_dict() for k, r in self.reports.items()}}


def _num(v):
    from fractions import Fraction

    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def _tol(p, tolerance):
    return p.tolerance if tolerance is None else tolerance


def _labels(u, menus, choices) -> dict:
    return {"choices": [u.alternatives[c] for c in choices],
            "menus": [u.menu_labels(m) for m in menus]}


def _ordered_hits(mask: np.ndarray, n: int, periods: int) -> np.ndarray:
    """Indices of ``True`` cells sorted canonically (menu ranks, then choices)."""
    hits = np.argwhere(mask)
    if hits.size == 0:
        return hits
    rank = lattice.canonical_rank(n)
    keys = [hits[:, k] for k in range(hits.shape[1] - 1, periods - 1, -1)]
    keys += [rank[hits[:, k]] for k in range(periods - 1, -1, -1)]
    return hits[np.lexsort(keys)]


def _report(name, mask, tol, make_witness, n, periods) -> AxiomReport:
    count = int(np.count_nonzero(mask))
    if count == 0:
        return AxiomReport(name, True, (), 0, tol)
    first = tuple(int(v) for v in _ordered_hits(mask, n, periods)[0])
    return AxiomReport(name, False, (make_witness(first),), count, tol)


# ---------------------------------------------------------------------------


def check_complete_monotonicity(q, tolerance: float | None = None) -> AxiomReport:
    """Every feasible Möbius cell is at least ``-tolerance``."""
    if isinstance(q, RandomJointChoiceRule):
        tol = _tol(q, tolerance)
        q = mobius_inverse(q)
    else:
        tol = default_tolerance(q.numeric) if tolerance is None else tolerance
    n, t = q.n, q.depth
    feasible = valid_mask(n, t).copy()
    for k in range(t):
        sl = [slice(None)] * (2 * t)
        sl[k] = 0
        feasible[tuple(sl)] = False
    mask = feasible & (q.value < -tol)

    def witness(idx):
        return (_labels(q.universe, idx[:t], idx[t:]), q.value[idx], 0)

    return _report("complete_monotonicity", mask, tol, witness, n, t)


def check_marginality(p: RandomJointChoiceRule, tolerance: float | None = None) -> AxiomReport:
    """Summing out choices after period ``tau`` gives a value free of the later menus.

    Each prefix block is compared against its canonically first observed
    extension; a witness reports ``(x^tau, A^tau, B, C)`` with ``B`` that
    reference suffix and ``C`` the disagreeing one.
    """
    tol = _tol(p, tolerance)
    n, T = p.n, p.periods
    best = None
    total = 0
    for depth in range(T - 1, 0, -1):
        summed = p.table.sum(axis=tuple(range(T + depth, 2 * T)))
        ref, _ = marginal_table(p, depth)
        ref_b = ref.reshape(ref.shape[:depth] + (1,) * (T - depth) + ref.shape[depth:])
        obs = p.observed.reshape(p.observed.shape + (1,) * depth)
        valid = valid_mask(n, depth).reshape((1 << n,) * depth + (1,) * (T - depth) + (n,) * depth)
        mask = obs & valid & (abs(summed - ref_b) > tol)
        count = int(np.count_nonzero(mask))
        if not count:
            continue
        total += count
        hit = tuple(int(v) for v in _ordered_hits(mask, n, T)[0])
        prefix, suffix, choices = hit[:depth], hit[depth:T], hit[T:]
        ref_suffix = next(s for s in lattice.canonical_sequences(n, T - depth) if p.observed[prefix + s])
        cell = _labels(p.universe, prefix, choices)
        cell["reference_menus"] = [p.universe.menu_labels(m) for m in ref_suffix]
        cell["other_menus"] = [p.universe.menu_labels(m) for m in suffix]
        if best is None:
            best = (cell, ref[prefix + choices], summed[hit])
    if best is None:
        return AxiomReport("marginality", True, (), 0, tol)
    return AxiomReport("marginality", False, (best,), total, tol)


def check_recursivity(q, tolerance: float | None = None) -> AxiomReport:
    """For nonempty ``B`` strictly inside ``X`` and every history,
    ``sum_{y in B} q(h, y, B) == sum_{z not in B} q(h, z, B + z)``.

    Accepts a rule or its depth-T table.  Lower-depth tables are obtained by
    summing trailing coordinates at the full menu, which needs no marginality.
    """
    if isinstance(q, RandomJointChoiceRule):
        tol = _tol(q, tolerance)
        q = mobius_inverse(q)
    else:
        tol = default_tolerance(q.numeric) if tolerance is None else tolerance
    n, T = q.n, q.depth
    full = (1 << n) - 1
    m = 1 << n
    inmenu = ((np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    best = None
    total = 0
    for depth in range(T, 1, -1):
        value = collapse(q, depth)
        h = depth - 1
        # move the last menu and last choice to the end: (menus h, choices h, B, y)
        v = np.moveaxis(value, h, -2)
        lhs = (v * inmenu).sum(axis=-1)
        zeroval = v.flat[0] * 0 if v.dtype == object else 0.0
        rhs = np.empty_like(lhs)
        rhs[...] = zeroval
        for b in range(m):
            acc = zeroval
            for z in range(n):
                if not (b >> z) & 1:
                    acc = acc + v[..., b | (1 << z), z]
            rhs[..., b] = acc
        proper = np.zeros(m, dtype=bool)
        proper[1:full] = True
        hist_ok = valid_mask(n, h) if h else np.ones((), dtype=bool)
        for k in range(h):
            sl = [slice(None)] * (2 * h)
            sl[k] = 0
            hist_ok = hist_ok.copy()
            hist_ok[tuple(sl)] = False
        mask = (abs(lhs - rhs) > tol) & proper & hist_ok[..., None]
        count = int(np.count_nonzero(mask))
        if not count:
            continue
        total += count
        # reorder to (menus..., B, choices...) for canonical witness order
        mm = np.moveaxis(mask, -1, h)
        idx = tuple(int(v) for v in _ordered_hits(mm, n, depth)[0])
        menus, choices = idx[:depth], idx[depth:]
        cell = _labels(q.universe, menus[:h], choices)
        cell["B"] = q.universe.menu_labels(menus[h])
        key = menus[:h] + choices + (menus[h],)
        if best is None:
            best = (cell, lhs[key], rhs[key])
    if best is None:
        return AxiomReport("recursivity", True, (), 0, tol)
    return AxiomReport("recursivity", False, (best,), total, tol)


def _superset_seqs(menus, observed, n):
    per = [list(lattice.supersets(m, n)) for m in menus]
    return [s for s in itertools.product(*per) if observed[s]]


def check_regularity(p: RandomJointChoiceRule, tolerance: float | None = None) -> AxiomReport:
    """``p(x, A) >= p(x, A') - tolerance`` for nested observed sequences ``A <= A'``."""
    tol = _tol(p, tolerance)
    n, T = p.n, p.periods
    best, total = None, 0
    for menus in p.domain.observed:
        sups = [s for s in _superset_seqs(menus, p.observed, n) if s != menus]
        if not sups:
            continue
        cells = list(itertools.product(*(lattice.members(m) for m in menus)))
        idx = tuple(np.array([s[k] for s in sups]) for k in range(T))
        big = p.table[idx]                                  # (k, n, ..., n)
        small = p.table[menus]
        for choices in cells:
            lhs = small[choices]
            rhs = big[(slice(None),) + choices]
            bad = np.nonzero(lhs < rhs - tol)[0]
            if bad.size:
                total += bad.size
                if best is None:
                    j = min(bad, key=lambda i: tuple(lattice.canonical_rank(n)[m] for m in sups[i]))
                    cell = _labels(p.universe, menus, choices)
                    cell["larger_menus"] = [p.universe.menu_labels(m) for m in sups[j]]
                    best = (cell, lhs, rhs[j])
    if best is None:
        return AxiomReport("regularity", True, (), 0, tol)
    return AxiomReport("regularity", False, (best,), total, tol)


def check_increasing_differences(p: RandomJointChoiceRule, tolerance: float | None = None) -> AxiomReport:
    """Two-period condition: for ``A <= A'`` and ``B <= B'`` with all four products observed,
    ``p(x,y,A,B) - p(x,y,A,B') >= p(x,y,A',B) - p(x,y,A',B')``."""
    if p.periods != 2:
        raise ValueError("increasing differences is a two-period condition")
    tol = _tol(p, tolerance)
    n = p.n
    rank = lattice.canonical_rank(n)
    best, total = None, 0
    for a, b in p.domain.observed:
        if not p.observed[a, b]:
            continue
        for a2 in lattice.supersets(a, n):
            if a2 == a or not p.observed[a2, b]:
                continue
            b2s = [b2 for b2 in lattice.supersets(b, n) if b2 != b and p.observed[a, b2] and p.observed[a2, b2]]
            if not b2s:
                continue
            b2s.sort(key=lambda m: rank[m])
            b2 = np.array(b2s)
            lhs = p.table[a, b][None] - p.table[a, b2]
            rhs = p.table[a2, b][None] - p.table[a2, b2]
            vm = valid_mask(n, 2)[a, b][None]
            bad = vm & (lhs < rhs - tol)
            cnt = int(np.count_nonzero(bad))
            if not cnt:
                continue
            total += cnt
            if best is None:
                k, x, y = (int(v) for v in np.argwhere(bad)[0])
                cell = _labels(p.universe, (a, b), (x, y))
                cell["larger_menus"] = [p.universe.menu_labels(a2), p.universe.menu_labels(b2s[k])]
                best = (cell, lhs[k, x, y], rhs[k, x, y])
    if best is None:
        return AxiomReport("increasing_differences", True, (), 0, tol)
    return AxiomReport("increasing_differences", False, (best,), total, tol)


def check_choice_set_independence(p: RandomJointChoiceRule, tolerance: float | None = None) -> AxiomReport:
    """Cross-multiplied CSI at every depth; pairs with a conditioning mass at or below tolerance are skipped.

    For ``tau < T`` and histories sharing ``x^tau``:
    ``p(x, y, A, B) p(x, A') == p(x, y, A', B) p(x, A)``.
    """
    tol = _tol(p, tolerance)
    n, T = p.n, p.periods
    best, total = None, 0
    for depth in range(1, T):
        cond, cobs = marginal_table(p, depth)
        nxt, nobs = marginal_table(p, depth + 1)
        prefixes = [s for s in lattice.canonical_sequences(n, depth) if cobs[s]]
        for i, a in enumerate(prefixes):
            for a2 in prefixes[i + 1:]:
                nexts = [b for b in lattice.canonical_menus(n) if nobs[a + (b,)] and nobs[a2 + (b,)]]
                if not nexts:
                    continue
                for xs in itertools.product(*(lattice.members(m) for m in a)):
                    if not all(lattice.contains(m, x) for m, x in zip(a2, xs)):
                        continue
                    pa, pa2 = cond[a + xs], cond[a2 + xs]
                    if pa <= tol or pa2 <= tol:
                        continue
                    for b in nexts:
                        for y in lattice.members(b):
                            lhs = nxt[a + (b,) + xs + (y,)] * pa2
                            rhs = nxt[a2 + (b,) + xs + (y,)] * pa
                            if abs(lhs - rhs) > tol:
                                total += 1
                                if best is None:
                                    cell = _labels(p.universe, a, xs)
                                    cell["other_menus"] = [p.universe.menu_labels(m) for m in a2]
                                    cell["next_menu"] = p.universe.menu_labels(b)
                                    cell["next_choice"] = p.universe.alternatives[y]
                                    best = (cell, lhs, rhs)
    if best is None:
        return AxiomReport("choice_set_independence", True, (), 0, tol)
    return AxiomReport("choice_set_independence", False, (best,), total, tol)


def check_cdrum(p: RandomJointChoiceRule, tolerance: float | None = None) -> Verdict:
    """Complete monotonicity and marginality (full lattice required)."""
    reports = {
        "complete_monotonicity": check_complete_monotonicity(p, tolerance),
        "marginality": check_marginality(p, tolerance),
    }
    return Verdict("CDRUM", all(r.holds for r in reports.values()), reports)


def check_si_cdrum(p: RandomJointChoiceRule, tolerance: float | None = None) -> Verdict:
    """CDRUM plus choice set independence."""
    base = check_cdrum(p, tolerance)
    reports = dict(base.reports)
    reports["choice_set_independence"] = check_choice_set_independence(p, tolerance)
    return Verdict("SI-CDRUM", all(r.holds for r in reports.values()), reports)


def check_all(p: RandomJointChoiceRule, tolerance: float | None = None) -> dict[str, AxiomReport]:
    """Every applicable check; Möbius-based ones only on the full lattice."""
    out = {}
    if p.is_full:
        out["complete_monotonicity"] = check_complete_monotonicity(p, tolerance)
        out["recursivity"] = check_recursivity(p, tolerance)
    out["marginality"] = check_marginality(p, tolerance)
    out["regularity"] = check_regularity(p, tolerance)
    if p.periods == 2:
        out["increasing_differences"] = check_increasing_differences(p, tolerance)
    out["choice_set_independence"] = check_choice_set_independence(p, tolerance)
    return out
