"""Parametric logit special cases: consumption-dependent (habit/variety) and learning.

Both models assign each alternative a utility that depends on the choice
history, then choose by softmax over the menu.

* Consumption-dependent logit: ``u_y = v_y + sum_{i<=n} c(y, i)`` when ``y`` is
  the most recent choice and was chosen ``n`` periods in a row, else ``v_y``.
* Learning logit: ``u_y = v*_y`` once ``y`` has been consumed, else ``E[v_y]``.

Probabilities are floats; softmax runs in log space with max subtraction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import lattice
from .axioms import AxiomReport, Verdict, check_marginality
from .core import (
    FLOAT,
    FLOAT_TOL,
    ConditionalChoiceSystem,
    ObservationDomain,
    RandomJointChoiceRule,
    Universe,
    to_conditional,
)
from .errors import DomainIncomplete, PositivityViolated

__all__ = [
    "HabitLogitParams",
    "LearningLogitParams",
    "StreakSignature",
    "LongRunPrediction",
    "streak",
    "consumed",
    "eval_habit_logit",
    "eval_learning_logit",
    "identify_habit_logit",
    "identify_learning_logit",
    "transition_matrix",
    "stationary_distribution",
    "check_parametric_axioms",
    "consumption_dependent_verdict",
    "learning_verdict",
    "classify",
]


# ---------------------------------------------------------------------------
# parameters


def _finite(values, what: str) -> None:
    for v in values:
        if not math.isfinite(float(v)):
            raise ValueError(f"{what} must be finite")


@dataclass(frozen=True)
class HabitLogitParams:
    """Consumption-dependent logit parameters.

    Attributes:
        v: base utility per alternative label; the outside option defaults to 0.
        c: per-label streak increments ``(c(x,1), c(x,2), ...)``.  Entries past
            the end of a tuple count as 0.
        outside: label of the normalised alternative (``v_o = 0``, ``c(o,.) = 0``),
            or ``None`` for unnormalised parameters.
    """

    v: Mapping[str, float]
    c: Mapping[str, tuple] = field(default_factory=dict)
    outside: str | None = "o"

    def __post_init__(self):
        v = {str(k): float(x) for k, x in self.v.items()}
        c = {str(k): tuple(float(x) for x in np.atleast_1d(vals)) for k, vals in self.c.items()}
        _finite(v.values(), "utilities")
        _finite(itertools.chain.from_iterable(c.values()), "increments")
        if self.outside is not None:
            v.setdefault(self.outside, 0.0)
            if v[self.outside] != 0.0:
                raise ValueError("the outside option must have v = 0")
            if any(x != 0.0 for x in c.get(self.outside, ())):
                raise ValueError("the outside option must have c = 0")
        unknown = set(c) - set(v)
        if unknown:
            raise ValueError(f"increments for unknown alternatives: {sorted(unknown)}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "c", c)

    @property
    def universe(self) -> Universe:
        return Universe(tuple(self.v))

    def increment(self, label: str, run: int) -> float:
        """``sum_{i=1}^{run} c(label, i)``."""
        return float(sum(self.c.get(label, ())[:run]))

    @property
    def is_habit(self) -> bool:
        return all(x >= 0 for vals in self.c.values() for x in vals)

    @property
    def is_variety(self) -> bool:
        return all(x <= 0 for vals in self.c.values() for x in vals)

    def utilities(self, universe: Universe, choices: tuple[int, ...]) -> np.ndarray:
        u = np.array([self.v[a] for a in universe.alternatives])
        s = streak(choices)
        if s is not None:
            u[s.last] += self.increment(universe.alternatives[s.last], s.run)
        return u

    def choice_probabilities(self, choices, menus, menu: int, universe: Universe | None = None) -> np.ndarray:
        u = universe or self.universe
        return _softmax(self.utilities(u, tuple(choices)), menu)

    def to_dict(self) -> dict[str, Any]:
        return {"model": "habit", "outside": self.outside, "v": dict(self.v),
                "c": {k: list(vals) for k, vals in self.c.items()}}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "HabitLogitParams":
        return cls(obj["v"], obj.get("c", {}), obj.get("outside", "o"))


@dataclass(frozen=True)
class LearningLogitParams:
    """Learning logit parameters.

    Attributes:
        mean: prior mean utility ``E[v_x]`` per label.
        realized: realised utility ``v*_x`` per label, used once ``x`` is consumed.
        outside: label normalised to ``E[v_o] = 0`` by identification, if any.
    """

    mean: Mapping[str, float]
    realized: Mapping[str, float]
    outside: str | None = None

    def __post_init__(self):
        mean = {str(k): float(x) for k, x in self.mean.items()}
        realized = {str(k): float(x) for k, x in self.realized.items()}
        if set(mean) != set(realized):
            raise ValueError("mean and realized utilities must cover the same alternatives")
        _finite(mean.values(), "mean utilities")
        _finite(realized.values(), "realized utilities")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "realized", realized)

    @property
    def universe(self) -> Universe:
        return Universe(tuple(self.mean))

    def utilities(self, universe: Universe, choices: tuple[int, ...]) -> np.ndarray:
        seen = consumed(choices)
        return np.array([self.realized[a] if seen >> i & 1 else self.mean[a]
                         for i, a in enumerate(universe.alternatives)])

    def choice_probabilities(self, choices, menus, menu: int, universe: Universe | None = None) -> np.ndarray:
        u = universe or self.universe
        return _softmax(self.utilities(u, tuple(choices)), menu)

    def to_dict(self) -> dict[str, Any]:
        return {"model": "learning", "outside": self.outside,
                "mean": dict(self.mean), "realized": dict(self.realized)}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "LearningLogitParams":
        return cls(obj["mean"], obj["realized"], obj.get("outside"))


@dataclass(frozen=True)
class StreakSignature:
    """Most recent choice and the length of its trailing run (``run >= 1``)."""

    last: int
    run: int


def streak(choices) -> StreakSignature | None:
    """Trailing-run signature of a choice history; ``None`` for the empty history."""
    choices = tuple(choices)
    if not choices:
        return None
    last = choices[-1]
    run = 0
    for x in reversed(choices):
        if x != last:
            break
        run += 1
    return StreakSignature(int(last), run)


def consumed(choices) -> int:
    """Bitmask of alternatives chosen at least once."""
    mask = 0
    for x in choices:
        mask |= 1 << int(x)
    return mask


def _softmax(u: np.ndarray, menu: int) -> np.ndarray:
    idx = lattice.members(menu)
    out = np.zeros(u.shape[0])
    z = u[list(idx)]
    z = z - z.max()
    e = np.exp(z)
    out[list(idx)] = e / e.sum()
    return out


# ---------------------------------------------------------------------------
# evaluation


def _evaluate(params, universe: Universe, periods: int, domain: ObservationDomain | None) -> ConditionalChoiceSystem:
    n = universe.size
    missing = set(universe.alternatives) - set(params.universe.alternatives)
    if missing:
        raise ValueError(f"no parameters for {sorted(missing)}")
    if domain is None:
        domain = ObservationDomain.full(n, periods)
    T = domain.periods
    rank = lattice.canonical_rank(n)
    nexts: dict = {}
    for seq in domain.observed:
        for k in range(T):
            nexts.setdefault(seq[:k], set()).add(seq[k])

    def block(choices, menu):
        probs = _softmax(params.utilities(universe, choices), menu)
        return {x: float(probs[x]) for x in lattice.members(menu)}

    first = {a: block((), a) for a in sorted(nexts[()], key=rank.__getitem__)}
    conditional = {}
    for prefix in sorted((s for s in nexts if s), key=lambda s: (len(s), [rank[m] for m in s])):
        menus = sorted(nexts[prefix], key=rank.__getitem__)
        for choices in itertools.product(*(lattice.members(m) for m in prefix)):
            conditional[(choices, prefix)] = {b: block(choices, b) for b in menus}
    return ConditionalChoiceSystem(universe, T, first, conditional, FLOAT)


def eval_habit_logit(params: HabitLogitParams, periods: int = 2, domain: ObservationDomain | None = None,
                     universe: Universe | None = None) -> ConditionalChoiceSystem:
    """Conditional choice system of a consumption-dependent logit.

    Args:
        params: model parameters.
        periods: number of periods when ``domain`` is omitted.
        domain: menu sequences to populate; defaults to every sequence.
        universe: alternative order; defaults to the order of ``params.v``.
    """
    return _evaluate(params, universe or params.universe, periods, domain)


def eval_learning_logit(params: LearningLogitParams, periods: int = 2, domain: ObservationDomain | None = None,
                        universe: Universe | None = None) -> ConditionalChoiceSystem:
    """Conditional choice system of a learning logit; blocks depend on the consumed set only."""
    return _evaluate(params, universe or params.universe, periods, domain)


# ---------------------------------------------------------------------------
# identification


def _positivity_or_raise(ccs: ConditionalChoiceSystem) -> None:
    report = check_positivity(ccs)
    if not report.holds:
        raise PositivityViolated(report.witnesses[0][0])


def _block_at(ccs: ConditionalChoiceSystem, choices: tuple, menu: int) -> dict:
    if not choices:
        if menu not in ccs.first:
            raise DomainIncomplete([ccs.universe.menu_labels(menu)])
        return ccs.first[menu]
    key = (choices, (menu,) * len(choices))
    try:
        return ccs.conditional[key][menu]
    except KeyError:
        raise DomainIncomplete([ccs.universe.menu_labels(menu)] * (len(choices) + 1)) from None


def _logodds(block: dict, x: int, y: int) -> float:
    return math.log(float(block[x])) - math.log(float(block[y]))


def identify_habit_logit(ccs: ConditionalChoiceSystem, outside: str, menu=None) -> HabitLogitParams:
    """Invert a consumption-dependent logit from repeated choice at one menu.

    ``v_x`` is the first-period log-odds of ``x`` against ``outside``;
    ``c(x, k)`` is the change in that log-odds after ``k`` versus ``k - 1``
    consecutive choices of ``x``.  ``menu`` defaults to the full universe.
    """
    u = ccs.universe
    _positivity_or_raise(ccs)
    o = u.index(outside)
    X = u.full if menu is None else u.menu(menu)
    if not lattice.contains(X, o):
        raise ValueError("the menu must contain the outside option")
    v, c = {}, {}
    for x in lattice.members(X):
        label = u.alternatives[x]
        if x == o:
            continue
        odds = [_logodds(_block_at(ccs, (x,) * k, X), x, o) for k in range(ccs.periods)]
        v[label] = odds[0]
        c[label] = tuple(b - a for a, b in zip(odds, odds[1:]))
    v[outside] = 0.0
    return HabitLogitParams({a: v[a] for a in u.alternatives if a in v}, c, outside)


def identify_learning_logit(ccs: ConditionalChoiceSystem, outside: str, menu=None) -> LearningLogitParams:
    """Invert a learning logit with ``E[v_outside] = 0``.

    Means come from first-period log-odds.  ``v*_x`` for ``x != outside`` is
    the log-odds of ``x`` against ``outside`` after choosing ``x`` once;
    ``v*_outside`` uses the first other alternative in the menu as reference.
    """
    u = ccs.universe
    _positivity_or_raise(ccs)
    if ccs.periods < 2:
        raise ValueError("realized utilities need at least two periods")
    o = u.index(outside)
    X = u.full if menu is None else u.menu(menu)
    if not lattice.contains(X, o):
        raise ValueError("the menu must contain the outside option")
    first = _block_at(ccs, (), X)
    mean = {u.alternatives[x]: (0.0 if x == o else _logodds(first, x, o)) for x in lattice.members(X)}
    realized = {}
    for x in lattice.members(X):
        label = u.alternatives[x]
        if x != o:
            realized[label] = _logodds(_block_at(ccs, (x,), X), x, o)
    others = [x for x in lattice.members(X) if x != o]
    if others:
        y = others[0]
        realized[outside] = _logodds(_block_at(ccs, (o,), X), o, y) + mean[u.alternatives[y]]
    else:
        realized[outside] = 0.0
    order = [a for a in u.alternatives if a in mean]
    return LearningLogitParams({a: mean[a] for a in order}, {a: realized[a] for a in order}, outside)


# ---------------------------------------------------------------------------
# long-run prediction


@dataclass(frozen=True)
class LongRunPrediction:
    alternatives: tuple
    probabilities: np.ndarray
    residual: float

    def to_dict(self) -> dict[str, Any]:
        return {"stationary": {a: float(p) for a, p in zip(self.alternatives, self.probabilities)},
                "residual": self.residual}


def transition_matrix(params: HabitLogitParams, universe: Universe | None = None, menu=None) -> np.ndarray:
    """Row-stochastic ``P[x, y] = p(y, X | x, X)`` restricted to the menu's members."""
    u = universe or params.universe
    X = u.full if menu is None else u.menu(menu)
    idx = list(lattice.members(X))
    return np.array([params.choice_probabilities((x,), (X,), X, u)[idx] for x in idx])


def stationary_distribution(params: HabitLogitParams, universe: Universe | None = None,
                            menu=None) -> LongRunPrediction:
    """Closed-form stationary shares of repeated choice from one menu.

    ``p_s(x)`` is proportional to ``e^{v_x} sum_y e^{v_y + c(y,1) 1{x=y}}``,
    evaluated in log space.  ``residual`` is ``max |p_s P - p_s|``.
    """
    u = universe or params.universe
    X = u.full if menu is None else u.menu(menu)
    idx = list(lattice.members(X))
    labels = [u.alternatives[i] for i in idx]
    v = np.array([params.v[a] for a in labels])
    c = np.array([params.increment(a, 1) for a in labels])
    k = len(idx)
    util = np.broadcast_to(v, (k, k)) + np.diag(c)     # row x: utilities after choosing x
    row_lse = _logsumexp(util, axis=1)
    log_ps = v + row_lse
    ps = np.exp(log_ps - log_ps.max())
    ps = ps / ps.sum()
    P = transition_matrix(params, u, X)
    residual = float(np.max(np.abs(ps @ P - ps)))
    return LongRunPrediction(tuple(labels), ps, residual)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


# ---------------------------------------------------------------------------
# axiom battery


@dataclass
class _Records:
    """Flattened view of a conditional choice system.

    Each history (the empty one first) gets a row in ``last``, ``run`` and
    ``seen``; ``last = -1`` and ``run = 0`` mark the empty history.
    """

    ccs: ConditionalChoiceSystem
    histories: list
    last: np.ndarray
    run: np.ndarray
    seen: np.ndarray
    blocks: list            # per history: {menu: {y: prob}}


def _records(ccs: ConditionalChoiceSystem) -> _Records:
    n = ccs.universe.size
    rank = lattice.canonical_rank(n)
    hists = [((), ())] + sorted(ccs.conditional, key=lambda h: (len(h[0]), h[0], [rank[m] for m in h[1]]))
    last, run, seen, blocks = [], [], [], []
    for h in hists:
        s = streak(h[0])
        last.append(-1 if s is None else s.last)
        run.append(0 if s is None else s.run)
        seen.append(consumed(h[0]))
        raw = ccs.first if not h[0] else ccs.conditional[h]
        blocks.append({m: raw[m] for m in sorted(raw, key=rank.__getitem__)})
    return _Records(ccs, hists, np.array(last), np.array(run), np.array(seen), blocks)


def _hist_labels(u: Universe, h) -> dict:
    return {"choices": [u.alternatives[c] for c in h[0]], "menus": [u.menu_labels(m) for m in h[1]]}


def _tol(ccs, tolerance):
    return FLOAT_TOL if tolerance is None else tolerance


def check_positivity(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Every listed alternative has strictly positive probability in every block."""
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    u = ccs.universe
    best, count = None, 0
    for h, blocks in zip(rec.histories, rec.blocks):
        for b, row in blocks.items():
            for y in lattice.members(b):
                val = row.get(y, 0)
                if not val > 0:
                    count += 1
                    if best is None:
                        cell = _hist_labels(u, h)
                        cell.update(menu=u.menu_labels(b), choice=u.alternatives[y])
                        best = (cell, val, 0.0)
    return AxiomReport("positivity", best is None, () if best is None else (best,), count, tol)


def _odds_rows(rec: _Records):
    """One row per (history, menu, w, z) with ``w != z`` both in the menu."""
    rows = []
    for hi, blocks in enumerate(rec.blocks):
        for b, row in blocks.items():
            mem = lattice.members(b)
            for w in mem:
                for z in mem:
                    if w != z:
                        rows.append((hi, b, w, z, float(row[w]), float(row[z])))
    if not rows:
        return np.zeros((0, 4), dtype=np.int64), np.zeros((0, 2))
    arr = np.array(rows, dtype=object)
    return arr[:, :4].astype(np.int64), arr[:, 4:].astype(np.float64)


def _grouped_odds(name: str, rec: _Records, keys: np.ndarray, sel: np.ndarray, meta: np.ndarray,
                  vals: np.ndarray, tol: float, case=None) -> tuple[int, tuple | None]:
    """Compare each selected odds ratio with the first in its key group by cross-multiplication."""
    if not sel.any():
        return 0, None
    k, m, v = keys[sel], meta[sel], vals[sel]
    _, first, inv = np.unique(k, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    ref = v[first[inv]]
    lhs = v[:, 0] * ref[:, 1]
    rhs = ref[:, 0] * v[:, 1]
    bad = np.abs(lhs - rhs) > tol
    count = int(bad.sum())
    if not count:
        return 0, None
    i = int(np.argmax(bad))
    j = int(first[inv[i]])
    u = rec.ccs.universe
    hi, b, w, z = m[i]
    hj, bj = m[j][0], m[j][1]
    cell = {
        "history": _hist_labels(u, rec.histories[hi]),
        "menu": u.menu_labels(int(b)),
        "reference_history": _hist_labels(u, rec.histories[hj]),
        "reference_menu": u.menu_labels(int(bj)),
        "pair": [u.alternatives[int(w)], u.alternatives[int(z)]],
    }
    if case is not None:
        cell["case"] = case
    return count, (cell, float(lhs[i]), float(rhs[i]))


def _merge(name: str, parts, tol) -> AxiomReport:
    count = sum(c for c, _ in parts)
    wit = next((w for _, w in parts if w is not None), None)
    return AxiomReport(name, count == 0, () if wit is None else (wit,), count, tol)


def check_far_history_independence(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Histories with the same (last choice, run length) share every common block.

    Histories of different lengths are compared too.  Each block is compared
    with the first history of its class that offers the same menu.
    """
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    u = ccs.universe
    ref: dict = {}
    best, count = None, 0
    for hi, blocks in enumerate(rec.blocks):
        if rec.run[hi] == 0:
            continue
        cls = (int(rec.last[hi]), int(rec.run[hi]))
        for b, row in blocks.items():
            key = cls + (b,)
            if key not in ref:
                ref[key] = hi
                continue
            base = rec.blocks[ref[key]][b]
            for y in lattice.members(b):
                lhs, rhs = row[y], base[y]
                if abs(float(lhs) - float(rhs)) > tol:
                    count += 1
                    if best is None:
                        cell = {"history": _hist_labels(u, rec.histories[hi]),
                                "reference_history": _hist_labels(u, rec.histories[ref[key]]),
                                "menu": u.menu_labels(b), "choice": u.alternatives[y]}
                        best = (cell, float(lhs), float(rhs))
    return AxiomReport("far_history_independence", best is None, () if best is None else (best,), count, tol)


def check_fhi_iia(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Odds of ``w`` to ``z`` agree across histories and menus.

    Case 1 groups pairs where neither is the last choice (the empty history
    has no last choice).  Case 2 groups pairs whose ``w`` is the last choice
    with the same run length.
    """
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    meta, vals = _odds_rows(rec)
    hi, w, z = meta[:, 0], meta[:, 2], meta[:, 3]
    last, run = rec.last[hi], rec.run[hi]
    case1 = (last != w) & (last != z)
    case2 = last == w
    parts = [
        _grouped_odds("fhi_iia", rec, np.stack([w, z], axis=1), case1, meta, vals, tol, 1),
        _grouped_odds("fhi_iia", rec, np.stack([w, z, run], axis=1), case2, meta, vals, tol, 2),
    ]
    return _merge("fhi_iia", parts, tol)


def check_intertemporal_iia(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Odds of ``w`` to ``z`` depend only on which of the two were ever consumed.

    Case 1: neither consumed.  Case 2: exactly one consumed.  Case 3: both.
    """
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    meta, vals = _odds_rows(rec)
    hi, w, z = meta[:, 0], meta[:, 2], meta[:, 3]
    seen = rec.seen[hi]
    in_w = (seen >> w) & 1
    in_z = (seen >> z) & 1
    keys = np.stack([w, z, in_w, in_z], axis=1)
    parts = [
        _grouped_odds("intertemporal_iia", rec, keys, (in_w == 0) & (in_z == 0), meta, vals, tol, 1),
        _grouped_odds("intertemporal_iia", rec, keys, (in_w + in_z) == 1, meta, vals, tol, 2),
        _grouped_odds("intertemporal_iia", rec, keys, (in_w == 1) & (in_z == 1), meta, vals, tol, 3),
    ]
    return _merge("intertemporal_iia", parts, tol)


def _streak_order(ccs: ConditionalChoiceSystem, name: str, sign: int, tolerance) -> AxiomReport:
    """Compare ``p(x, A | run n)`` with ``p(x, A | run n+1)`` for the last choice ``x``.

    Run 0 is the empty history.  ``sign = +1`` requires a weak increase.
    """
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    u = ccs.universe
    groups: dict = {}
    for hi, blocks in enumerate(rec.blocks):
        r = int(rec.run[hi])
        for b, row in blocks.items():
            for x in lattice.members(b):
                if r == 0 or rec.last[hi] == x:
                    groups.setdefault((x, b, r), []).append((float(row[x]), hi))
    best, count = None, 0
    for (x, b, r) in sorted(groups, key=lambda k: (k[2], lattice.canonical_rank(u.size)[k[1]], k[0])):
        nxt = groups.get((x, b, r + 1))
        if not nxt:
            continue
        for lo_val, lo_h in groups[(x, b, r)]:
            for hi_val, hi_h in nxt:
                if sign * (hi_val - lo_val) < -tol:
                    count += 1
                    if best is None:
                        cell = {"shorter": _hist_labels(u, rec.histories[lo_h]),
                                "longer": _hist_labels(u, rec.histories[hi_h]),
                                "menu": u.menu_labels(b), "choice": u.alternatives[x]}
                        best = (cell, lo_val, hi_val)
    return AxiomReport(name, best is None, () if best is None else (best,), count, tol)


def check_habit_formation(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Extending a streak of ``x`` never lowers the probability of ``x``."""
    return _streak_order(ccs, "habit_formation", +1, tolerance)


def check_preference_for_variety(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Extending a streak of ``x`` never raises the probability of ``x``."""
    return _streak_order(ccs, "preference_for_variety", -1, tolerance)


def check_conditional_csi(ccs: ConditionalChoiceSystem, tolerance: float | None = None) -> AxiomReport:
    """Blocks after the same choices agree whatever menus those choices came from."""
    tol = _tol(ccs, tolerance)
    rec = _records(ccs)
    u = ccs.universe
    ref: dict = {}
    best, count = None, 0
    for hi, (h, blocks) in enumerate(zip(rec.histories, rec.blocks)):
        if not h[0]:
            continue
        for b, row in blocks.items():
            key = (h[0], b)
            if key not in ref:
                ref[key] = hi
                continue
            base = rec.blocks[ref[key]][b]
            for y in lattice.members(b):
                if abs(float(row[y]) - float(base[y])) > tol:
                    count += 1
                    if best is None:
                        cell = {"history": _hist_labels(u, h),
                                "reference_history": _hist_labels(u, rec.histories[ref[key]]),
                                "menu": u.menu_labels(b), "choice": u.alternatives[y]}
                        best = (cell, float(row[y]), float(base[y]))
    return AxiomReport("choice_set_independence", best is None, () if best is None else (best,), count, tol)


def _as_ccs(data, tolerance) -> tuple[ConditionalChoiceSystem, AxiomReport]:
    if isinstance(data, RandomJointChoiceRule):
        report = check_marginality(data, tolerance)
        if not report.holds:
            return None, report
        return to_conditional(data, tolerance), report
    return data, AxiomReport("marginality", True, (), 0, _tol(data, tolerance))


def check_parametric_axioms(data, tolerance: float | None = None) -> dict[str, AxiomReport]:
    """Every parametric axiom, keyed by name.

    ``data`` is a conditional choice system (marginal by construction) or a
    rule, which is first checked for marginality.  When marginality fails the
    conditional axioms are undefined and only that report is returned.
    """
    ccs, marg = _as_ccs(data, tolerance)
    out = {"marginality": marg}
    if ccs is None:
        return out
    out["choice_set_independence"] = check_conditional_csi(ccs, tolerance)
    out["positivity"] = check_positivity(ccs, tolerance)
    out["far_history_independence"] = check_far_history_independence(ccs, tolerance)
    out["fhi_iia"] = check_fhi_iia(ccs, tolerance)
    out["habit_formation"] = check_habit_formation(ccs, tolerance)
    out["preference_for_variety"] = check_preference_for_variety(ccs, tolerance)
    out["intertemporal_iia"] = check_intertemporal_iia(ccs, tolerance)
    return out


_CD_AXIOMS = ("marginality", "choice_set_independence", "positivity", "far_history_independence", "fhi_iia")
_LEARNING_AXIOMS = ("marginality", "choice_set_independence", "positivity", "intertemporal_iia")


def consumption_dependent_verdict(reports: Mapping[str, AxiomReport]) -> Verdict:
    sub = {k: reports[k] for k in _CD_AXIOMS if k in reports}
    return Verdict("consumption_dependent_logit", len(sub) == len(_CD_AXIOMS) and all(r.holds for r in sub.values()), sub)


def learning_verdict(reports: Mapping[str, AxiomReport]) -> Verdict:
    sub = {k: reports[k] for k in _LEARNING_AXIOMS if k in reports}
    return Verdict("learning_logit", len(sub) == len(_LEARNING_AXIOMS) and all(r.holds for r in sub.values()), sub)


def classify(data, tolerance: float | None = None) -> dict[str, bool]:
    """Two-period model membership flags.

    Habit formation (variety) additionally requires ``p(x, X | x, X) >= p(x, X)``
    (``<=``) for every ``x`` at the full menu ``X``.
    """
    ccs, _ = _as_ccs(data, tolerance)
    periods = data.periods
    if periods != 2:
        raise ValueError("classify needs exactly two periods")
    reports = check_parametric_axioms(data, tolerance)
    cd = consumption_dependent_verdict(reports).holds
    learn = learning_verdict(reports).holds
    habit = variety = False
    if cd:
        tol = _tol(ccs, tolerance)
        u = ccs.universe
        X = u.full
        base = _block_at(ccs, (), X)
        diffs = [float(_block_at(ccs, (x,), X)[x]) - float(base[x]) for x in lattice.members(X)]
        habit = all(d >= -tol for d in diffs)
        variety = all(d <= tol for d in diffs)
    return {"consumption_dependent": cd, "learning": learn, "habit_formation": habit, "variety": variety}
