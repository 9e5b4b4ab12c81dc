"""Universe, menus, random joint choice rules and conditional choice systems.

A T-period rule is stored densely as an array indexed by
``[A_1, ..., A_T, x_1, ..., x_T]`` where each ``A_k`` is a menu bitmask
(index 0, the empty menu, is never observed) and each ``x_k`` an alternative
index.  Cells with ``x_k`` outside ``A_k`` are held at zero.  Exact data lives
in object arrays of :class:`fractions.Fraction`; float data in ``float64``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Mapping

import numpy as np

from . import lattice
from .errors import (
    ChoiceOutsideMenu,
    MarginalityViolated,
    NegativeProbability,
    NormalizationFailure,
    ValidationError,
)

RATIONAL = "rational"
FLOAT = "float"
FLOAT_TOL = 1e-9


def default_tolerance(numeric: str) -> float:
    return 0 if numeric == RATIONAL else FLOAT_TOL


def to_number(value: Any, numeric: str):
    """Coerce ``value`` (number or ``"a/b"`` / decimal string) into the numeric mode."""
    if numeric == RATIONAL:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, bool):
            raise ValidationError(f"not a probability: {value!r}")
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValidationError(f"not a finite number: {value!r}")
            return Fraction(repr(value))
        if isinstance(value, str):
            return Fraction(value.strip())
        raise ValidationError(f"not a number: {value!r}")
    if isinstance(value, str):
        s = value.strip()
        return float(Fraction(s)) if "/" in s else float(s)
    return float(value)


def format_number(value) -> str:
    """Canonical string form: ``"n/d"`` (or ``"n"``) for fractions, ``repr`` for floats."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def zeros(shape, numeric: str) -> np.ndarray:
    if numeric == RATIONAL:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=np.float64)


def as_numeric(arr: np.ndarray, numeric: str) -> np.ndarray:
    if numeric == RATIONAL:
        if arr.dtype == object:
            return arr
        out = np.empty(arr.shape, dtype=object)
        flat = out.reshape(-1)
        for i, v in enumerate(np.asarray(arr).reshape(-1)):
            flat[i] = Fraction(v) if isinstance(v, (int, np.integer)) else Fraction(repr(float(v)))
        return out
    return np.asarray(arr, dtype=np.float64)


@lru_cache(maxsize=None)
def valid_mask(n: int, periods: int) -> np.ndarray:
    """Boolean array marking cells whose every choice lies in its menu."""
    m = 1 << n
    inmenu = ((np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    out = np.ones((m,) * periods + (n,) * periods, dtype=bool)
    for k in range(periods):
        shape = [1] * (2 * periods)
        shape[k] = m
        shape[periods + k] = n
        out &= inmenu.reshape(shape)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Universe:
    """Ordered set of alternative labels; the order is the canonical tie-break."""

    alternatives: tuple[str, ...]

    def __post_init__(self):
        alts = tuple(str(a) for a in self.alternatives)
        object.__setattr__(self, "alternatives", alts)
        if not alts:
            raise ValidationError("universe needs at least one alternative")
        if len(set(alts)) != len(alts):
            raise ValidationError(f"duplicate labels in universe {alts}")

    @property
    def size(self) -> int:
        return len(self.alternatives)

    n = size

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if 0 <= label < self.size:
                return int(label)
            raise ValidationError(f"alternative index {label} out of range")
        try:
            return self.alternatives.index(str(label))
        except ValueError:
            raise ValidationError(f"unknown alternative {label!r}") from None

    def menu(self, labels) -> int:
        """Bitmask of a menu given as an iterable of labels (a bare string is one label)."""
        if isinstance(labels, (int, np.integer)) and not isinstance(labels, bool):
            mask = int(labels)
            if not 0 < mask <= self.full:
                raise ValidationError(f"menu mask {mask} out of range")
            return mask
        if isinstance(labels, str):
            labels = [labels]
        mask = 0
        for lab in labels:
            mask |= 1 << self.index(lab)
        if mask == 0:
            raise ValidationError("menus must be nonempty")
        return mask

    def menu_labels(self, mask: int) -> list[str]:
        return [self.alternatives[i] for i in lattice.members(mask)]

    def order_str(self, order) -> str:
        return ">".join(self.alternatives[i] for i in order)

    def parse_order(self, text: str) -> tuple[int, ...]:
        order = tuple(self.index(s.strip()) for s in text.split(">"))
        if sorted(order) != list(range(self.size)):
            raise ValidationError(f"{text!r} is not a linear order of {self.alternatives}")
        return order


@dataclass(frozen=True)
class ObservationDomain:
    """Observed menu sequences, kept in canonical order."""

    periods: int
    observed: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.observed:
            raise ValidationError("observation domain is empty")
        for seq in self.observed:
            if len(seq) != self.periods:
                raise ValidationError(f"menu sequence {seq} does not have length {self.periods}")

    @classmethod
    def full(cls, n: int, periods: int) -> "ObservationDomain":
        return cls(periods, tuple(lattice.canonical_sequences(n, periods)))

    @classmethod
    def from_sequences(cls, n: int, periods: int, seqs: Iterable[tuple[int, ...]]) -> "ObservationDomain":
        seqs = {tuple(int(m) for m in s) for s in seqs}
        rank = lattice.canonical_rank(n)
        ordered = sorted(seqs, key=lambda s: tuple(rank[m] for m in s))
        return cls(periods, tuple(ordered))

    def __contains__(self, menus) -> bool:
        return tuple(menus) in set(self.observed)

    def __len__(self) -> int:
        return len(self.observed)

    def without(self, menus) -> "ObservationDomain":
        menus = tuple(menus)
        return ObservationDomain(self.periods, tuple(s for s in self.observed if s != menus))

    def mask_array(self, n: int) -> np.ndarray:
        out = np.zeros((1 << n,) * self.periods, dtype=bool)
        for seq in self.observed:
            out[seq] = True
        return out


@dataclass(frozen=True, eq=False)
class RandomJointChoiceRule:
    """Validated joint choice frequencies over observed menu sequences."""

    universe: Universe
    periods: int
    table: np.ndarray
    observed: np.ndarray
    numeric: str = RATIONAL
    max_deviation: Any = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.universe.size

    @property
    def tolerance(self) -> float:
        return default_tolerance(self.numeric)

    @property
    def domain(self) -> ObservationDomain:
        seqs = [tuple(int(v) for v in idx) for idx in np.argwhere(self.observed)]
        return ObservationDomain.from_sequences(self.n, self.periods, seqs)

    @property
    def is_full(self) -> bool:
        return bool(self.observed.reshape(-1)[1:].sum() == ((1 << self.n) - 1) ** self.periods
                    and self.observed[(slice(1, None),) * self.periods].all())

    def menu_key(self, menus) -> tuple[int, ...]:
        menus = tuple(self.universe.menu(m) for m in menus)
        if len(menus) != self.periods:
            raise ValidationError(f"expected {self.periods} menus, got {len(menus)}")
        return menus

    def prob(self, choices, menus):
        menus = self.menu_key(menus)
        choices = tuple(self.universe.index(c) for c in choices)
        if not self.observed[menus]:
            raise KeyError(f"menu sequence {menus} is not observed")
        return self.table[menus + choices]

    def cells(self):
        """Yield ``(menus, choices, value)`` for every observed, feasible cell in canonical order."""
        n, T = self.n, self.periods
        for menus in self.domain.observed:
            for choices in itertools.product(*(lattice.members(m) for m in menus)):
                yield menus, choices, self.table[menus + choices]

    def restrict(self, domain: ObservationDomain) -> "RandomJointChoiceRule":
        keep = domain.mask_array(self.n) & self.observed
        table = self.table.copy()
        table[~keep] = Fraction(0) if self.numeric == RATIONAL else 0.0
        return RandomJointChoiceRule(self.universe, self.periods, table, keep, self.numeric,
                                     self.max_deviation)

    def to_float(self) -> "RandomJointChoiceRule":
        if self.numeric == FLOAT:
            return self
        table = np.array(self.table, dtype=np.float64)
        return RandomJointChoiceRule(self.universe, self.periods, table, self.observed.copy(), FLOAT,
                                     float(self.max_deviation))

    def to_rational(self) -> "RandomJointChoiceRule":
        if self.numeric == RATIONAL:
            return self
        table = as_numeric(self.table, RATIONAL)
        return rule_from_array(self.universe, self.periods, table, self.observed, RATIONAL)

    def max_gap(self, other: "RandomJointChoiceRule") -> float:
        """Sup-norm distance over cells observed in both rules."""
        both = self.observed & other.observed
        if (self.observed != other.observed).any():
            raise ValidationError("rules are observed on different domains")
        sel = np.broadcast_to(both.reshape(both.shape + (1,) * self.periods), self.table.shape)
        diff = np.abs(np.asarray(self.table[sel], dtype=object) - np.asarray(other.table[sel], dtype=object))
        return float(max(diff, default=0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RandomJointChoiceRule):
            return NotImplemented
        return (self.universe == other.universe and self.periods == other.periods
                and self.numeric == other.numeric
                and np.array_equal(self.observed, other.observed)
                and bool(np.all(self.table == other.table)))

    __hash__ = None


def _cell_label(universe: Universe, menus, choices) -> str:
    ms = ",".join("{" + ",".join(universe.menu_labels(m)) + "}" for m in menus)
    cs = ",".join(universe.alternatives[c] for c in choices)
    return f"p({cs} | {ms})"


def rule_from_array(universe: Universe, periods: int, table: np.ndarray, observed: np.ndarray,
                    numeric: str = RATIONAL, tolerance: float | None = None) -> RandomJointChoiceRule:
    """Validate a dense table; see :func:`validate_rjcr` for the checks performed."""
    n = universe.size
    tol = default_tolerance(numeric) if tolerance is None else tolerance
    table = as_numeric(np.asarray(table), numeric)
    observed = np.asarray(observed, dtype=bool)
    expected = (1 << n,) * periods + (n,) * periods
    if table.shape != expected or observed.shape != expected[:periods]:
        raise ValidationError(f"table shape {table.shape} does not match universe/periods {expected}")
    if observed[(0,) * 1 + (slice(None),) * (periods - 1)].any() or any(
            observed[(slice(None),) * k + (0,)].any() for k in range(periods)):
        raise ValidationError("empty menus cannot be observed")
    valid = valid_mask(n, periods)
    obs_cells = np.broadcast_to(observed.reshape(observed.shape + (1,) * periods), expected)
    bad = obs_cells & ~valid & (table != 0)
    if bad.any():
        idx = tuple(int(v) for v in np.argwhere(bad)[0])
        raise ChoiceOutsideMenu(_cell_label(universe, idx[:periods], idx[periods:]))
    neg = obs_cells & (table < 0)
    if neg.any():
        idx = tuple(int(v) for v in np.argwhere(neg)[0])
        raise NegativeProbability(_cell_label(universe, idx[:periods], idx[periods:]), table[idx])
    table = table.copy()
    table[~(obs_cells & valid)] = Fraction(0) if numeric == RATIONAL else 0.0
    sums = table.sum(axis=tuple(range(periods, 2 * periods)))
    worst = Fraction(0) if numeric == RATIONAL else 0.0
    rank = lattice.canonical_rank(n)
    seqs = sorted((tuple(int(v) for v in s) for s in np.argwhere(observed)),
                  key=lambda s: tuple(rank[m] for m in s))
    for seq in seqs:
        dev = abs(sums[seq] - 1)
        if dev > tol:
            raise NormalizationFailure([universe.menu_labels(m) for m in seq], dev)
        worst = max(worst, dev)
    return RandomJointChoiceRule(universe, periods, table, observed.copy(), numeric, worst)


def validate_rjcr(raw_table: Mapping, universe: Universe, periods: int, numeric: str | None = None,
                  tolerance: float | None = None) -> RandomJointChoiceRule:
    """Build a validated rule from ``{menu sequence: {choice sequence: probability}}``.

    Menus are iterables of labels; choices are labels.  Cells that are not
    listed default to zero.  ``numeric`` defaults to ``"rational"`` when every
    value is exact (int, ``Fraction`` or string) and ``"float"`` otherwise.
    """
    if numeric is None:
        exact = all(isinstance(v, (int, Fraction, str)) and not isinstance(v, bool)
                    for row in raw_table.values() for v in row.values())
        numeric = RATIONAL if exact else FLOAT
    n = universe.size
    shape = (1 << n,) * periods + (n,) * periods
    table = zeros(shape, numeric)
    observed = np.zeros(shape[:periods], dtype=bool)
    for menus, row in raw_table.items():
        key = tuple(universe.menu(m) for m in menus)
        if len(key) != periods:
            raise ValidationError(f"menu sequence {menus} does not have {periods} periods")
        observed[key] = True
        for choices, value in row.items():
            if isinstance(choices, str):
                choices = (choices,)
            idx = tuple(universe.index(c) for c in choices)
            if len(idx) != periods:
                raise ValidationError(f"choice sequence {choices} does not have {periods} periods")
            if any(not lattice.contains(m, c) for m, c in zip(key, idx)):
                raise ChoiceOutsideMenu(_cell_label(universe, key, idx))
            table[key + idx] = to_number(value, numeric)
    return rule_from_array(universe, periods, table, observed, numeric, tolerance)


def marginal_table(p: RandomJointChoiceRule, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Depth-``depth`` marginal rule read off canonical extensions of each menu prefix.

    The value for a prefix is taken from the canonically first observed
    extension (the full menu first).  It is only meaningful when marginality
    holds; no check is made here.
    """
    T, n = p.periods, p.n
    if not 1 <= depth <= T:
        raise ValueError(f"depth must lie in 1..{T}")
    if depth == T:
        return p.table, p.observed
    summed = p.table.sum(axis=tuple(range(T + depth, 2 * T)))
    m = 1 << n
    out = zeros((m,) * depth + (n,) * depth, p.numeric)
    seen = np.zeros((m,) * depth, dtype=bool)
    for suffix in lattice.canonical_sequences(n, T - depth):
        sl = (slice(None),) * depth + suffix
        fresh = p.observed[sl] & ~seen
        if fresh.any():
            block = summed[sl]
            out[fresh] = block[fresh]
            seen |= fresh
        if seen[(slice(1, None),) * depth].all():
            break
    return out, seen


@dataclass(frozen=True, eq=False)
class ConditionalChoiceSystem:
    """First-period choice rule plus history-conditional blocks.

    ``first[A][x]`` is p(x, A).  ``conditional[(choices, menus)][B][y]`` is the
    probability of choosing ``y`` from ``B`` after the history.  Histories with
    zero probability have no blocks and are listed in ``omitted``.
    """

    universe: Universe
    periods: int
    first: dict
    conditional: dict
    numeric: str = FLOAT
    omitted: tuple = field(default=())

    @property
    def tolerance(self) -> float:
        return default_tolerance(self.numeric)

    def block(self, history=None, menu=None) -> dict:
        if not history or not history[0]:
            return self.first[menu]
        return self.conditional[history][menu]

    def prob(self, y, menu, history=None):
        """``p(y, menu | history)``; ``history`` is ``(choices, menus)`` with labels or indices."""
        u = self.universe
        menu = u.menu(menu)
        y = u.index(y)
        if history is None or len(history[0]) == 0:
            return self.first[menu][y]
        choices = tuple(u.index(c) for c in history[0])
        menus = tuple(u.menu(m) for m in history[1])
        return self.conditional[(choices, menus)][menu][y]

    def histories(self, length: int | None = None):
        keys = sorted(self.conditional, key=lambda h: (len(h[0]), h[0], h[1]))
        return [h for h in keys if length is None or len(h[0]) == length]

    def max_gap(self, other: "ConditionalChoiceSystem") -> float:
        gap = 0.0
        for a, row in self.first.items():
            for x, v in row.items():
                gap = max(gap, abs(float(v) - float(other.first[a][x])))
        for h, blocks in self.conditional.items():
            for b, row in blocks.items():
                for y, v in row.items():
                    gap = max(gap, abs(float(v) - float(other.conditional[h][b][y])))
        if set(self.conditional) != set(other.conditional):
            return math.inf
        return gap


def to_conditional(p: RandomJointChoiceRule, tolerance: float | None = None) -> ConditionalChoiceSystem:
    """First-period marginals and history-conditional blocks of a rule satisfying marginality."""
    from .axioms import check_marginality

    tol = p.tolerance if tolerance is None else tolerance
    report = check_marginality(p, tolerance=tol)
    if not report.holds:
        raise MarginalityViolated(report)
    T, n = p.periods, p.n
    margins = [marginal_table(p, d) for d in range(1, T + 1)]
    m1, o1 = margins[0]
    first = {}
    for a in lattice.canonical_menus(n):
        if o1[a]:
            first[a] = {x: m1[a, x] for x in lattice.members(a)}
    conditional: dict = {}
    omitted = []
    for depth in range(1, T):
        prev, prev_obs = margins[depth - 1]
        nxt, nxt_obs = margins[depth]
        for menus in lattice.canonical_sequences(n, depth):
            if not prev_obs[menus]:
                continue
            nexts = [b for b in lattice.canonical_menus(n) if nxt_obs[menus + (b,)]]
            for choices in itertools.product(*(lattice.members(m) for m in menus)):
                denom = prev[menus + choices]
                if denom <= tol:
                    omitted.append((choices, menus))
                    continue
                blocks = {}
                for b in nexts:
                    blocks[b] = {y: nxt[menus + (b,) + choices + (y,)] / denom for y in lattice.members(b)}
                conditional[(choices, menus)] = blocks
    return ConditionalChoiceSystem(p.universe, T, first, conditional, p.numeric, tuple(omitted))


def from_conditional(ccs: ConditionalChoiceSystem, domain: ObservationDomain | None = None) -> RandomJointChoiceRule:
    """Multiply first-period and conditional blocks into a joint rule.

    The default domain is every menu sequence whose first menu has a
    first-period block and whose later menus occur among the conditional
    blocks of the matching depth.
    """
    u, T, n = ccs.universe, ccs.periods, ccs.universe.size
    if domain is None:
        per_period = [sorted(ccs.first, key=lambda m: lattice.canonical_rank(n)[m])]
        for depth in range(1, T):
            menus = set()
            for h, blocks in ccs.conditional.items():
                if len(h[0]) == depth:
                    menus.update(blocks)
            per_period.append(sorted(menus, key=lambda m: lattice.canonical_rank(n)[m]))
        domain = ObservationDomain.from_sequences(n, T, itertools.product(*per_period))
    shape = (1 << n,) * T + (n,) * T
    table = zeros(shape, ccs.numeric)
    observed = domain.mask_array(n)
    for menus in domain.observed:
        if menus[0] not in ccs.first:
            raise ValidationError(f"no first-period block for menu {u.menu_labels(menus[0])}")
        for choices in itertools.product(*(lattice.members(m) for m in menus)):
            value = ccs.first[menus[0]][choices[0]]
            for k in range(1, T):
                if value == 0:
                    break
                hist = (choices[:k], menus[:k])
                try:
                    value = value * ccs.conditional[hist][menus[k]][choices[k]]
                except KeyError:
                    raise ValidationError(
                        f"missing conditional block for history {hist} and menu {menus[k]}") from None
            table[menus + choices] = value
    return rule_from_array(u, T, table, observed, ccs.numeric)
