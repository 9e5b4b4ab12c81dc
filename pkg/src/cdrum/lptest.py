"""Two-period feasibility tests in vertex form (matrix E) and facet form (matrix F).

Columns of both systems are cells ``(x, y, A, B)`` with ``(x, y)`` in
``A x B``; E keeps only observed products while F keeps the full lattice
(its unknowns are Möbius values).  Feasibility of ``M z = b, z >= 0`` is
decided by the weighted NNLS statistic against a fixed threshold, or, in
exact mode, by a vertex LP solution re-verified in rational arithmetic.

Two row conventions exist for E:

``"extreme"``
    one row per deterministic rule in ``L(X)^{n+1}`` (first order plus one
    second-period order per first choice).  Every row chooses exactly once per
    menu product, so a feasible ``r`` sums to one.
``"per-choice"``
    one row per ``(order, x, order')`` with entries only at products where
    ``x`` is the first-period choice, ``n (n!)^2`` rows in all.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
from scipy import sparse

from . import kernels, lattice
from .core import RATIONAL, ObservationDomain, RandomJointChoiceRule, Universe
from .errors import UniverseTooLarge, ValidationError
from .qp import solve_weighted

THRESHOLD = 1e-8
EXTREME_CAP = 3
PER_CHOICE_CAP = 4


def matrix_sizes(n: int) -> tuple[int, int]:
    """Closed-form row counts ``(n (n!)^2, (n 2^(n-1))^2 + n 2^(2n-1) - n 2^n)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    e_rows = n * math.factorial(n) ** 2
    f_rows = (n << (n - 1)) ** 2 + (n << (2 * n - 1)) - (n << n)
    return e_rows, f_rows


# ---------------------------------------------------------------------------
# columns


@dataclass(frozen=True, eq=False)
class ColumnIndex:
    """Cell ``(A, B, x, y)`` to column id (-1 where absent)."""

    n: int
    blocks: np.ndarray          # (k, 2) observed (A, B) in canonical order
    index: np.ndarray           # (2^n, 2^n, n, n)
    cells: tuple                # column id -> (A, B, x, y)

    @property
    def size(self) -> int:
        return len(self.cells)


def column_index(n: int, blocks) -> ColumnIndex:
    m = 1 << n
    index = np.full((m, m, n, n), -1, dtype=np.int64)
    cells = []
    for a, b in blocks:
        for x in lattice.members(a):
            for y in lattice.members(b):
                index[a, b, x, y] = len(cells)
                cells.append((a, b, x, y))
    return ColumnIndex(n, np.array(blocks, dtype=np.int64).reshape(-1, 2), index, tuple(cells))


def _blocks(domain: ObservationDomain) -> list[tuple[int, int]]:
    if domain.periods != 2:
        raise ValidationError("the linear programming tests are two-period only")
    return list(domain.observed)


# ---------------------------------------------------------------------------
# vertex form


@dataclass(frozen=True, eq=False)
class VertexMatrix:
    matrix: np.ndarray          # rows x columns, uint8
    columns: ColumnIndex
    convention: str
    rows_before_dedup: int

    @property
    def shape(self):
        return self.matrix.shape


def _dedup(mat: np.ndarray) -> np.ndarray:
    _, first = np.unique(mat, axis=0, return_index=True)
    return mat[np.sort(first)]


def build_E(universe: Universe, domain: ObservationDomain | None = None, convention: str = "extreme",
            dedup: bool = False, cap: int | None = None) -> VertexMatrix:
    """Vertex matrix with one column per observed cell."""
    n = universe.size
    domain = domain or ObservationDomain.full(n, 2)
    if cap is None:
        cap = EXTREME_CAP if convention == "extreme" else PER_CHOICE_CAP
    if n > cap:
        raise UniverseTooLarge(f"E with the {convention} convention is capped at |X| = {cap}")
    cols = column_index(n, _blocks(domain))
    orders = lattice.order_array(n)
    k = orders.shape[0]
    ch = kernels.choice_table(orders, n)
    if convention == "extreme":
        combos = np.array(list(itertools.product(range(k), repeat=n + 1)), dtype=np.int64).reshape(-1, n + 1)
        ids = kernels.extreme_columns(ch, combos[:, 0], combos[:, 1:], cols.blocks, cols.index)
    elif convention == "per-choice":
        combos = np.array(list(itertools.product(range(k), range(n), range(k))), dtype=np.int64)
        ids = kernels.split_columns(ch, combos[:, 0], combos[:, 1], combos[:, 2], cols.blocks, cols.index)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    mat = np.zeros((ids.shape[0], cols.size), dtype=np.uint8)
    r, c = np.nonzero(ids >= 0)
    mat[r, ids[r, c]] = 1
    before = mat.shape[0]
    if dedup:
        mat = _dedup(mat)
    return VertexMatrix(mat, cols, convention, before)


# ---------------------------------------------------------------------------
# facet form


@dataclass(frozen=True, eq=False)
class FacetSystem:
    matrix: Any                 # scipy.sparse.csr_matrix
    rhs: np.ndarray             # object array (exact) or float
    columns: ColumnIndex
    groups: dict = field(default_factory=dict)   # group name -> (start, stop)
    variant: str = "limited"

    @property
    def shape(self):
        return self.matrix.shape


def build_F(universe: Universe, domain: ObservationDomain | None = None, p: RandomJointChoiceRule | None = None,
            variant: str = "limited") -> FacetSystem:
    """Facet system over full-lattice Möbius cells.

    Row groups, in order: consistency for observed cells, recursivity for every
    ``x in A`` and nonempty ``B`` strictly inside ``X``, flow balance at
    nonempty ``A`` strictly inside ``X`` with no observed ``A x B``, and the
    unit-mass row at ``X`` when no ``X x B`` is observed.  ``variant="full"``
    keeps the last two groups at every menu.
    """
    if variant not in ("limited", "full"):
        raise ValueError(f"unknown variant {variant!r}")
    n = universe.size
    domain = domain or (p.domain if p is not None else ObservationDomain.full(n, 2))
    observed = _blocks(domain)
    menus = lattice.canonical_menus(n)
    full = (1 << n) - 1
    cols = column_index(n, [(a, b) for a in menus for b in menus])
    idx = cols.index
    rows, cidx, vals, rhs = [], [], [], []
    groups = {}

    def emit(entries, value):
        r = len(rhs)
        for c, v in entries:
            rows.append(r)
            cidx.append(c)
            vals.append(v)
        rhs.append(value)

    start = 0
    for a, b in observed:
        sup_a = list(lattice.supersets(a, n))
        sup_b = list(lattice.supersets(b, n))
        for x in lattice.members(a):
            for y in lattice.members(b):
                entries = [(idx[a2, b2, x, y], 1) for a2 in sup_a for b2 in sup_b]
                value = p.table[a, b, x, y] if p is not None else 0
                emit(entries, value)
    groups["consistency"] = (start, len(rhs))
    start = len(rhs)
    for a in menus:
        for x in lattice.members(a):
            for b in menus:
                if b == full:
                    continue
                entries = [(idx[a, b, x, y], 1) for y in lattice.members(b)]
                entries += [(idx[a, b | (1 << z), x, z], -1) for z in range(n) if not (b >> z) & 1]
                emit(entries, 0)
    groups["recursivity"] = (start, len(rhs))
    start = len(rhs)
    seen_first = {a for a, _ in observed}
    for a in menus:
        if a == full or (variant == "limited" and a in seen_first):
            continue
        entries = [(idx[a, full, x, y], 1) for x in lattice.members(a) for y in range(n)]
        entries += [(idx[a | (1 << z), full, z, y], -1) for z in range(n) if not (a >> z) & 1 for y in range(n)]
        emit(entries, 0)
    groups["flow_balance"] = (start, len(rhs))
    start = len(rhs)
    if variant == "full" or full not in seen_first:
        emit([(idx[full, full, x, y], 1) for x in range(n) for y in range(n)], 1)
    groups["unit_mass"] = (start, len(rhs))
    mat = sparse.csr_matrix((np.array(vals, dtype=np.float64), (np.array(rows), np.array(cidx))),
                            shape=(len(rhs), cols.size))
    exact = p is not None and p.numeric == RATIONAL
    rhs_arr = np.array([Fraction(v) for v in rhs] + [None], dtype=object)[:-1] if exact \
        else np.array([float(v) for v in rhs], dtype=np.float64)
    return FacetSystem(mat, rhs_arr, cols, groups, variant)


# ---------------------------------------------------------------------------
# solving


@dataclass(frozen=True, eq=False)
class QuadraticTestResult:
    form: str
    statistic: Any
    minimizer: np.ndarray
    feasible: bool
    threshold: float
    omega: str
    kkt_residual: float
    rows: int
    columns: int
    method: str = "nnls"
    exact_certified: bool = False

    def to_dict(self) -> dict[str, Any]:
        stat = str(self.statistic) if isinstance(self.statistic, Fraction) else float(self.statistic)
        return {"form": self.form, "statistic": stat, "feasible": self.feasible,
                "threshold": self.threshold, "omega": self.omega,
                "kkt_residual": float(self.kkt_residual), "rows": self.rows, "columns": self.columns,
                "method": self.method, "exact_certified": self.exact_certified}


def _omega_name(omega) -> str:
    if omega is None:
        return "identity"
    return "diagonal" if np.ndim(omega) == 1 else "matrix"


def _row_scale(M: np.ndarray, b: np.ndarray):
    scale = np.abs(M).max(axis=1)
    scale[scale == 0] = 1.0
    return M / scale[:, None], b / scale


def solve_cone_feasibility(M, b, omega=None, threshold: float = THRESHOLD, form: str = "custom") -> QuadraticTestResult:
    """``min_{z >= 0} (M z - b)^T Omega (M z - b)`` with rows scaled to unit max-norm."""
    M = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    Ms, bs = _row_scale(M.astype(np.float64), b)
    res = solve_weighted(Ms, bs, omega)
    return QuadraticTestResult(form, res.objective, res.x, res.objective <= threshold, threshold,
                               _omega_name(omega), res.kkt_residual, M.shape[0], M.shape[1])


def _exact_solve(M: np.ndarray, b: np.ndarray, support: np.ndarray):
    """Exact solution of ``M[:, S] z = b`` on a column support, or ``None`` if inconsistent."""
    cols = [int(c) for c in support]
    A = [[Fraction(int(M[i, c])) for c in cols] + [b[i]] for i in range(M.shape[0])]
    m, k = len(A), len(cols)
    pivots = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [v * inv for v in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [vi - f * vr for vi, vr in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if any(A[i][k] != 0 for i in range(r, m)):
        return None
    z = [Fraction(0)] * k
    for i, c in enumerate(pivots):
        z[c] = A[i][k]
    return z


def _exact_feasibility(M: np.ndarray, b_exact: np.ndarray, form: str, omega) -> QuadraticTestResult | None:
    """Vertex LP via HiGHS, then a rational re-solve on its support."""
    from scipy.optimize import linprog

    bf = np.array([float(v) for v in b_exact])
    lp = linprog(np.zeros(M.shape[1]), A_eq=M, b_eq=bf, bounds=(0, None), method="highs")
    if lp.status != 0:
        return None
    support = np.where(lp.x > 1e-12)[0]
    z = _exact_solve(M, b_exact, support)
    if z is None or any(v < 0 for v in z):
        return None
    x = np.zeros(M.shape[1])
    x[support] = [float(v) for v in z]
    return QuadraticTestResult(form, Fraction(0), x, True, THRESHOLD, _omega_name(omega), 0.0,
                               M.shape[0], M.shape[1], "exact-lp", True)


def test_cdrum_vertex(p: RandomJointChoiceRule, domain: ObservationDomain | None = None, omega=None,
                      convention: str = "extreme", exact: bool | None = None,
                      threshold: float = THRESHOLD) -> QuadraticTestResult:
    """Is the observed rule a nonnegative combination of extreme choice patterns?"""
    domain = domain or p.domain
    E = build_E(p.universe, domain, convention, dedup=True)
    b = np.array([p.table[a, bb, x, y] for a, bb, x, y in E.columns.cells] + [None], dtype=object)[:-1]
    M = E.matrix.T.astype(np.float64)
    if exact if exact is not None else p.numeric == RATIONAL:
        got = _exact_feasibility(M, b, "vertex", omega)
        if got is not None:
            return got
    out = solve_cone_feasibility(M, b.astype(np.float64), omega, threshold, "vertex")
    return out


def test_cdrum_facet(p: RandomJointChoiceRule, domain: ObservationDomain | None = None, omega=None,
                     variant: str = "limited", exact: bool | None = None,
                     threshold: float = THRESHOLD) -> QuadraticTestResult:
    """Does a nonnegative Möbius table satisfy the facet system for the observed rule?"""
    domain = domain or p.domain
    F = build_F(p.universe, domain, p, variant)
    M = F.matrix.toarray()
    form = "facet" if variant == "limited" else "facet-full"
    if exact if exact is not None else p.numeric == RATIONAL:
        got = _exact_feasibility(M, F.rhs, form, omega)
        if got is not None:
            return got
    return solve_cone_feasibility(M, F.rhs.astype(np.float64), omega, threshold, form)


def test_cdrum(p: RandomJointChoiceRule, form: str = "facet", **kwargs) -> QuadraticTestResult:
    if form == "vertex":
        return test_cdrum_vertex(p, **kwargs)
    if form == "facet":
        return test_cdrum_facet(p, **kwargs)
    if form == "facet-full":
        return test_cdrum_facet(p, variant="full", **kwargs)
    raise ValueError(f"unknown form {form!r}")


# ---------------------------------------------------------------------------
# agreement study


def oracle_agreement(n_trials: int, seed: int = 0, universe: Universe | None = None,
                     epsilon: float = 0.2) -> dict[str, Any]:
    """Run vertex, facet and full-facet tests plus ``check_cdrum`` on seeded instances.

    Even trials are random mixtures; odd trials perturb a mixture by ``epsilon``.
    All work is in float mode.
    """
    from .axioms import check_cdrum
    from .simulate import make_rng, perturb, random_mixture

    universe = universe or Universe(("a", "b", "c"))
    if universe.size > 3:
        raise UniverseTooLarge("the agreement study is limited to |X| <= 3")
    trials = []
    agree = 0
    max_sum_dev = 0.0
    for i in range(n_trials):
        k = int(make_rng(seed, 3, i).integers(1, 7))
        p, _ = random_mixture(universe, 2, k, seed=seed * 100003 + i, numeric="float")
        kind = "mixture"
        if i % 2:
            p = perturb(p, epsilon, seed=seed * 100003 + i)
            kind = "perturbed"
        v = test_cdrum_vertex(p)
        f = test_cdrum_facet(p)
        g = test_cdrum_facet(p, variant="full")
        c = check_cdrum(p).holds
        verdicts = [v.feasible, f.feasible, g.feasible, c]
        ok = len(set(verdicts)) == 1
        agree += ok
        if v.feasible:
            max_sum_dev = max(max_sum_dev, abs(float(v.minimizer.sum()) - 1.0))
        trials.append({"trial": i, "kind": kind, "components": k, "vertex": v.feasible, "facet": f.feasible,
                       "facet_full": g.feasible, "axioms": c, "agree": ok,
                       "vertex_statistic": v.statistic, "facet_statistic": f.statistic,
                       "facet_full_statistic": g.statistic})
    return {"n_trials": n_trials, "seed": seed, "agreements": agree,
            "all_agree": agree == n_trials, "max_sum_r_deviation": max_sum_dev, "trials": trials}


# keep pytest from collecting the public test_* functions when imported into test modules
for _fn in (test_cdrum, test_cdrum_vertex, test_cdrum_facet):
    _fn.__test__ = False
