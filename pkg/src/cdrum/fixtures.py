"""Small two-period fixtures used by tests, the CLI and the shipped data files.

``waning_self_control`` is a hand-built rule on ``{x, c}``.  The others are
realised on the full menu lattice from explicit representations.
"""

from __future__ import annotations

from fractions import Fraction

from . import lattice
from .core import RATIONAL, RandomJointChoiceRule, Universe, validate_rjcr
from .recovery import CdrumRepresentation, PreferenceDistribution, TransitionFunction, evaluate_representation

HALF = Fraction(1, 2)


def waning_self_control() -> RandomJointChoiceRule:
    """Cake is resisted on first exposure only; violates complete monotonicity."""
    u = Universe(("x", "c"))
    raw = {
        ("x", "x"): {("x", "x"): 1},
        ("x", "xc"): {("x", "x"): 1},
        ("xc", "x"): {("x", "x"): 1},
        ("xc", "xc"): {("x", "c"): 1},
        ("x", "c"): {("x", "c"): 1},
        ("xc", "c"): {("x", "c"): 1},
        ("c", "c"): {("c", "c"): 1},
        ("c", "x"): {("c", "x"): 1},
        ("c", "xc"): {("c", "c"): 1},
    }
    table = {}
    for (a, b), cells in raw.items():
        table[(tuple(a), tuple(b))] = {k: Fraction(v) for k, v in cells.items()}
    return validate_rjcr(table, u, 2, RATIONAL)


def _kernel_for_orders(n: int, mapping) -> dict:
    """``(choice, cell) -> distribution`` for each order's chosen cells."""
    kernel = {}
    for order, dist in mapping.items():
        for x in order:
            kernel[((x,), (lattice.cell(order, x),))] = dist
    return kernel


def habit_correlation_rep() -> CdrumRepresentation:
    """Half the population ranks ``x`` first; whatever is chosen becomes the top choice next."""
    u = Universe(("x", "y"))
    n = 2
    nu = PreferenceDistribution.from_mapping(n, {(0, 1): HALF, (1, 0): HALF})
    kernel = {}
    for x, order in ((0, (0, 1)), (1, (1, 0))):
        for a in lattice.canonical_menus(n):
            if lattice.contains(a, x):
                kernel[((x,), (a,))] = PreferenceDistribution.point(order)
    return CdrumRepresentation(u, nu, (TransitionFunction(1, kernel, True, n, RATIONAL),), RATIONAL)


def habit_correlation() -> RandomJointChoiceRule:
    return evaluate_representation(habit_correlation_rep())


def state_correlation_rep() -> CdrumRepresentation:
    """Each agent keeps their first-period ranking (rain coat ``r`` versus tee-shirt ``t``)."""
    u = Universe(("r", "t"))
    n = 2
    nu = PreferenceDistribution.from_mapping(n, {(0, 1): HALF, (1, 0): HALF})
    kernel = _kernel_for_orders(n, {o: PreferenceDistribution.point(o) for o in ((0, 1), (1, 0))})
    return CdrumRepresentation(u, nu, (TransitionFunction(1, kernel, False, n, RATIONAL),), RATIONAL)


def state_correlation() -> RandomJointChoiceRule:
    return evaluate_representation(state_correlation_rep())


def state_dependence_rep() -> CdrumRepresentation:
    """``x > y > z`` and ``z > y > x`` each with weight 1/2; rankings persist."""
    u = Universe(("x", "y", "z"))
    n = 3
    fwd, back = (0, 1, 2), (2, 1, 0)
    nu = PreferenceDistribution.from_mapping(n, {fwd: HALF, back: HALF})
    kernel = _kernel_for_orders(n, {o: PreferenceDistribution.point(o) for o in (fwd, back)})
    return CdrumRepresentation(u, nu, (TransitionFunction(1, kernel, False, n, RATIONAL),), RATIONAL)


def state_dependence() -> RandomJointChoiceRule:
    """CDRUM but not state independent: after ``y`` the next choice depends on the first menu."""
    return evaluate_representation(state_dependence_rep())


FIXTURES = {
    "example1": waning_self_control,
    "example2": habit_correlation,
    "example3": state_correlation,
    "example4": state_dependence,
}
