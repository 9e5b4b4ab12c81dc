from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdrum import (
    Universe,
    check_all,
    check_cdrum,
    check_choice_set_independence,
    check_complete_monotonicity,
    check_increasing_differences,
    check_marginality,
    check_recursivity,
    check_regularity,
    check_si_cdrum,
    validate_rjcr,
)
from cdrum.simulate import perturb, random_mixture

ABC = ("a", "b", "c")


def attraction_rule():
    """Adding ``c`` raises the share of ``a``."""
    f = Fraction
    raw = {
        (ABC,): {("a",): f(6, 10), ("b",): f(3, 10), ("c",): f(1, 10)},
        (("a", "b"),): {("a",): f(4, 10), ("b",): f(6, 10)},
        (("a", "c"),): {("a",): f(1, 2), ("c",): f(1, 2)},
        (("b", "c"),): {("b",): f(1, 2), ("c",): f(1, 2)},
        (("a",),): {("a",): f(1)},
        (("b",),): {("b",): f(1)},
        (("c",),): {("c",): f(1)},
    }
    return validate_rjcr(raw, Universe(ABC), 1)


@pytest.fixture(scope="module")
def shifted():
    p, _ = random_mixture(Universe(ABC), 2, 3, seed=1)
    return perturb(p, 0.2, seed=1)


class TestCompleteMonotonicity:
    def test_example2_holds(self, fixtures):
        assert check_complete_monotonicity(fixtures["example2"]).holds

    def test_example1_fails_negative(self, fixtures):
        r = check_complete_monotonicity(fixtures["example1"])
        assert not r.holds and r.n_violations >= 1
        _, lhs, _ = r.witnesses[0]
        assert lhs < 0

    @given(st.integers(0, 10_000), st.integers(1, 6))
    def test_mixtures_hold(self, seed, k):
        p, _ = random_mixture(Universe(ABC), 2, k, seed=seed)
        assert check_complete_monotonicity(p).holds


class TestMarginality:
    def test_example3_holds(self, fixtures):
        assert check_marginality(fixtures["example3"]).holds

    def test_deterministic_holds(self):
        p, _ = random_mixture(Universe(ABC), 2, 1, seed=3)
        assert check_marginality(p).holds

    def test_shift_detected_with_witness(self, shifted):
        r = check_marginality(shifted)
        assert not r.holds
        assert r.witnesses and r.n_violations >= 1
        assert r.to_dict()["witnesses"][0]["cell"]


class TestRecursivity:
    def test_example2_holds(self, fixtures):
        assert check_recursivity(fixtures["example2"]).holds

    def test_single_period_vacuous(self):
        assert check_recursivity(attraction_rule()).holds

    def test_fails_alongside_marginality(self, shifted):
        assert not check_recursivity(shifted).holds
        assert not check_marginality(shifted).holds


class TestIncreasingDifferences:
    def test_example1_fails(self, fixtures):
        r = check_increasing_differences(fixtures["example1"])
        assert not r.holds

    @given(st.integers(0, 10_000), st.integers(1, 5))
    def test_mixtures_hold(self, seed, k):
        p, _ = random_mixture(Universe(ABC), 2, k, seed=seed)
        assert check_increasing_differences(p).holds

    def test_constant_rule_holds(self):
        x = ("x",)
        p = validate_rjcr({(x, x): {("x", "x"): Fraction(1)}}, Universe(x), 2)
        assert check_increasing_differences(p).holds


class TestRegularity:
    def test_example2_holds(self, fixtures):
        assert check_regularity(fixtures["example2"]).holds

    def test_deterministic_holds(self):
        p, _ = random_mixture(Universe(ABC), 2, 1, seed=8)
        assert check_regularity(p).holds

    def test_attraction_effect_fails(self):
        r = check_regularity(attraction_rule())
        assert not r.holds
        _, lhs, rhs = r.witnesses[0]
        assert lhs != rhs


class TestChoiceSetIndependence:
    def test_example4_fails(self, fixtures):
        assert not check_choice_set_independence(fixtures["example4"]).holds

    def test_example2_holds(self, fixtures):
        assert check_choice_set_independence(fixtures["example2"]).holds

    def test_singleton_first_menus_vacuous(self):
        raw = {
            (("x",), ("x", "y")): {("x", "x"): Fraction(1, 3), ("x", "y"): Fraction(2, 3)},
            (("y",), ("x", "y")): {("y", "x"): Fraction(1)},
        }
        p = validate_rjcr(raw, Universe(("x", "y")), 2)
        assert check_choice_set_independence(p).holds


class TestVerdicts:
    def test_example4(self, fixtures):
        assert check_cdrum(fixtures["example4"]).holds
        assert not check_si_cdrum(fixtures["example4"]).holds

    def test_example2(self, fixtures):
        assert check_cdrum(fixtures["example2"]).holds
        assert check_si_cdrum(fixtures["example2"]).holds

    def test_example1(self, fixtures):
        assert not check_cdrum(fixtures["example1"]).holds
        assert not check_si_cdrum(fixtures["example1"]).holds

    def test_float_tolerance_absorbs_rounding(self, fixtures):
        p = fixtures["example3"].to_float()
        assert check_cdrum(p).holds
        assert check_cdrum(p, tolerance=1e-9).reports["marginality"].tolerance == 1e-9

    def test_check_all_names(self, fixtures):
        got = check_all(fixtures["example2"])
        assert set(got) == {"complete_monotonicity", "recursivity", "marginality", "regularity",
                            "increasing_differences", "choice_set_independence"}
        limited = fixtures["example2"].restrict(fixtures["example2"].domain.without((0b11, 0b01)))
        assert "complete_monotonicity" not in check_all(limited)

    def test_verdict_serialises(self, fixtures):
        d = check_si_cdrum(fixtures["example4"]).to_dict()
        assert d["model"] == "SI-CDRUM" and d["holds"] is False
        assert d["reports"]["choice_set_independence"]["n_violations"] > 0
