import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrum import (
    RNG_ALGORITHM,
    ObservationDomain,
    Universe,
    check_cdrum,
    make_rng,
    perturb,
    random_mixture,
    sample_choices,
    test_cdrum_facet,
    test_cdrum_vertex,
)
from cdrum.fixtures import habit_correlation_rep
from cdrum.parametric import HabitLogitParams, eval_habit_logit

ABC = Universe(("a", "b", "c"))


def _block_sums(p):
    out = []
    for menus in p.domain.observed:
        cells = itertools.product(*(range(p.n) for _ in menus))
        out.append(sum(p.table[menus + c] for c in cells))
    return out


def test_rng_algorithm_pinned():
    assert RNG_ALGORITHM == "Philox4x64-10"
    assert isinstance(make_rng(1).bit_generator, np.random.Philox)
    assert make_rng(5, 2, 3).integers(1 << 30) == make_rng(5, 2, 3).integers(1 << 30)
    assert make_rng(5, 2, 3).integers(1 << 30) != make_rng(5, 2, 4).integers(1 << 30)


class TestMixtures:
    def test_single_component_deterministic(self):
        p, mix = random_mixture(ABC, 2, 1, seed=4)
        assert mix.weights == (Fraction(1),)
        assert set(p.table[p.observed].reshape(-1)) <= {0, 1}

    def test_reproducible(self):
        a, ma = random_mixture(ABC, 2, 3, seed=11)
        b, mb = random_mixture(ABC, 2, 3, seed=11)
        assert a == b and ma == mb

    def test_zero_components(self):
        with pytest.raises(ValueError):
            random_mixture(ABC, 2, 0)

    @settings(max_examples=12)
    @given(st.integers(0, 10_000), st.integers(1, 6))
    def test_consistent(self, seed, k):
        p, mix = random_mixture(ABC, 2, k, seed=seed, numeric="float")
        assert sum(mix.weights) == pytest.approx(1.0)
        assert check_cdrum(p).holds
        assert test_cdrum_vertex(p).feasible and test_cdrum_facet(p).feasible

    def test_certificate_serialises(self):
        _, mix = random_mixture(ABC, 2, 2, seed=0)
        d = mix.to_dict(ABC)
        assert len(d["components"]) == 2 and "after" in d["components"][0]


class TestPerturb:
    def test_zero_is_identity(self, fixtures):
        p = fixtures["example2"]
        assert perturb(p, 0.0) is p

    def test_example2_breaks(self, fixtures):
        assert not check_cdrum(perturb(fixtures["example2"], 0.2, seed=0)).holds

    @given(st.integers(0, 10_000))
    def test_normalisation_kept(self, seed):
        p, _ = random_mixture(ABC, 2, 3, seed=seed)
        q = perturb(p, 0.2, seed=seed)
        assert all(s == 1 for s in _block_sums(q))
        assert all(v >= 0 for v in q.table[q.observed].reshape(-1))


class TestSampling:
    def test_one_agent_one_hot(self, fixtures):
        q = sample_choices(habit_correlation_rep(), n_agents=1, seed=3)
        assert set(np.unique(q.table[q.observed])) <= {0.0, 1.0}
        assert all(s == 1.0 for s in _block_sums(q))

    def test_reproducible(self):
        a = sample_choices(habit_correlation_rep(), n_agents=500, seed=7)
        b = sample_choices(habit_correlation_rep(), n_agents=500, seed=7)
        c = sample_choices(habit_correlation_rep(), n_agents=500, seed=8)
        assert a == b and a != c

    def test_rational_counts_sum_exactly(self):
        q = sample_choices(habit_correlation_rep(), n_agents=37, seed=1, numeric="rational")
        assert all(s == 1 for s in _block_sums(q))

    def test_million_agents_close(self, fixtures):
        q = sample_choices(habit_correlation_rep(), n_agents=1_000_000, seed=0)
        assert q.max_gap(fixtures["example2"]) <= 0.005

    def test_logit_source(self):
        params = HabitLogitParams({"o": 0.0, "x": 0.5}, {"x": (1.0,)})
        q = sample_choices(params, n_agents=200_000, seed=2, periods=2)
        ccs = eval_habit_logit(params)
        full = (0b11, 0b11)
        joint_xx = q.table[full + (1, 1)]
        assert joint_xx == pytest.approx(ccs.prob("x", ("o", "x")) * ccs.prob("x", ("o", "x"), (["x"], [("o", "x")])),
                                         abs=0.005)

    def test_domain_respected(self):
        dom = ObservationDomain.from_sequences(2, 2, [(0b11, 0b01)])
        q = sample_choices(habit_correlation_rep(), domain=dom, n_agents=50, seed=0)
        assert len(q.domain) == 1
