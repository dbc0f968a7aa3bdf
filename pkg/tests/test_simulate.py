import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from agentrel import simulate as sim
from agentrel.chain import reliability_infinity
from agentrel.errors import DomainError
from agentrel.traces import dump_corpus


class TestChainCorpus:
    def test_deterministic(self, fig2):
        a = sim.chain_corpus(fig2, 300, 7, noise_sigma=0.2, censor_rate=0.1)
        b = sim.chain_corpus(fig2, 300, 7, noise_sigma=0.2, censor_rate=0.1)
        assert dump_corpus(a) == dump_corpus(b)
        assert dump_corpus(sim.chain_corpus(fig2, 300, 8)) != dump_corpus(sim.chain_corpus(fig2, 300, 7))

    def test_censor_rate(self, fig2):
        c = sim.chain_corpus(fig2, 5000, 1, censor_rate=0.2)
        assert abs(np.mean(np.array(c.outcomes) == "censored") - 0.2) < 0.02

    def test_noise_free_labels(self, fig2):
        c = sim.chain_corpus(fig2, 200, 2)
        assert {s.tool_type for t in c for s in t.steps} <= set(fig2.labels)
        assert all(t.steps[0].tool_type == "reason" for t in c)

    def test_flip_rate(self, fig2):
        # every trace starts in state 0, so flipped first steps are observable directly
        c = sim.chain_corpus(fig2, 20_000, 3, noise_sigma=0.3)
        rate = np.mean([t.steps[0].tool_type != "reason" for t in c])
        p = sim.flip_probability(0.3)
        assert abs(rate - p) < 3 * math.sqrt(p * (1 - p) / 20_000)

    def test_success_frequency(self, fig2):
        c = sim.chain_corpus(fig2, 20_000, 4)
        freq = np.mean(np.array(c.outcomes) == "success")
        assert abs(freq - 0.625) < 3 * math.sqrt(0.625 * 0.375 / 20_000)

    def test_bad_size(self, fig2):
        with pytest.raises(DomainError):
            sim.chain_corpus(fig2, 0, 0)


def test_flip_probability_formula():
    assert sim.flip_probability(0.0) == 0.0
    for s in (0.05, 0.08, 0.3, 1.0):
        assert sim.flip_probability(s) == pytest.approx(2 * stats.norm.cdf(-0.5 / s), rel=1e-12)


class TestArchetypes:
    def test_shipped_set(self):
        specs = sim.shipped_archetypes()
        assert [s.name for s in specs] == list(sim.MAST_STYLE + sim.CROSS_BENCHMARK)
        assert all(s.ground_truth.m in (5, 6) for s in specs if s.group == "mast_style")
        assert all(s.group == "cross_benchmark" for s in specs[7:])

    def test_round_trip(self):
        for spec in sim.shipped_archetypes():
            back = sim.ArchetypeSpec.from_dict(spec.to_dict())
            assert back.to_dict() == spec.to_dict()

    def test_validation(self, fig2):
        with pytest.raises(DomainError):
            sim.ArchetypeSpec("x", fig2.labels, fig2, noise_sigma=-1)
        with pytest.raises(DomainError):
            sim.ArchetypeSpec("x", fig2.labels, fig2, censor_rate=1.0)
        with pytest.raises(DomainError):
            sim.ArchetypeSpec("x", fig2.labels[:2], fig2)

    def test_unknown(self):
        with pytest.raises(KeyError):
            sim.get_archetype("nope")

    def test_tool_use_beats_pure_reasoning(self):
        r = {s.name: reliability_infinity(s.ground_truth) for s in sim.shipped_archetypes()}
        assert r["toolformer"] > r["react"]

    @pytest.mark.parametrize("name", sim.MAST_STYLE)
    def test_success_frequency_matches(self, name):
        spec = sim.get_archetype(name)
        c = sim.chain_corpus(spec.ground_truth, 10_000, 5, spec.state_labels)
        r = reliability_infinity(spec.ground_truth)
        assert abs(np.mean(np.array(c.outcomes) == "success") - r) <= 3 * math.sqrt(r * (1 - r) / 10_000)

    def test_archetype_corpus_uses_spec(self):
        spec = sim.get_archetype("babyagi")
        corpus, truth = sim.archetype_corpus(spec, 50, 0)
        assert truth is spec.ground_truth and len(corpus) == 50
        assert dump_corpus(corpus) == dump_corpus(sim.chain_corpus(truth, 50, 0, spec.state_labels, 0.08, 0.05,
                                                                   name="babyagi"))


class TestRandomChains:
    @given(st.integers(1, 12), st.integers(0, 10**6))
    def test_valid(self, m, seed):
        c = sim.random_substochastic_chain(m, seed)
        assert np.all(c.R_plus + c.R_minus >= sim.MIN_EXIT_MASS - 1e-12)
        assert np.allclose(c.Q.sum(axis=1) + c.R_plus + c.R_minus, 1.0)
        assert 0.0 <= reliability_infinity(c) <= 1.0

    def test_deterministic(self):
        a, b = sim.random_substochastic_chain(4, 9), sim.random_substochastic_chain(4, 9)
        assert np.array_equal(a.Q, b.Q)

    def test_bad_m(self):
        with pytest.raises(DomainError):
            sim.random_substochastic_chain(0, 0)


class TestSecondOrder:
    def test_kernels(self):
        KA, KB = sim.second_order_kernels(5, 0)
        assert np.allclose(KA.sum(axis=1), 1) and np.allclose(KB.sum(axis=1), 1)
        assert np.array_equal(KA[:, 5:], KB[:, 5:])
        assert np.abs(KA - KB).sum() > 0.5

    def test_corpus_shape(self):
        c = sim.second_order_corpus(5, 0.6, 100, 2)
        assert len(c) == 100 and set(c.outcomes) <= {"success", "failure"}
        assert dump_corpus(c) == dump_corpus(sim.second_order_corpus(5, 0.6, 100, 2))

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            sim.second_order_corpus(5, 1.5, 10, 0)
        with pytest.raises(DomainError):
            sim.second_order_kernels(1, 0)
