from types import SimpleNamespace

import numpy as np
import pytest
from scipy import stats

from agentrel import estimate as est
from agentrel import uncertainty as uq
from agentrel.chain import AgentMarkovChain, mtta, reliability_infinity
from agentrel.errors import DomainError
from agentrel.estimate import CountTable
from agentrel.simulate import archetype_corpus, chain_corpus, get_archetype
from agentrel.traces import Step, Trace, TraceCorpus

from conftest import FIG2_Q, FIG2_RM, FIG2_RP
from oracles import beta1b_quantile


def fig2_counts(scale):
    P = np.hstack([np.array(FIG2_Q), np.array(FIG2_RP)[:, None], np.array(FIG2_RM)[:, None]]) * scale
    return CountTable(P[:, :3], P[:, 3], P[:, 4], np.array([scale, 0.0, 0.0]))


def zero_counts(m):
    return CountTable(np.zeros((m, m)), np.zeros(m), np.zeros(m), np.zeros(m))


class TestPosterior:
    def test_flat_prior_is_beta_1_3(self):
        t = uq.posterior_intervals(zero_counts(2))
        assert np.allclose(t.lower, 0.0084038, atol=1e-4) and np.allclose(t.upper, 0.70760, atol=1e-4)
        assert t.lower[0, 0] == pytest.approx(beta1b_quantile(3, 0.025), abs=1e-12)
        assert t.upper[0, 0] == pytest.approx(beta1b_quantile(3, 0.975), abs=1e-12)
        assert np.allclose(t.point, 0.25)

    def test_against_scipy(self):
        c = fig2_counts(37)
        t = uq.posterior_intervals(c, alpha=0.5, level=0.9)
        conc = c.outcome_matrix + 0.5
        rest = conc.sum(axis=1, keepdims=True) - conc
        assert np.allclose(t.lower, stats.beta.ppf(0.05, conc, rest), atol=1e-8)
        assert np.allclose(t.upper, stats.beta.ppf(0.95, conc, rest), atol=1e-8)

    def test_widths_shrink_with_counts(self):
        widths = [uq.posterior_intervals(fig2_counts(s)).widths for s in (1, 10, 100)]
        positive = fig2_counts(1).outcome_matrix > 0
        assert np.all(widths[0][positive] > widths[1][positive])
        assert np.all(widths[1][positive] > widths[2][positive])

    def test_huge_counts_collapse(self):
        t = uq.posterior_intervals(fig2_counts(1e8))
        assert t.widths.max() < 1e-3
        assert np.abs(t.point - fig2_counts(1).outcome_matrix).max() < 1e-6

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            uq.posterior_intervals(zero_counts(2), level=1.0)
        with pytest.raises(DomainError):
            uq.posterior_intervals(zero_counts(2), alpha=0)

    def test_csv(self, tmp_path):
        t = uq.posterior_intervals(fig2_counts(10), labels=("reason", "tool_call", "verify"))
        text = t.to_csv(tmp_path / "ci.csv")
        lines = text.splitlines()
        assert lines[0] == "row,col,point,lower,upper,method"
        assert len(lines) == 1 + 3 * 5
        assert lines[1].startswith("reason,reason,") and lines[-1].startswith("verify,failure,")
        assert (tmp_path / "ci.csv").read_text() == text


class TestQueries:
    def test_named_queries(self, fig2):
        assert uq.query_function("rinf")(fig2) == pytest.approx(0.625)
        assert uq.query_function("mtta")(fig2) == pytest.approx(3.75)
        assert uq.query_function("rdc:3")(fig2) == pytest.approx(0.316)
        assert uq.query_function("pass_k:2")(fig2) == pytest.approx(0.390625)
        assert uq.query_function("pass_at_k:2")(fig2) == pytest.approx(0.859375)
        assert uq.query_function(mtta) is mtta

    def test_unknown_query(self):
        with pytest.raises(DomainError):
            uq.query_function("median")


class TestPropagation:
    def test_large_counts_contain_truth(self, fig2):
        t = uq.posterior_intervals(fig2_counts(10_000))
        iv = uq.propagate_interval(SimpleNamespace(chain=fig2), t, "rinf", samples=2000, seed=1)
        assert iv.lower <= 0.625 <= iv.upper and iv.upper - iv.lower < 0.03
        assert iv.point == pytest.approx(0.625) and iv.n_dropped == 0 and iv.n_used == 2000

    def test_deterministic(self, fig2):
        t = uq.posterior_intervals(fig2_counts(50))
        a = uq.propagate_interval(SimpleNamespace(chain=fig2), t, "mtta", samples=300, seed=4)
        b = uq.propagate_interval(SimpleNamespace(chain=fig2), t, "mtta", samples=300, seed=4)
        assert a == b

    def test_too_few_samples(self, fig2):
        with pytest.raises(DomainError):
            uq.propagate_interval(SimpleNamespace(chain=fig2), uq.posterior_intervals(fig2_counts(5)), "rinf", 99)

    def test_drop_rule(self):
        # two states that almost never leave: most draws have no exit mass at all
        counts = CountTable(np.array([[0.0, 1e6], [1e6, 0.0]]), np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))
        t = uq.posterior_intervals(counts, alpha=1e-4)
        chain = AgentMarkovChain([[0.0, 0.99], [0.99, 0.0]], [0.005, 0.005], [0.005, 0.005], [1, 0])
        with pytest.raises(DomainError):
            uq.propagate_interval(SimpleNamespace(chain=chain), t, "rinf", samples=200, seed=0)


@pytest.fixture(scope="module")
def react():
    corpus, truth = archetype_corpus(get_archetype("react"), 300, 2)
    return corpus, est.fit(corpus)


class TestBootstrap:
    def test_fast_deterministic_and_shaped(self, react):
        corpus, fitted = react
        a = uq.bootstrap_intervals(corpus, fitted, B=50, seed=3)
        b = uq.bootstrap_intervals(corpus, fitted, B=50, seed=3)
        assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
        assert a.replicates.shape == (50, fitted.m, fitted.m + 2)
        assert np.all(a.lower <= a.upper)
        assert np.allclose(a.replicates.sum(axis=2), 1.0)

    def test_minimum_replicates(self, react):
        corpus, fitted = react
        uq.bootstrap_intervals(corpus, fitted, B=2)
        with pytest.raises(DomainError):
            uq.bootstrap_intervals(corpus, fitted, B=1)

    def test_identical_traces_zero_width(self):
        steps = [Step("plan"), Step("tool_call"), Step("verify")]
        corpus = TraceCorpus([Trace(f"t{i}", steps, "success") for i in range(40)])
        fitted = est.fit(corpus, est.FitConfig(k_min=2, k_max=3))
        t = uq.bootstrap_intervals(corpus, fitted, B=30, seed=0)
        assert np.allclose(t.widths, 0.0)

    def test_slow_matches_fast_on_clean_corpus(self):
        spec = get_archetype("toolformer")
        corpus = chain_corpus(spec.ground_truth, 200, 5, spec.state_labels)
        fitted = est.fit(corpus)
        fast = uq.bootstrap_intervals(corpus, fitted, B=20, seed=1)
        slow = uq.bootstrap_intervals(corpus, fitted, B=20, seed=1, fast=False)
        assert slow.params["fast"] is False
        assert abs(fast.median_width - slow.median_width) < 0.02

    def test_bootstrap_propagation(self, react):
        corpus, fitted = react
        t = uq.bootstrap_intervals(corpus, fitted, B=100, seed=0)
        iv = uq.propagate_interval(fitted, t, "rinf")
        assert iv.n_used + iv.n_dropped == 100
        assert iv.lower <= reliability_infinity(fitted.chain) <= iv.upper

    def test_agrees_with_posterior(self, react):
        corpus, fitted = react
        boot = uq.bootstrap_intervals(corpus, fitted, B=200, seed=0)
        post = uq.posterior_intervals(fitted.counts, fitted.alpha)
        m = fitted.m
        assert abs(np.median(boot.widths[:, :m]) - np.median(post.widths[:, :m])) < 0.02


def test_posterior_coverage_small():
    truth = AgentMarkovChain([[0.2, 0.3, 0.1], [0.1, 0.3, 0.4], [0.25, 0.05, 0.3]], [0.3, 0.1, 0.25],
                             [0.1, 0.1, 0.15], [0.5, 0.3, 0.2], ("plan", "tool_call", "verify"))
    P = np.hstack([truth.Q, truth.R_plus[:, None], truth.R_minus[:, None]])
    covered = []
    for rep in range(40):
        corpus = chain_corpus(truth, 500, 100 + rep)
        index = {lab: i for i, lab in enumerate(truth.labels)}
        labels = [np.array([index[s.tool_type] for s in t.steps]) for t in corpus]
        t = uq.posterior_intervals(est.count_transitions(corpus, labels, 3))
        covered.append(np.mean((t.lower <= P) & (P <= t.upper)))
    assert np.mean(covered) >= 0.90
