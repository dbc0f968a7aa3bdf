import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from agentrel import cluster as cl
from agentrel.errors import EmptyCorpus, SingleCluster, TooFewPoints
from agentrel.featurize import FeatureSpace, build_feature_space, featurize_corpus
from agentrel.traces import Step, Trace, TraceCorpus, split_corpus

from oracles import brute_silhouette, brute_ward_partitions, partition_of


def corpus_of(*step_lists):
    return TraceCorpus([Trace(f"t{i}", steps, "success") for i, steps in enumerate(step_lists)])


class TestFeaturize:
    def test_dimension_counts_vocab(self):
        c = corpus_of([Step("plan"), Step("tool_call")], [Step("plan")])
        assert build_feature_space(c).dimension == 3

    def test_single_step(self):
        assert build_feature_space(corpus_of([Step("plan")])).dimension >= 2

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            build_feature_space(TraceCorpus([]))

    def test_one_hot_rules(self):
        space = FeatureSpace(("plan", "tool_call"), ("E1",))
        f = featurize_corpus(corpus_of([Step("plan"), Step("tool_call", True, "E1")]), space)
        assert f.vectors[0].tolist() == [[1, 0, 0, 0], [0, 1, 1, 1]]
        assert FeatureSpace(("plan", "tool_call"), ()).vector(Step("plan")).tolist() == [1, 0, 0]

    def test_unseen_categories_zero_block(self):
        space = FeatureSpace(("plan", "tool_call"), ("E1",))
        v = featurize_corpus(corpus_of([Step("browse", True, "E9")]), space).vectors[0][0]
        assert v.tolist() == [0, 0, 1, 0]

    def test_vector_matches_batch(self):
        space = FeatureSpace(("a", "b"), ("x", "y"))
        steps = [Step("a"), Step("b", True), Step("a", False, "y"), Step("z", True, "x")]
        batch = featurize_corpus(corpus_of(steps), space).vectors[0]
        assert np.array_equal(batch, np.vstack([space.vector(s) for s in steps]))

    def test_fit_half_vocabulary_frozen(self):
        steps = [[Step(t)] for t in ["a", "b", "c", "d"] * 10]
        c = corpus_of(*steps)
        fit, test = split_corpus(c, 0.5, 0)
        space = build_feature_space(fit)
        before = space.to_dict()
        feats = featurize_corpus(test, space)
        assert space.to_dict() == before and feats.stacked.shape[1] == space.dimension

    def test_space_round_trip(self):
        space = FeatureSpace(("a", "b"), ("x",))
        assert FeatureSpace.from_dict(space.to_dict()) == space

    def test_outputs_are_indicators(self):
        c = corpus_of([Step("a", True, "x"), Step("b")], [Step("c", False, "y")])
        X = featurize_corpus(c, build_feature_space(c)).stacked
        assert set(np.unique(X)) <= {0.0, 1.0}
        assert featurize_corpus(c, build_feature_space(c)).offsets.tolist() == [0, 2, 3]


class TestWard:
    def test_collinear_trace(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        merges = cl.ward_linkage(X)
        assert merges == [(0, 1, 0.5), (2, 3, 0.5), (0, 2, 4.0)]
        oracle = brute_ward_partitions(X)
        for k in (1, 2, 3, 4):
            assert partition_of(cl.cut_linkage(merges, 4, k)) == oracle[k]

    def test_singletons(self):
        X = np.eye(5)
        c = cl.ward_cluster(X, 5)
        assert sorted(c.assignments.tolist()) == [0, 1, 2, 3, 4] and c.silhouette is None

    def test_separable_groups(self):
        X = np.vstack([np.tile([1, 0, 0], (6, 1)), np.tile([0, 1, 0], (4, 1))])
        c = cl.ward_cluster(X, 2)
        assert partition_of(c.assignments) == frozenset([frozenset(range(6)), frozenset(range(6, 10))])
        assert c.centroids[c.assignments[0]] == pytest.approx([1, 0, 0])

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            cl.ward_cluster(np.eye(2), 3)

    @given(st.integers(0, 10**6), st.integers(3, 7))
    def test_matches_brute_force(self, seed, n):
        X = np.random.default_rng(seed).normal(size=(n, 2))
        merges = cl.ward_linkage(X)
        oracle = brute_ward_partitions(X)
        for k in range(1, n + 1):
            assert partition_of(cl.cut_linkage(merges, n, k)) == oracle[k]

    @given(st.integers(0, 10**6))
    def test_matches_scipy(self, seed):
        X = np.random.default_rng(seed).normal(size=(40, 3))
        Z = linkage(X, method="ward")
        merges = cl.ward_linkage(X)
        # scipy reports sqrt(2 * cost) heights
        assert sorted(np.sqrt(2 * np.array([m[2] for m in merges]))) == pytest.approx(sorted(Z[:, 2]), rel=1e-9)
        for k in (2, 3, 5, 8):
            ours = partition_of(cl.cut_linkage(merges, 40, k))
            assert ours == partition_of(fcluster(Z, k, criterion="maxclust"))

    @given(st.integers(0, 10**6))
    def test_dedup_equals_raw(self, seed):
        rng = np.random.default_rng(seed)
        centers = rng.normal(size=(6, 3))
        X = np.repeat(centers, rng.integers(1, 5, size=6), axis=0)
        X = X[rng.permutation(len(X))]
        for k in range(1, 7):
            raw = cl.cut_linkage(cl.ward_linkage(X), len(X), k)
            assert partition_of(cl.ward_cluster(X, k).assignments) == partition_of(raw)

    @given(st.integers(0, 10**6))
    def test_order_invariant(self, seed):
        rng = np.random.default_rng(seed)
        X = np.repeat(np.eye(4), rng.integers(1, 6, size=4), axis=0)
        X = np.vstack([X, rng.integers(0, 2, size=(5, 4))]).astype(float)
        perm = rng.permutation(len(X))
        a = cl.ward_cluster(X, 3).assignments
        b = cl.ward_cluster(X[perm], 3).assignments
        assert np.array_equal(a[perm], b)

    @given(st.integers(0, 10**6))
    def test_objective_monotone(self, seed):
        X = np.random.default_rng(seed).normal(size=(25, 2))
        merges = cl.ward_linkage(X)

        def sse(labels):
            return sum(((X[labels == c] - X[labels == c].mean(axis=0)) ** 2).sum() for c in np.unique(labels))

        vals = [sse(cl.cut_linkage(merges, 25, k)) for k in range(25, 0, -1)]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
        costs = [m[2] for m in merges]
        assert np.diff(vals) == pytest.approx(costs, abs=1e-9)


class TestSilhouette:
    def test_separated(self):
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(0, 0.01, (10, 2)), rng.normal(5, 0.01, (10, 2))])
        assert cl.silhouette_score(X, [0] * 10 + [1] * 10) > 0.9

    def test_identical_points(self):
        assert cl.silhouette_score(np.zeros((6, 2)), [0, 0, 0, 1, 1, 1]) == 0.0

    def test_single_cluster(self):
        with pytest.raises(SingleCluster):
            cl.silhouette_score(np.eye(3), [0, 0, 0])

    def test_six_point_example(self):
        X = np.array([[0, 0], [0, 1], [1, 0], [4, 4], [4, 5], [9, 9]], dtype=float)
        labels = [0, 0, 0, 1, 1, 2]
        assert cl.silhouette_score(X, labels) == pytest.approx(brute_silhouette(X, labels), abs=1e-12)

    @given(st.integers(0, 10**6), st.integers(2, 4))
    def test_matches_brute_force(self, seed, k):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 3, size=(30, 2)).astype(float)
        labels = np.arange(30) % k
        rng.shuffle(labels)
        assert cl.silhouette_score(X, labels) == pytest.approx(brute_silhouette(X, labels), abs=1e-12)

    def test_subsample_cap(self):
        X = np.random.default_rng(1).normal(size=(300, 2))
        labels = (X[:, 0] > 0).astype(int)
        full = cl.silhouette_score(X, labels, cap=10_000)
        sub = cl.silhouette_score(X, labels, seed=3, cap=120)
        assert sub == cl.silhouette_score(X, labels, seed=3, cap=120)
        assert abs(sub - full) < 0.1


class TestSelectM:
    def test_three_patterns(self):
        X = np.repeat(np.eye(3), [20, 15, 10], axis=0)
        c = cl.select_m(X, 2, 6)
        assert c.k == 3
        assert c.silhouette == max(c.meta["scores"].values())

    def test_collapsed_range(self):
        X = np.random.default_rng(0).normal(size=(30, 2))
        assert cl.select_m(X, 4, 4).k == 4

    def test_tie_goes_to_smaller_k(self, monkeypatch):
        monkeypatch.setattr(cl, "silhouette_score", lambda X, labels, seed=0: 0.5)
        X = np.random.default_rng(0).normal(size=(30, 2))
        assert cl.select_m(X, 3, 7).k == 3

    def test_selected_is_argmax(self):
        X = np.random.default_rng(2).normal(size=(60, 2))
        c = cl.select_m(X, 2, 8)
        assert all(c.silhouette >= s - 1e-12 for s in c.meta["scores"].values())
        assert c.k == min(int(k) for k, s in c.meta["scores"].items() if s >= c.silhouette - 1e-12)

    def test_invalid_range(self):
        with pytest.raises(TooFewPoints):
            cl.select_m(np.eye(3), 1, 3)
        with pytest.raises(TooFewPoints):
            cl.select_m(np.eye(3), 4, 5)

    def test_centroids_are_means(self):
        X = np.random.default_rng(4).normal(size=(50, 3))
        c = cl.select_m(X, 2, 5)
        for j in range(c.k):
            assert c.centroids[j] == pytest.approx(X[c.assignments == j].mean(axis=0))
        assert set(c.assignments.tolist()) == set(range(c.k))

    def test_nearest_centroid_ties_low(self):
        C = np.array([[0.0, 0.0], [2.0, 0.0]])
        assert cl.nearest_centroid([[1.0, 0.0], [1.9, 0.0], [-1, 0]], C).tolist() == [0, 1, 0]
