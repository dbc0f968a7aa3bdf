"""Transition counting, Laplace-smoothed MLE and the first- vs second-order AIC test."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .chain import AgentMarkovChain
from .cluster import Clustering, select_m, ward_cluster
from .errors import AlignmentError, EmptyCorpus, NoTransitions, TooFewPoints
from .featurize import FeatureSpace, build_feature_space, featurize_corpus

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CountTable:
    transient: np.ndarray  # (m, m) c_ij
    success: np.ndarray  # (m,) c_{i,+}
    failure: np.ndarray  # (m,) c_{i,-}
    initial: np.ndarray  # (m,) first-step state histogram

    @property
    def m(self):
        return self.transient.shape[0]

    @property
    def row_totals(self):
        return self.transient.sum(axis=1) + self.success + self.failure

    @property
    def outcome_matrix(self):
        """``(m, m + 2)`` counts over ``{1..m, +, -}``."""
        return np.hstack([self.transient, self.success[:, None], self.failure[:, None]])

    def __add__(self, other):
        return CountTable(self.transient + other.transient, self.success + other.success,
                          self.failure + other.failure, self.initial + other.initial)

    def scaled(self, factor):
        return CountTable(self.transient * factor, self.success * factor, self.failure * factor,
                          self.initial * factor)

    def to_dict(self):
        return {"transient": self.transient.tolist(), "success": self.success.tolist(),
                "failure": self.failure.tolist(), "initial": self.initial.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["transient"], dtype=float), np.asarray(d["success"], dtype=float),
                   np.asarray(d["failure"], dtype=float), np.asarray(d["initial"], dtype=float))


def count_transitions(corpus, labels, m):
    """Count transient moves, terminal exits and first states.

    `labels` holds one integer array per trace, aligned with its steps.
    Censored traces contribute their transient moves but no exit.
    """
    if len(labels) != len(corpus):
        raise AlignmentError(f"{len(labels)} label sequences for {len(corpus)} traces")
    C = np.zeros((m, m))
    succ = np.zeros(m)
    fail = np.zeros(m)
    init = np.zeros(m)
    for t, s in zip(corpus, labels):
        s = np.asarray(s, dtype=np.int64)
        if s.shape[0] != t.length:
            raise AlignmentError(f"trace {t.trace_id!r}: {s.shape[0]} labels for {t.length} steps")
        if s.size and (s.min() < 0 or s.max() >= m):
            raise AlignmentError(f"trace {t.trace_id!r}: label outside [0, {m})")
        init[s[0]] += 1
        np.add.at(C, (s[:-1], s[1:]), 1.0)
        if t.outcome == "success":
            succ[s[-1]] += 1
        elif t.outcome == "failure":
            fail[s[-1]] += 1
    return CountTable(C, succ, fail, init)


def smoothed_mle(counts, alpha=1.0, labels=(), initial_mode="empirical"):
    """Laplace-smoothed chain: every outcome of row ``i`` gets ``(c + alpha) / (c_i + alpha (m + 2))``.

    The initial distribution is the normalised first-state histogram, or a
    point mass on its mode when ``initial_mode == "s0"``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m = counts.m
    denom = counts.row_totals + alpha * (m + 2)
    Q = (counts.transient + alpha) / denom[:, None]
    rp = (counts.success + alpha) / denom
    rm = (counts.failure + alpha) / denom
    init = counts.initial.astype(float)
    if init.sum() <= 0:
        init = np.ones(m)
    if initial_mode == "s0":
        s0 = int(np.argmax(init))
        init = np.zeros(m)
        init[s0] = 1.0
    elif initial_mode != "empirical":
        raise ValueError(f"unknown initial mode {initial_mode!r}")
    return AgentMarkovChain(Q, rp, rm, init / init.sum(), labels)


# ---------------------------------------------------------------------------
# order test


@dataclass(frozen=True)
class OrderTest:
    delta_aic: float
    ell1: float
    ell2: float
    k1: int
    k2: int

    @property
    def first_order_ok(self):
        return self.delta_aic > 0


def _events(corpus, labels, m):
    # one event per transient move or terminal exit; prev = -1 marks a first event
    prev, cur, nxt = [], [], []
    for t, s in zip(corpus, labels):
        s = np.asarray(s, dtype=np.int64)
        out = list(s[1:])
        if t.outcome == "success":
            out.append(m)
        elif t.outcome == "failure":
            out.append(m + 1)
        n_ev = len(out)
        if n_ev == 0:
            continue
        cur.extend(s[:n_ev])
        prev.append(-1)
        prev.extend(s[: n_ev - 1])
        nxt.extend(out)
    return np.array(prev, dtype=np.int64), np.array(cur, dtype=np.int64), np.array(nxt, dtype=np.int64)


def _loglik(context, nxt, width):
    """Maximised multinomial log-likelihood and number of observed contexts."""
    if context.size == 0:
        return 0.0, 0
    _, ctx = np.unique(context, return_inverse=True)
    ctx = ctx.reshape(-1)
    n_ctx = int(ctx.max()) + 1
    table = np.bincount(ctx * width + nxt, minlength=n_ctx * width).reshape(n_ctx, width)
    tot = table.sum(axis=1, keepdims=True)
    nz = table > 0
    ll = float((table[nz] * np.log((table / tot)[nz])).sum())
    return ll, n_ctx


def aic_order_test(corpus, labels, m):
    """``AIC_2 - AIC_1`` for first- vs second-order kernels over ``{1..m, +, -}``.

    Both likelihoods use the unsmoothed MLE. Second-order contexts are
    ``(previous, current)``; a trace's first event has no previous state and
    is conditioned on a start marker plus its current state. Each observed
    context carries ``m + 1`` free parameters.
    """
    prev, cur, nxt = _events(corpus, labels, m)
    if not np.any(prev >= 0):
        raise NoTransitions("no event has a two-step history")
    width = m + 2
    ell1, c1 = _loglik(cur, nxt, width)
    ell2, c2 = _loglik((prev + 1) * m + cur, nxt, width)
    k1, k2 = c1 * (m + 1), c2 * (m + 1)
    return OrderTest(-2.0 * (ell2 - ell1) + 2.0 * (k2 - k1), ell1, ell2, k1, k2)


# ---------------------------------------------------------------------------
# end-to-end fit


@dataclass(frozen=True)
class FitConfig:
    k_min: int = 2
    k_max: int = 12
    alpha: float = 1.0
    initial_mode: str = "empirical"
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in (d or {}).items() if k in known})


@dataclass(frozen=True)
class FittedChain:
    chain: AgentMarkovChain
    counts: CountTable
    clustering: Clustering
    space: FeatureSpace
    config: FitConfig
    order: Optional[OrderTest]
    censored_fraction: float
    meta: dict = field(default_factory=dict)

    @property
    def alpha(self):
        return self.config.alpha

    @property
    def m(self):
        return self.chain.m

    @property
    def delta_aic(self):
        return None if self.order is None else self.order.delta_aic

    @property
    def first_order_ok(self):
        return self.order is not None and self.order.first_order_ok

    def to_dict(self):
        order = None
        if self.order is not None:
            order = {**asdict(self.order), "first_order_ok": self.order.first_order_ok}
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "fitted_chain",
            "chain": self.chain.to_dict(),
            "counts": self.counts.to_dict(),
            "clustering": {"k": self.clustering.k, "centroids": self.clustering.centroids.tolist(),
                           "silhouette": self.clustering.silhouette, "meta": self.clustering.meta},
            "space": self.space.to_dict(),
            "config": asdict(self.config),
            "order_verdict": order,
            "censored_fraction": self.censored_fraction,
            "meta": self.meta,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, d):
        cl = d["clustering"]
        order = d.get("order_verdict")
        return cls(
            chain=AgentMarkovChain.from_dict(d["chain"]),
            counts=CountTable.from_dict(d["counts"]),
            clustering=Clustering(int(cl["k"]), np.zeros(0, dtype=np.int64), np.asarray(cl["centroids"], dtype=float),
                                  cl.get("silhouette"), cl.get("meta") or {}),
            space=FeatureSpace.from_dict(d["space"]),
            config=FitConfig.from_dict(d["config"]),
            order=None if order is None else OrderTest(order["delta_aic"], order["ell1"], order["ell2"],
                                                       order["k1"], order["k2"]),
            censored_fraction=float(d["censored_fraction"]),
            meta=d.get("meta") or {},
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def cluster_steps(featurized, config):
    """Silhouette-selected Ward clustering, degrading gracefully on tiny corpora.

    When there are fewer distinct step vectors (or points) than `k_min`, each
    distinct vector becomes its own state.
    """
    X = featurized.stacked
    try:
        return select_m(X, config.k_min, config.k_max, seed=config.seed)
    except TooFewPoints:
        n_unique = np.unique(X, axis=0).shape[0]
        cl = ward_cluster(X, n_unique)
        return Clustering(cl.k, cl.assignments, cl.centroids, None,
                          {"k_range": [config.k_min, config.k_max], "n_unique": n_unique, "degenerate": True})


def state_labels(corpus, clustering):
    """Name each cluster after its most frequent tool type (ties alphabetical)."""
    tallies = [Counter() for _ in range(clustering.k)]
    i = 0
    for t in corpus:
        for s in t.steps:
            tallies[clustering.assignments[i]][s.tool_type] += 1
            i += 1
    names = []
    used = Counter()
    for tally in tallies:
        top = min(tally.items(), key=lambda kv: (-kv[1], kv[0]))[0] if tally else "state"
        used[top] += 1
        names.append(top if used[top] == 1 else f"{top}#{used[top]}")
    return tuple(names)


def fit(corpus, config=None):
    """Featurize, cluster, count, smooth and order-test a trace corpus."""
    config = config or FitConfig()
    if len(corpus) == 0:
        raise EmptyCorpus("cannot fit an empty corpus")
    if not any(t.outcome != "censored" for t in corpus):
        raise EmptyCorpus("corpus has no completed trace")
    space = build_feature_space(corpus)
    feats = featurize_corpus(corpus, space)
    clustering = cluster_steps(feats, config)
    labels = clustering.per_trace(feats.offsets)
    m = clustering.k
    counts = count_transitions(corpus, labels, m)
    chain = smoothed_mle(counts, config.alpha, state_labels(corpus, clustering), config.initial_mode)
    try:
        order = aic_order_test(corpus, labels, m)
    except NoTransitions:
        order = None
    censored = sum(t.outcome == "censored" for t in corpus) / len(corpus)
    meta = {
        "featurizer": "rule_based/indicator",
        "aic_parameter_count": "observed contexts x (m+1); first events use a start-marker context",
        "aic_likelihood": "unsmoothed MLE",
        "n_traces": len(corpus),
        "n_steps": feats.n_points,
    }
    return FittedChain(chain, counts, clustering, space, config, order, censored, meta)
