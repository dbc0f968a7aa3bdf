"""Credible and bootstrap intervals for fitted transition probabilities.

Entries are indexed ``(i, j)`` over ``{1..m} x {1..m, +, -}``: the first
``m`` columns are ``Q``, then ``R_plus`` and ``R_minus``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import numerics
from .chain import AgentMarkovChain, mtta, pass_metrics, reliability_at, reliability_infinity
from .cluster import nearest_centroid, select_m
from .errors import DomainError, InvalidChain, TooFewPoints
from .estimate import count_transitions
from .featurize import featurize_corpus

DEFAULT_B = 200
MAX_DROP_FRACTION = 0.10


@dataclass(frozen=True)
class CredibleTable:
    point: np.ndarray  # (m, m + 2)
    lower: np.ndarray
    upper: np.ndarray
    method: str  # "posterior" or "bootstrap"
    level: float
    params: dict = field(default_factory=dict)
    labels: tuple = ()
    concentration: Optional[np.ndarray] = None  # Dirichlet parameters (posterior)
    replicates: Optional[np.ndarray] = None  # (B, m, m + 2) (bootstrap)
    replicate_initial: Optional[np.ndarray] = None  # (B, m)

    @property
    def m(self):
        return self.point.shape[0]

    @property
    def widths(self):
        return self.upper - self.lower

    @property
    def median_width(self):
        return float(np.median(self.widths))

    def column_labels(self):
        return tuple(self.labels_or_default()) + ("success", "failure")

    def labels_or_default(self):
        return self.labels if len(self.labels) == self.m else tuple(f"s{i}" for i in range(self.m))

    def rows(self):
        rows_ = []
        cols = self.column_labels()
        for i, r in enumerate(self.labels_or_default()):
            for j, c in enumerate(cols):
                rows_.append((r, c, float(self.point[i, j]), float(self.lower[i, j]), float(self.upper[i, j]),
                              self.method))
        return rows_

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "point", "lower", "upper", "method"])
        for r in self.rows():
            w.writerow([r[0], r[1], f"{r[2]:.10g}", f"{r[3]:.10g}", f"{r[4]:.10g}", r[5]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_dict(self):
        return {"method": self.method, "level": self.level, "params": self.params,
                "labels": list(self.labels_or_default()), "point": self.point.tolist(),
                "lower": self.lower.tolist(), "upper": self.upper.tolist(),
                "median_width": self.median_width}


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")


def posterior_intervals(counts, alpha=1.0, level=0.95, labels=()):
    """Equal-tailed marginal Beta intervals of the row-wise Dirichlet posterior.

    Row ``i`` has posterior ``Dir(c_i. + alpha)``, so entry ``(i, j)`` is
    ``Beta(c_ij + alpha, c_i + alpha (m + 2) - c_ij - alpha)``.
    """
    _check_level(level)
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    conc = counts.outcome_matrix + alpha
    total = conc.sum(axis=1, keepdims=True)
    rest = total - conc
    lo_p, hi_p = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0
    lower = np.empty_like(conc)
    upper = np.empty_like(conc)
    memo = {}
    for idx in np.ndindex(conc.shape):
        key = (conc[idx], rest[idx])
        if key not in memo:
            memo[key] = (numerics.beta_quantile(key[0], key[1], lo_p), numerics.beta_quantile(key[0], key[1], hi_p))
        lower[idx], upper[idx] = memo[key]
    return CredibleTable(conc / total, lower, upper, "posterior", level, {"alpha": alpha}, tuple(labels),
                         concentration=conc)


def _trace_tensors(corpus, labels, m):
    """Per-trace outcome-count matrices and first-state indicators."""
    n = len(labels)
    T = np.zeros((n, m, m + 2))
    init = np.zeros((n, m))
    for r, (t, s) in enumerate(zip(corpus, labels)):
        ct = count_transitions([t], [s], m)
        T[r] = ct.outcome_matrix
        init[r] = ct.initial
    return T, init


def _smooth(C, init, alpha):
    """Laplace-smoothed outcome matrices for a stack of count matrices."""
    m = C.shape[-2]
    P = (C + alpha) / (C.sum(axis=-1, keepdims=True) + alpha * (m + 2))
    tot = init.sum(axis=-1, keepdims=True)
    pi = np.where(tot > 0, init / np.where(tot > 0, tot, 1.0), 1.0 / m)
    return P, pi


def _align_labels(rep_centroids, fitted_centroids):
    """Greedy matching of replicate clusters to fitted centroids by distance.

    Replicate clusters left unmatched go to their nearest fitted centroid.
    """
    d = ((rep_centroids[:, None, :] - fitted_centroids[None, :, :]) ** 2).sum(axis=2)
    mapping = -np.ones(rep_centroids.shape[0], dtype=np.int64)
    used = set()
    for flat in np.argsort(d, axis=None, kind="stable"):
        r, f = np.unravel_index(flat, d.shape)
        if mapping[r] < 0 and f not in used:
            mapping[r] = f
            used.add(f)
    left = mapping < 0
    mapping[left] = np.argmin(d[left], axis=1)
    return mapping


def bootstrap_intervals(corpus, fitted, B=DEFAULT_B, fast=True, seed=0, level=0.95):
    """Trace-level bootstrap intervals for every entry.

    Traces are resampled with replacement `B` times. In fast mode each step
    keeps the label of its nearest fitted centroid and a replicate's counts
    are a multinomially weighted sum of per-trace counts; in slow mode each
    replicate is re-clustered and its clusters are matched to the fitted
    centroids. Replicates are re-smoothed with the fitted ``alpha``.
    """
    _check_level(level)
    if B < 2:
        raise DomainError("B must be at least 2")
    n = len(corpus)
    if n == 0:
        raise DomainError("cannot bootstrap an empty corpus")
    m = fitted.m
    alpha = fitted.alpha
    feats = featurize_corpus(corpus, fitted.space)
    cents = fitted.clustering.centroids
    rng = np.random.default_rng(seed)
    if fast:
        labels = [nearest_centroid(v, cents) for v in feats.vectors]
        T, I0 = _trace_tensors(corpus, labels, m)
        W = rng.multinomial(n, np.full(n, 1.0 / n), size=B).astype(float)
        C = np.tensordot(W, T, axes=1)
        init = W @ I0
    else:
        traces = list(corpus)
        C = np.zeros((B, m, m + 2))
        init = np.zeros((B, m))
        cfg = fitted.config
        for b in range(B):
            idx = rng.integers(0, n, size=n)
            vecs = [feats.vectors[i] for i in idx]
            X = np.vstack(vecs)
            try:
                cl = select_m(X, cfg.k_min, cfg.k_max, seed=cfg.seed)
                mapping = _align_labels(cl.centroids, cents)
                flat = mapping[cl.assignments]
            except TooFewPoints:
                flat = nearest_centroid(X, cents)
            off = np.concatenate([[0], np.cumsum([len(v) for v in vecs])])
            labs = [flat[off[r]:off[r + 1]] for r in range(n)]
            ct = count_transitions([traces[i] for i in idx], labs, m)
            C[b] = ct.outcome_matrix
            init[b] = ct.initial
    P, pi = _smooth(C, init, alpha)
    lo_p, hi_p = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0
    lower = np.quantile(P, lo_p, axis=0)
    upper = np.quantile(P, hi_p, axis=0)
    chain = fitted.chain
    point = np.hstack([chain.Q, chain.R_plus[:, None], chain.R_minus[:, None]])
    return CredibleTable(point, lower, upper, "bootstrap", level, {"B": int(B), "fast": bool(fast), "seed": int(seed)},
                         tuple(chain.labels), replicates=P, replicate_initial=pi)


# ---------------------------------------------------------------------------
# propagation


def query_function(query):
    """Turn a query spec into ``chain -> float``.

    Accepted specs: ``"rinf"``, ``"mtta"``, ``"rdc:<d>"``, ``"pass_k:<k>"``,
    ``"pass_at_k:<k>"`` or any callable.
    """
    if callable(query):
        return query
    name, _, arg = str(query).partition(":")
    if name in ("rinf", "reliability_infinity"):
        return reliability_infinity
    if name == "mtta":
        return mtta
    if name in ("rdc", "reliability_at"):
        d = int(arg)
        return lambda c: reliability_at(c, d)
    if name in ("pass_k", "passk"):
        k = int(arg)
        return lambda c: pass_metrics(min(max(reliability_infinity(c), 0.0), 1.0), k).pass_k
    if name == "pass_at_k":
        k = int(arg)
        return lambda c: pass_metrics(min(max(reliability_infinity(c), 0.0), 1.0), k).pass_at_k
    raise DomainError(f"unknown query {query!r}")


@dataclass(frozen=True)
class PropagatedInterval:
    point: float
    lower: float
    upper: float
    n_used: int
    n_dropped: int
    level: float


def propagate_interval(fitted, table, query: Union[str, Callable], samples=1000, seed=0, level=None):
    """Monte Carlo interval of a chain functional.

    Posterior tables draw `samples` chains from the row-wise Dirichlet
    posteriors (initial distribution held at the fitted one); bootstrap
    tables evaluate every stored replicate. Chains failing validation are
    dropped; more than 10% dropped raises :class:`DomainError`.
    """
    if samples < 100:
        raise DomainError("samples must be at least 100")
    level = table.level if level is None else level
    _check_level(level)
    fn = query_function(query)
    m = table.m
    if table.method == "posterior":
        rng = np.random.default_rng(seed)
        G = rng.standard_gamma(np.broadcast_to(table.concentration, (samples, m, m + 2)))
        P = G / G.sum(axis=2, keepdims=True)
        inits = np.broadcast_to(fitted.chain.initial, (samples, m))
    elif table.replicates is not None:
        P = table.replicates
        inits = table.replicate_initial
    else:
        raise DomainError("table carries neither posterior parameters nor replicates")
    values = []
    dropped = 0
    for p, pi in zip(P, inits):
        try:
            c = AgentMarkovChain(p[:, :m], p[:, m], p[:, m + 1], pi)
            values.append(fn(c))
        except InvalidChain:
            dropped += 1
    total = P.shape[0]
    if dropped > MAX_DROP_FRACTION * total:
        raise DomainError(f"{dropped} of {total} propagated chains failed validation")
    v = np.asarray(values, dtype=float)
    lo_p, hi_p = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0
    return PropagatedInterval(float(fn(fitted.chain)), float(np.quantile(v, lo_p)), float(np.quantile(v, hi_p)),
                              int(v.size), dropped, level)
