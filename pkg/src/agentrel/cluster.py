"""Agglomerative Ward clustering with silhouette selection of the state count.

Step features are indicator vectors, so a corpus of thousands of steps has
only a handful of distinct points. Ward linkage is run on the distinct
points weighted by multiplicity, which yields the same partitions as running
it on every step: identical points merge first at zero cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SingleCluster, TooFewPoints

SILHOUETTE_CAP = 2000


@dataclass(frozen=True)
class Clustering:
    k: int
    assignments: np.ndarray  # cluster index per stacked step vector
    centroids: np.ndarray  # (k, p)
    silhouette: Optional[float]
    meta: dict = field(default_factory=dict)

    def per_trace(self, offsets):
        return [self.assignments[offsets[i]:offsets[i + 1]] for i in range(len(offsets) - 1)]


def _points(features):
    return features.stacked if hasattr(features, "stacked") else np.asarray(features, dtype=float)


# ---------------------------------------------------------------------------
# linkage


def ward_linkage(points, weights=None):
    """Ward merge sequence via the nearest-neighbour chain.

    Returns a list of ``(i, j, cost)`` sorted by cost, where ``i`` and ``j``
    are original point indices representing the two merged clusters and
    ``cost`` is the increase of the within-cluster sum of squares.
    Lance-Williams updates act on ``D = 2 w_a w_b / (w_a + w_b) |c_a - c_b|^2``.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float).copy()
    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    D = 2.0 * np.outer(w, w) / (w[:, None] + w[None, :]) * sq
    np.fill_diagonal(D, np.inf)
    active = np.ones(n, dtype=bool)
    merges = []
    chain = []
    remaining = n
    while remaining > 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        a = chain[-1]
        row = np.where(active, D[a], np.inf)
        best = row.min()
        prev = chain[-2] if len(chain) > 1 else None
        # ties: keep the chain predecessor (needed for termination), else lowest index
        b = prev if prev is not None and row[prev] == best else int(np.flatnonzero(row == best)[0])
        if b == prev:
            chain.pop()
            chain.pop()
            i, j = min(a, b), max(a, b)
            merges.append((i, j, 0.5 * float(D[i, j])))
            wi, wj = w[i], w[j]
            wk = w
            new = ((wi + wk) * D[i] + (wj + wk) * D[j] - wk * D[i, j]) / (wi + wj + wk)
            D[i, :] = new
            D[:, i] = new
            D[i, i] = np.inf
            D[j, :] = np.inf
            D[:, j] = np.inf
            w[i] = wi + wj
            active[j] = False
            remaining -= 1
        else:
            chain.append(b)
    order = sorted(range(len(merges)), key=lambda t: merges[t][2])
    return [merges[t] for t in order]


def cut_linkage(merges, n, k):
    """Labels after applying the first ``n - k`` merges, numbered by lowest member."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in merges[: n - k]:
        ri, rj = find(i), find(j)
        parent[max(ri, rj)] = min(ri, rj)
    roots = [find(x) for x in range(n)]
    relabel = {}
    for r in roots:
        relabel.setdefault(r, len(relabel))
    return np.array([relabel[r] for r in roots], dtype=np.int64)


def _centroids(X, labels, k):
    C = np.zeros((k, X.shape[1]))
    counts = np.bincount(labels, minlength=k).astype(float)
    np.add.at(C, labels, X)
    return C / counts[:, None]


class _Dedup:
    """Distinct feature vectors of a point set, in lexicographic order."""

    def __init__(self, X):
        self.X = X
        if X.shape[0]:
            self.uniq, inv, self.counts = np.unique(X, axis=0, return_inverse=True, return_counts=True)
            self.inverse = inv.reshape(-1)
        else:
            self.uniq, self.inverse, self.counts = X, np.zeros(0, dtype=np.int64), np.zeros(0)
        self._merges = None

    @property
    def n_unique(self):
        return self.uniq.shape[0]

    @property
    def merges(self):
        if self._merges is None:
            self._merges = ward_linkage(self.uniq, self.counts)
        return self._merges

    def labels(self, k):
        return cut_linkage(self.merges, self.n_unique, k)[self.inverse]


def ward_cluster(features, k, _dedup=None):
    """Cut the Ward hierarchy at `k` clusters.

    Cluster indices are ordered by their lexicographically smallest member,
    so assignments do not depend on the order of the input points.
    """
    X = _points(features)
    n = X.shape[0]
    if k < 1 or n < k:
        raise TooFewPoints(f"cannot form {k} clusters from {n} points")
    dd = _dedup or _Dedup(X)
    if k <= dd.n_unique:
        labels = dd.labels(k)
    else:
        # more clusters than distinct vectors: identical points must be split
        labels = cut_linkage(ward_linkage(X), n, k)
    return Clustering(k, labels, _centroids(X, labels, k), None)


# ---------------------------------------------------------------------------
# silhouette


def silhouette_score(features, assignments, seed=0, cap=SILHOUETTE_CAP):
    """Mean silhouette with Euclidean distance.

    Points in singleton clusters score 0, as do points with ``a = b = 0``.
    Identical (point, cluster) pairs are pooled with weights; when more than
    `cap` distinct pairs remain, a seeded subsample of `cap` points is used.
    """
    X = _points(features)
    labels = np.asarray(assignments, dtype=np.int64)
    k = int(labels.max()) + 1 if labels.size else 0
    if len(np.unique(labels)) < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    keyed = np.hstack([X, labels[:, None].astype(float)])
    groups, ginv, gw = np.unique(keyed, axis=0, return_inverse=True, return_counts=True)
    if groups.shape[0] > cap:
        pick = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=cap, replace=False))
        groups, gw = np.unique(keyed[pick], axis=0, return_counts=True)
    P = groups[:, :-1]
    gl = groups[:, -1].astype(np.int64)
    gw = gw.astype(float)
    size = np.bincount(gl, weights=gw, minlength=k)
    dist = np.sqrt(np.maximum(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2), 0.0))
    S = np.zeros((P.shape[0], k))
    for c in range(k):
        mask = gl == c
        if mask.any():
            S[:, c] = dist[:, mask] @ gw[mask]
    own = size[gl]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(own > 1, S[np.arange(len(gl)), gl] / (own - 1), 0.0)
        mean_other = S / np.where(size > 0, size, np.nan)[None, :]
    mean_other[np.arange(len(gl)), gl] = np.inf
    mean_other[:, size == 0] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float((s * gw).sum() / gw.sum())


def select_m(features, k_min=2, k_max=12, seed=0):
    """Silhouette-maximising Ward clustering over ``k_min .. k_max``.

    Ties go to the smaller `k`. Only ``k`` up to the number of distinct
    feature vectors is considered (`k_max` is clamped there).
    """
    X = _points(features)
    n = X.shape[0]
    if k_min < 2 or k_max < k_min or n < k_min:
        raise TooFewPoints(f"cluster range [{k_min}, {k_max}] invalid for {n} points")
    dd = _Dedup(X)
    hi = min(k_max, dd.n_unique)
    if hi < k_min:
        raise TooFewPoints(f"only {dd.n_unique} distinct feature vectors for k_min={k_min}")
    best = None
    scores = {}
    for k in range(k_min, hi + 1):
        labels = dd.labels(k)
        s = silhouette_score(X, labels, seed=seed)
        scores[k] = s
        if best is None or s > best[1] + 1e-12:
            best = (k, s, labels)
    k, s, labels = best
    meta = {"k_range": [k_min, k_max], "scores": {str(key): v for key, v in scores.items()},
            "n_unique": dd.n_unique, "silhouette_cap": SILHOUETTE_CAP}
    return Clustering(k, labels, _centroids(X, labels, k), s, meta)


def nearest_centroid(X, centroids):
    """Index of the nearest centroid per row (Euclidean; ties to lowest index)."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    d = ((X[:, None, :] - np.asarray(centroids)[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1).astype(np.int64)
