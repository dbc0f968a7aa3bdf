"""Independent reference computations used as test oracles.

Nothing here imports the package: each oracle recomputes a quantity from
its definition (exact rationals, path enumeration, brute force).
"""

import itertools
import math
import random
from fractions import Fraction

import numpy as np


def frac(x):
    return Fraction(x).limit_denominator(10**9)


def frac_solve(A, b):
    """Exact Gauss-Jordan elimination over the rationals."""
    n = len(A)
    M = [[frac(v) for v in row] + [frac(b[i])] for i, row in enumerate(A)]
    for c in range(n):
        p = next(r for r in range(c, n) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [v / piv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [vr - f * vc for vr, vc in zip(M[r], M[c])]
    return [M[i][n] for i in range(n)]


def i_minus(Q):
    n = len(Q)
    return [[(1 if i == j else 0) - frac(Q[i][j]) for j in range(n)] for i in range(n)]


def exact_absorption(Q, R_plus, initial):
    """Exact ``pi0 (I-Q)^{-1} R_plus`` and ``pi0 (I-Q)^{-1} 1``."""
    A = i_minus(Q)
    a = frac_solve(A, R_plus)
    t = frac_solve(A, [1] * len(Q))
    pi = [frac(v) for v in initial]
    return sum(p * x for p, x in zip(pi, a)), sum(p * x for p, x in zip(pi, t))


def path_reliability(Q, R_plus, initial, d):
    """``P(success within d steps)`` by explicit enumeration of every state path."""
    m = len(Q)
    total = Fraction(0)
    for length in range(1, d + 1):
        for path in itertools.product(range(m), repeat=length):
            p = frac(initial[path[0]])
            for a, b in zip(path, path[1:]):
                p *= frac(Q[a][b])
                if p == 0:
                    break
            total += p * frac(R_plus[path[-1]])
    return total


def simulate_outcomes(Q, R_plus, R_minus, initial, n, seed):
    """Plain-Python trajectory simulation: list of (success?, steps)."""
    r = random.Random(seed)
    m = len(Q)
    out = []
    for _ in range(n):
        s = r.choices(range(m), weights=initial)[0]
        t = 0
        while True:
            t += 1
            w = list(Q[s]) + [R_plus[s], R_minus[s]]
            nxt = r.choices(range(m + 2), weights=w)[0]
            if nxt >= m:
                out.append((nxt == m, t))
                break
            s = nxt
    return out


def beta1b_quantile(b, p):
    """Quantile of Beta(1, b): invert ``1 - (1 - x)^b = p``."""
    return 1.0 - (1.0 - p) ** (1.0 / b)


def brute_silhouette(X, labels):
    X = np.asarray(X, dtype=float)
    labels = list(labels)
    n = len(labels)
    clusters = sorted(set(labels))
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(math.dist(X[i], X[j]) for j in own) / len(own)
        b = min(sum(math.dist(X[i], X[j]) for j in range(n) if labels[j] == c) /
                sum(1 for j in range(n) if labels[j] == c)
                for c in clusters if c != labels[i])
        if max(a, b) > 0:
            total += (b - a) / max(a, b)
    return total / n


def _sse(X, members):
    P = X[list(members)]
    return float(((P - P.mean(axis=0)) ** 2).sum())


def brute_ward_partitions(X):
    """Greedy Ward agglomeration straight from the SSE definition.

    Returns ``{k: partition}`` where a partition is a frozenset of frozensets
    of point indices.
    """
    X = np.asarray(X, dtype=float)
    clusters = [frozenset([i]) for i in range(len(X))]
    out = {len(clusters): frozenset(clusters)}
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            u = clusters[a] | clusters[b]
            cost = _sse(X, u) - _sse(X, clusters[a]) - _sse(X, clusters[b])
            if best is None or cost < best[0] - 1e-12:
                best = (cost, a, b)
        _, a, b = best
        merged = clusters[a] | clusters[b]
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)] + [merged]
        out[len(clusters)] = frozenset(clusters)
    return out


def partition_of(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def random_chain_arrays(m, rng, exit_floor=0.05):
    """Random ``(Q, R_plus, R_minus, initial)`` with every row leaking at least `exit_floor`."""
    P = rng.dirichlet(np.ones(m + 2), size=m)
    ex = P[:, m:].sum(axis=1)
    low = ex < exit_floor
    P[low, :m] *= ((1 - exit_floor) / P[low, :m].sum(axis=1))[:, None]
    P[low, m:] = exit_floor / 2
    init = rng.dirichlet(np.ones(m))
    return P[:, :m], P[:, m], P[:, m + 1], init
