"""Dense small-matrix linear algebra and statistical special functions.

Matrices and vectors are plain ``numpy`` float arrays; :func:`as_matrix` and
:func:`as_vector` enforce the shape and finiteness invariants at the boundary.
Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, EmptySample, NoConvergence, NotDiagonalizable, SingularMatrix

PIVOT_TOL = 1e-12
EIG_MAX_DIM = 64


def as_matrix(a, square=False):
    arr = np.array(a, dtype=float)
    if arr.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def as_vector(v):
    arr = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError("vector has non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# linear systems


def lu_factor(A):
    """Row-scaled partial-pivot LU factorisation.

    Returns ``(LU, perm)`` with ``A[perm] = L @ U``; ``L`` has a unit diagonal
    and is stored below the diagonal of ``LU``.

    Raises
    ------
    SingularMatrix
        If a scaled pivot magnitude falls below ``PIVOT_TOL``.
    """
    LU = as_matrix(A, square=True).copy()
    n = LU.shape[0]
    perm = np.arange(n)
    scale = np.abs(LU).max(axis=1)
    if np.any(scale == 0.0):
        raise SingularMatrix("matrix has an all-zero row")
    for k in range(n):
        col = np.abs(LU[k:, k]) / scale[k:]
        p = k + int(np.argmax(col))
        if col[p - k] < PIVOT_TOL:
            raise SingularMatrix(f"scaled pivot {col[p - k]:.3e} below tolerance at column {k}")
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            scale[[k, p]] = scale[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        if k + 1 < n:
            LU[k + 1:, k] /= LU[k, k]
            LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, perm


def lu_solve(factored, b):
    """Forward and back substitution; `b` may be a vector or a matrix of columns."""
    LU, perm = factored
    n = LU.shape[0]
    x = np.array(b, dtype=float)[perm]
    for i in range(1, n):
        x[i] -= LU[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - LU[i, i + 1:] @ x[i + 1:]) / LU[i, i]
    return x


def solve_linear(A, b):
    """Solve ``A x = b`` by scaled partial-pivot elimination.

    One step of iterative refinement is applied, which keeps the residual at
    machine level for the well-conditioned systems this package produces.
    """
    A = as_matrix(A, square=True)
    b = as_vector(b)
    if b.shape[0] != A.shape[0]:
        raise DomainError(f"right-hand side has length {b.shape[0]}, expected {A.shape[0]}")
    fac = lu_factor(A)
    x = lu_solve(fac, b)
    x += lu_solve(fac, b - A @ x)
    return x


def inverse(A):
    """Matrix inverse from one LU factorisation, with one refinement step."""
    A = as_matrix(A, square=True)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    fac = lu_factor(A)
    eye = np.eye(n)
    X = lu_solve(fac, eye)
    X += lu_solve(fac, eye - A @ X)
    return X


def inf_norm(a):
    """Induced infinity norm (max absolute row sum); max-abs for vectors."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.ndim == 1:
        return float(np.max(np.abs(a)))
    return float(np.max(np.abs(a).sum(axis=1)))


# ---------------------------------------------------------------------------
# spectra


def power_iteration_spectral_radius(A, tol=1e-10, max_iter=10000):
    """Spectral radius of a nonnegative matrix by power iteration.

    Starts from the all-ones vector so that every Perron component is
    excited; stops when the relative change of the Rayleigh-type estimate
    ``|A x| / |x|`` drops below `tol`.
    """
    A = as_matrix(A, square=True)
    if np.any(A < 0):
        raise DomainError("power iteration expects a nonnegative matrix")
    n = A.shape[0]
    if n == 0:
        return 0.0
    x = np.ones(n) / n
    est = None
    for _ in range(max_iter):
        y = A @ x
        norm = np.abs(y).sum()
        if norm == 0.0:
            return 0.0
        new = norm / np.abs(x).sum()
        x = y / norm
        if est is not None and abs(new - est) <= tol * max(new, 1e-300):
            return float(new)
        est = new
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def eigendecompose(A, tol=1e-8):
    """Eigenvalues and unit-norm eigenvector columns of a small real matrix.

    Backed by LAPACK's Hessenberg shifted-QR driver (``numpy.linalg.eig``).

    Raises
    ------
    NotDiagonalizable
        When the smallest singular value of the eigenvector matrix is below
        `tol`, i.e. the matrix is numerically defective.
    DomainError
        For dimensions above ``EIG_MAX_DIM``.
    """
    A = as_matrix(A, square=True)
    if A.shape[0] > EIG_MAX_DIM:
        raise DomainError(f"eigendecomposition capped at dimension {EIG_MAX_DIM}")
    w, V = np.linalg.eig(A)
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    smin = np.linalg.svd(V, compute_uv=False).min() if V.size else 1.0
    if smin < tol:
        raise NotDiagonalizable(f"eigenvector matrix nearly singular (sigma_min={smin:.2e})")
    return w, V


# ---------------------------------------------------------------------------
# special functions


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a, b, x, max_iter=20000, eps=1e-16):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NoConvergence(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a, b, x):
    """Regularised incomplete beta function ``I_x(a, b)``."""
    if not (a > 0 and b > 0) or not (0.0 <= x <= 1.0):
        raise DomainError(f"I_x(a,b) undefined for a={a}, b={b}, x={x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b))
    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - front * _betacf(b, a, 1.0 - x) / b
    return front * _betacf(a, b, x) / a


def beta_pdf(a, b, x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - _log_beta(a, b))


def beta_quantile(a, b, p):
    """Inverse of ``I_x(a, b)`` in `x`: bracketed bisection with Newton steps."""
    if not (a > 0 and b > 0) or not (0.0 < p < 1.0):
        raise DomainError(f"beta quantile undefined for a={a}, b={b}, p={p}")
    lo, hi = 0.0, 1.0
    x = min(max(a / (a + b), 1e-12), 1.0 - 1e-12)
    for _ in range(300):
        f = regularized_incomplete_beta(a, b, x) - p
        if abs(f) <= 1e-13:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        if hi - lo <= 1e-16 * max(x, 1e-300):
            return x
        pdf = beta_pdf(a, b, x)
        step = x - f / pdf if pdf > 0 else -1.0
        x = step if lo < step < hi else 0.5 * (lo + hi)
    return x


def kolmogorov_sf(lam):
    """Asymptotic Kolmogorov tail ``2 sum (-1)^(j-1) exp(-2 j^2 lam^2)``."""
    if lam < 0.2:
        # 1 - sf < 1e-12 here and the alternating series is slow to settle
        return 1.0
    total = 0.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < 1e-12:
            break
        j += 1
    return min(1.0, max(0.0, 2.0 * total))


def ecdf(sample, points):
    """Right-continuous empirical CDF of `sample` evaluated at `points`."""
    s = np.sort(np.asarray(sample, dtype=float))
    return np.searchsorted(s, points, side="right") / s.size


def ks_two_sample(sample_a, sample_b):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    ``D`` is evaluated on the pooled support with right-continuous ECDFs,
    which is exact in the presence of ties (discrete first-passage times).
    """
    a = as_vector(sample_a)
    b = as_vector(sample_b)
    if a.size == 0 or b.size == 0:
        raise EmptySample("KS test needs two nonempty samples")
    support = np.unique(np.concatenate([a, b]))
    d = float(np.max(np.abs(ecdf(a, support) - ecdf(b, support))))
    lam = d * math.sqrt(a.size * b.size / (a.size + b.size))
    return d, kolmogorov_sf(lam)


def ks_one_sample_discrete(sample, support, cdf_values):
    """KS statistic of `sample` against a model CDF tabulated on `support`.

    The model CDF must be tabulated at every observed sample value; the
    p-value is the one-sample (``n_model -> inf``) limit of the two-sample
    asymptotic form.
    """
    s = as_vector(sample)
    if s.size == 0:
        raise EmptySample("KS test needs a nonempty sample")
    support = np.asarray(support, dtype=float)
    d = float(np.max(np.abs(ecdf(s, support) - np.asarray(cdf_values, dtype=float))))
    return d, kolmogorov_sf(d * math.sqrt(s.size))
