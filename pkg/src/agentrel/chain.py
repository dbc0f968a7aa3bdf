"""Absorbing discrete-time Markov chains with success/failure absorbers.

The chain is described by the transient block ``Q`` and the two exit vectors
``R_plus`` (success) and ``R_minus`` (failure), plus an initial distribution
over transient states. All analytics below work on row vectors
``pi0 Q^t`` and never form matrix powers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import numerics
from .errors import (
    DomainError,
    InvalidChain,
    NoConvergence,
    NoSuccessMass,
    NotDiagonalizable,
    SingularMatrix,
    SmallnessViolated,
    SubstochasticityViolated,
    TransienceViolated,
)

MASS_TOL = 1e-9
STEP_CAP = 100_000
SIM_BLOCK = 8192

SUCCESS, FAILURE, CAPPED = 1, 0, -1


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AgentMarkovChain:
    """Absorbing chain ``(Q, R_plus, R_minus, initial)`` over `m` transient states.

    Validated on construction: entries in [0, 1], every row of
    ``[Q | R_plus | R_minus]`` sums to one, `initial` is a distribution, and
    ``rho(Q) < 1``.
    """

    Q: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    initial: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim == 1 and Q.size == 1:
            Q = Q.reshape(1, 1)
        m = Q.shape[0]
        if Q.ndim != 2 or Q.shape != (m, m):
            raise InvalidChain(f"Q must be square, got shape {Q.shape}")
        rp = np.array(self.R_plus, dtype=float).reshape(-1)
        rm = np.array(self.R_minus, dtype=float).reshape(-1)
        init = np.array(self.initial, dtype=float).reshape(-1)
        for name, v in (("R_plus", rp), ("R_minus", rm), ("initial", init)):
            if v.shape != (m,):
                raise InvalidChain(f"{name} has length {v.size}, expected {m}")
        for name, v in (("Q", Q), ("R_plus", rp), ("R_minus", rm), ("initial", init)):
            if not np.all(np.isfinite(v)):
                raise InvalidChain(f"{name} has non-finite entries")
            if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
                raise InvalidChain(f"{name} has entries outside [0, 1]")
        Q, rp, rm, init = (np.clip(v, 0.0, 1.0) for v in (Q, rp, rm, init))
        rows = Q.sum(axis=1) + rp + rm
        bad = np.flatnonzero(np.abs(rows - 1.0) > MASS_TOL)
        if bad.size:
            raise InvalidChain(f"row {bad[0]} does not conserve mass (sum={rows[bad[0]]:.12g})")
        if abs(init.sum() - 1.0) > MASS_TOL:
            raise InvalidChain(f"initial distribution sums to {init.sum():.12g}")
        labels = tuple(self.labels) if self.labels else tuple(f"s{i}" for i in range(m))
        if len(labels) != m:
            raise InvalidChain(f"{len(labels)} labels for {m} states")
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "R_plus", _frozen(rp))
        object.__setattr__(self, "R_minus", _frozen(rm))
        object.__setattr__(self, "initial", _frozen(init))
        object.__setattr__(self, "labels", labels)
        _check_transience(Q)

    @property
    def m(self):
        return self.Q.shape[0]

    @cached_property
    def N(self):
        return fundamental_matrix(self)

    @cached_property
    def success_value(self):
        # a = N R_plus: eventual-success probability from each state
        return self.N @ self.R_plus

    @classmethod
    def from_start_state(cls, Q, R_plus, R_minus, s0=0, labels=()):
        m = np.asarray(Q).shape[0]
        init = np.zeros(m)
        init[s0] = 1.0
        return cls(Q, R_plus, R_minus, init, labels)

    def to_dict(self):
        return {
            "m": self.m,
            "labels": list(self.labels),
            "Q": [float(x) for x in self.Q.ravel()],
            "R_plus": [float(x) for x in self.R_plus],
            "R_minus": [float(x) for x in self.R_minus],
            "initial": [float(x) for x in self.initial],
        }

    @classmethod
    def from_dict(cls, d):
        m = int(d["m"])
        Q = np.asarray(d["Q"], dtype=float).reshape(m, m)
        return cls(Q, d["R_plus"], d["R_minus"], d["initial"], tuple(d.get("labels") or ()))


def _check_transience(Q):
    if Q.shape[0] == 0:
        raise InvalidChain("chain needs at least one transient state")
    leak = Q.sum(axis=1) < 1.0 - 1e-12
    if leak.all():
        return
    # rho(Q) < 1 iff every state reaches a leaking row along positive entries;
    # power iteration alone creeps towards 1 on closed classes and can stop short
    adj = Q > 0
    reach = leak.copy()
    while True:
        grown = reach | (adj & reach[None, :]).any(axis=1)
        if np.array_equal(grown, reach):
            break
        reach = grown
    if not reach.all():
        raise TransienceViolated(f"states {np.flatnonzero(~reach).tolist()} never reach an absorber")
    try:
        rho = numerics.power_iteration_spectral_radius(Q)
    except NoConvergence:
        rho = float(np.max(np.abs(np.linalg.eigvals(Q))))
    if rho >= 1.0 - 1e-12:
        raise TransienceViolated(f"spectral radius {rho:.12g} is not below 1")


def save_chain(chain, path):
    with open(path, "w") as fh:
        json.dump(chain.to_dict(), fh, indent=2)


def load_chain(path):
    with open(path) as fh:
        return AgentMarkovChain.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# closed forms


def fundamental_matrix(chain):
    """``N = (I - Q)^{-1}``, expected visit counts before absorption."""
    try:
        N = numerics.inverse(np.eye(chain.m) - chain.Q)
    except SingularMatrix as exc:
        raise TransienceViolated(str(exc)) from exc
    return np.where((N < 0) & (N >= -1e-10), 0.0, N)


def reliability_infinity(chain):
    return float(min(1.0, max(0.0, chain.initial @ chain.success_value)))


def mtta(chain):
    """Mean number of steps until either absorber is hit."""
    return float(chain.initial @ chain.N.sum(axis=1))


def reliability_curve(chain, d_max):
    """``R(d)`` for ``d = 0 .. d_max`` as an array of length ``d_max + 1``.

    Uses the gap identity ``R_inf - R(d) = pi0 Q^d N R_plus`` with the row
    vector ``pi0 Q^d`` advanced one step at a time.
    """
    if d_max < 0:
        raise DomainError("d_max must be nonnegative")
    a = chain.success_value
    r_inf = float(chain.initial @ a)
    v = chain.initial.copy()
    out = np.empty(d_max + 1)
    for d in range(d_max + 1):
        out[d] = r_inf - v @ a
        v = v @ chain.Q
    out[0] = 0.0
    return np.clip(out, 0.0, None)


def reliability_at(chain, d):
    if d < 0:
        raise DomainError("horizon must be nonnegative")
    return float(reliability_curve(chain, int(d))[-1])


def success_fpt_cdf(chain, d_max):
    """Conditional success first-passage CDF ``P(tau+ <= d | success)``.

    Entry ``d`` of the returned array (``0 <= d <= d_max``) is
    ``R(d) / R_inf``; entry 0 is always 0.
    """
    r_inf = reliability_infinity(chain)
    if r_inf <= 1e-12:
        raise NoSuccessMass(f"R_inf = {r_inf:.3e}; conditional CDF undefined")
    cdf = reliability_curve(chain, d_max) / r_inf
    return np.minimum(np.maximum.accumulate(cdf), 1.0)


# ---------------------------------------------------------------------------
# simulation


class FptSample(NamedTuple):
    outcomes: np.ndarray  # SUCCESS, FAILURE or CAPPED per trajectory
    steps: np.ndarray  # absorption step (cap value for capped trajectories)
    cap_hits: int

    def success_steps(self):
        return self.steps[self.outcomes == SUCCESS]


class _StepTable:
    """Inverse-CDF sampler over ``{1..m, +, -}`` for every row at once.

    Row cumulative probabilities are stored in one flat array; the draw for
    state ``s`` and uniform ``u`` is the first entry of row ``s`` exceeding
    ``u``. A guide table of ``m + 2`` cells per row gives a starting point
    no later than the answer, so results match a per-row ``searchsorted``
    exactly. Each row ends at 1.0, so the search never leaves its row.
    """

    def __init__(self, chain):
        m = chain.m
        P = np.hstack([chain.Q, chain.R_plus[:, None], chain.R_minus[:, None]])
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        self.width = w = m + 2
        self.cum = cum.ravel()
        # cell edges pulled down slightly so rounding in floor(u * w) cannot skip the answer
        edges = np.maximum(np.arange(w) / w - 1e-9, 0.0)
        self.guide = np.concatenate([s * w + np.searchsorted(cum[s], edges, side="right") for s in range(m)])

    def draw(self, state, u):
        w = self.width
        cell = np.minimum((u * w).astype(np.int64), w - 1)
        f = self.guide[state * w + cell]
        need = np.flatnonzero(self.cum[f] <= u)
        while need.size:
            f[need] += 1
            need = need[self.cum[f[need]] <= u[need]]
        return f - state * w


def _block_rng(seed, block):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))


def _initial_states(chain, size, rng):
    cum = np.cumsum(chain.initial)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(size), side="right")


def sample_fpt(chain, n, seed, cap=STEP_CAP):
    """Simulate `n` trajectories from ``pi0`` and record outcome and absorption step.

    Trajectories are generated in fixed blocks of ``SIM_BLOCK``, each with its
    own generator derived from ``(seed, block index)``, so the output does not
    depend on how blocks are scheduled.
    """
    if n < 1:
        raise DomainError("need at least one trajectory")
    sampler = _StepTable(chain)
    m = chain.m
    outcomes = np.empty(n, dtype=np.int8)
    steps = np.empty(n, dtype=np.int64)
    for b, start in enumerate(range(0, n, SIM_BLOCK)):
        size = min(SIM_BLOCK, n - start)
        rng = _block_rng(seed, b)
        state = _initial_states(chain, size, rng)
        idx = np.arange(size)
        out = np.full(size, CAPPED, dtype=np.int8)
        stp = np.full(size, cap, dtype=np.int64)
        t = 0
        while idx.size and t < cap:
            t += 1
            col = sampler.draw(state, rng.random(idx.size))
            done = col >= m
            if done.any():
                hit = idx[done]
                out[hit] = np.where(col[done] == m, SUCCESS, FAILURE)
                stp[hit] = t
                keep = ~done
                idx, state = idx[keep], col[keep]
            else:
                state = col
        outcomes[start:start + size] = out
        steps[start:start + size] = stp
    return FptSample(outcomes, steps, int(np.sum(outcomes == CAPPED)))


def sample_paths(chain, n, rng, cap=STEP_CAP):
    """Simulate `n` full state paths.

    Returns ``(paths, outcomes)`` where ``paths[i]`` is the array of visited
    transient states (length = absorption step) and ``outcomes[i]`` is
    ``SUCCESS``, ``FAILURE`` or ``CAPPED``.
    """
    sampler = _StepTable(chain)
    m = chain.m
    state = _initial_states(chain, n, rng)
    idx = np.arange(n)
    outcomes = np.full(n, CAPPED, dtype=np.int8)
    rec_ids, rec_states = [idx], [state]
    t = 0
    while idx.size and t < cap:
        t += 1
        col = sampler.draw(state, rng.random(idx.size))
        done = col >= m
        outcomes[idx[done]] = np.where(col[done] == m, SUCCESS, FAILURE)
        keep = ~done
        idx, state = idx[keep], col[keep]
        if idx.size and t < cap:
            rec_ids.append(idx)
            rec_states.append(state)
    ids = np.concatenate(rec_ids)
    sts = np.concatenate(rec_states)
    order = np.argsort(ids, kind="stable")
    ids, sts = ids[order], sts[order]
    bounds = np.searchsorted(ids, np.arange(n + 1))
    paths = [sts[bounds[i]:bounds[i + 1]] for i in range(n)]
    return paths, outcomes


# ---------------------------------------------------------------------------
# horizons


def exact_horizon(chain, delta, relative=False, max_steps=10_000_000):
    """Smallest ``d`` with ``R_inf - R(d) <= delta`` (times ``R_inf`` if `relative`)."""
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    a = chain.success_value
    target = delta * reliability_infinity(chain) if relative else delta
    v = chain.initial.copy()
    for d in range(max_steps + 1):
        if v @ a <= target:
            return d
        v = v @ chain.Q
    raise NoConvergence(f"gap still above {target} after {max_steps} steps")


class HorizonBound(NamedTuple):
    d_star: int
    rho: float
    kappa: float


def spectral_horizon_bound(chain, delta):
    """Conservative horizon from ``kappa(V) rho^d |N R_plus|`` (diagonalisable Q)."""
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    try:
        w, V = numerics.eigendecompose(chain.Q)
    except DomainError as exc:
        raise NotDiagonalizable(str(exc)) from exc
    rho = float(np.max(np.abs(w)))
    kappa = float(numerics.inf_norm(V) * numerics.inf_norm(np.linalg.inv(V)))
    scale = kappa * numerics.inf_norm(chain.success_value)
    if delta >= scale:
        return HorizonBound(0, rho, kappa)
    if rho <= 0.0:
        return HorizonBound(1, rho, kappa)
    d = math.ceil(math.log(scale / delta) / -math.log(rho))
    return HorizonBound(max(0, d), rho, kappa)


# ---------------------------------------------------------------------------
# perturbation


@dataclass(frozen=True)
class PerturbationReport:
    epsilon: float
    first_order_delta: float
    upper_bound: float
    constant_C: float
    epsilon_max: float
    exact_delta: Optional[float] = None

    def to_dict(self):
        return dict(self.__dict__)


def perturbed_chain(chain, delta_matrix, epsilon):
    """Chain with ``Q + eps * Delta``; removed transient mass goes to failure."""
    D = numerics.as_matrix(delta_matrix, square=True)
    if D.shape != chain.Q.shape:
        raise DomainError(f"perturbation shape {D.shape} does not match Q {chain.Q.shape}")
    Q = chain.Q + epsilon * D
    R_minus = 1.0 - Q.sum(axis=1) - chain.R_plus
    if np.any(Q < -1e-12) or np.any(R_minus < -1e-12):
        raise SubstochasticityViolated(f"Q + {epsilon} * Delta leaves the substochastic set")
    if np.any(Q > 1 + 1e-12):
        raise SubstochasticityViolated("perturbed entries exceed 1")
    return AgentMarkovChain(np.clip(Q, 0, 1), chain.R_plus, np.clip(R_minus, 0, 1), chain.initial, chain.labels)


def perturb_analysis(chain, delta_matrix, epsilon, compute_exact=False, epsilon_max=None):
    """First-order change in ``R_inf`` under ``Q -> Q + eps * Delta`` and its bound.

    `epsilon_max` defaults to `epsilon`; it enters the remainder constant
    ``C = |N0|^3 |Delta|^2 |R+| / (1 - eps_max |N0| |Delta|)``.
    """
    D = numerics.as_matrix(delta_matrix, square=True)
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    eps_max = epsilon if epsilon_max is None else epsilon_max
    if eps_max < epsilon:
        raise DomainError("epsilon_max must be at least epsilon")
    N0 = chain.N
    n0 = numerics.inf_norm(N0)
    dn = numerics.inf_norm(D)
    rn = numerics.inf_norm(chain.R_plus)
    if eps_max * n0 * dn >= 1.0:
        raise SmallnessViolated(f"eps_max |N0| |Delta| = {eps_max * n0 * dn:.4g} >= 1")
    # substochasticity is a precondition whether or not the exact value is wanted
    pert = perturbed_chain(chain, D, epsilon)
    first = float(epsilon * (chain.initial @ N0 @ D @ N0 @ chain.R_plus))
    C = n0 ** 3 * dn ** 2 * rn / (1.0 - eps_max * n0 * dn)
    bound = epsilon * n0 ** 2 * dn * rn + C * epsilon ** 2
    exact = None
    if compute_exact:
        exact = reliability_infinity(pert) - reliability_infinity(chain)
    return PerturbationReport(float(epsilon), first, float(bound), float(C), float(eps_max), exact)


# ---------------------------------------------------------------------------
# repeated trials


class PassMetrics(NamedTuple):
    pass_k: float
    pass_at_k: float


class CorrelatedPassMetrics(NamedTuple):
    pass_k: float
    pass_at_k: float
    jensen_gap: float


def pass_metrics(r_infinity, k):
    """``pass^k = R^k`` and ``pass@k = 1 - (1 - R)^k`` for i.i.d. trials."""
    if not 0.0 <= r_infinity <= 1.0 or k < 1 or int(k) != k:
        raise DomainError(f"pass metrics undefined for R={r_infinity}, k={k}")
    return PassMetrics(r_infinity ** k, 1.0 - (1.0 - r_infinity) ** k)


def correlated_pass_metrics(mixture: Sequence[tuple], k):
    """Repeated-trial metrics when trials share a latent success probability.

    `mixture` is a sequence of ``(weight, p)`` pairs. The Jensen gap
    ``pass^k - (E p)^k`` is nonnegative and vanishes iff ``p`` is constant.
    """
    if k < 1 or int(k) != k:
        raise DomainError("k must be a positive integer")
    w = np.array([c[0] for c in mixture], dtype=float)
    p = np.array([c[1] for c in mixture], dtype=float)
    if w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError("mixture weights must be nonnegative and sum to 1")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("component success probabilities must lie in [0, 1]")
    mean = float(w @ p)
    pk = float(w @ p ** k)
    pak = float(1.0 - w @ (1.0 - p) ** k)
    return CorrelatedPassMetrics(pk, pak, pk - mean ** k)


# ---------------------------------------------------------------------------
# curve shape and rare-failure limit


class ShapeProfile(NamedTuple):
    first_diffs: np.ndarray  # index d -> R(d+1) - R(d), d = 0 .. d_max-1
    second_diffs: np.ndarray  # index d-1 -> R(d+1) - 2R(d) + R(d-1), d = 1 .. d_max-1
    qw_dominated: bool


def rdc_shape_profile(chain, d_max):
    if d_max < 2:
        raise DomainError("d_max must be at least 2")
    Q = chain.Q
    w = chain.R_plus
    u = w - Q @ w
    v = chain.initial.copy()
    first = np.empty(d_max)
    second = np.empty(d_max - 1)
    for d in range(d_max):
        first[d] = v @ w
        if d + 1 < d_max:
            second[d] = -(v @ u)
        v = v @ Q
    return ShapeProfile(first, second, bool(np.all(Q @ w <= w + 1e-12)))


@dataclass(frozen=True)
class NhppScaling:
    """One-state chain with per-step success `mu`, failure `eps`, horizon unit `horizon`."""

    mu: float
    eps: float
    horizon: int
    lambda_target: float

    def __post_init__(self):
        if not (self.mu > 0 and self.eps >= 0 and self.mu + self.eps <= 1):
            raise DomainError(f"invalid rates mu={self.mu}, eps={self.eps}")
        if self.horizon < 1:
            raise DomainError("horizon must be positive")

    @classmethod
    def regime(cls, mu, failure_ratio=0.1, lambda_target=2.0):
        return cls(mu, failure_ratio * mu, math.ceil(lambda_target / mu - 1e-9), lambda_target)


def nhpp_curves(scaling, grid):
    """Exact one-state first-passage CDF vs the Goel-Okumoto limit on a ``c`` grid."""
    c = np.asarray(grid, dtype=float)
    if np.any(c < 0) or np.any(np.diff(c) <= 0):
        raise DomainError("grid must be nonnegative and increasing")
    mu, eps = scaling.mu, scaling.eps
    d = np.ceil(c * scaling.horizon - 1e-9)
    exact = mu / (mu + eps) * (1.0 - (1.0 - mu - eps) ** d)
    limit = 1.0 - np.exp(-c * scaling.lambda_target)
    return exact, limit
