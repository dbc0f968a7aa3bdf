"""Ground-truth chains and synthetic trace corpora for the validation studies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .chain import CAPPED, SUCCESS, AgentMarkovChain, sample_paths
from .errors import DomainError
from .traces import Step, Trace, TraceCorpus

MIN_EXIT_MASS = 0.02
ARCHETYPE_DIR = "data/archetypes"
MAST_STYLE = ("react", "reflexion", "cot_agent", "toolformer", "babyagi", "autogpt", "agentbench")
CROSS_BENCHMARK = ("swe_bench", "tau_bench", "agentbench_env")


@dataclass(frozen=True)
class ArchetypeSpec:
    name: str
    state_labels: tuple
    ground_truth: AgentMarkovChain
    noise_sigma: float = 0.08
    censor_rate: float = 0.05
    group: str = "mast_style"

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be nonnegative")
        if not 0.0 <= self.censor_rate < 1.0:
            raise DomainError("censor_rate must lie in [0, 1)")
        if len(self.state_labels) != self.ground_truth.m:
            raise DomainError("one label per ground-truth state required")

    @property
    def flip_probability(self):
        return flip_probability(self.noise_sigma)

    def to_dict(self):
        c = self.ground_truth
        return {"name": self.name, "group": self.group, "labels": list(self.state_labels), "m": c.m,
                "Q": c.Q.tolist(), "R_plus": c.R_plus.tolist(), "R_minus": c.R_minus.tolist(),
                "initial": c.initial.tolist(), "noise_sigma": self.noise_sigma, "censor_rate": self.censor_rate}

    @classmethod
    def from_dict(cls, d):
        labels = tuple(d["labels"])
        m = len(labels)
        chain = AgentMarkovChain(np.asarray(d["Q"], dtype=float).reshape(m, m), d["R_plus"], d["R_minus"],
                                 d["initial"], labels)
        return cls(d["name"], labels, chain, float(d.get("noise_sigma", 0.08)),
                   float(d.get("censor_rate", 0.05)), d.get("group", "mast_style"))


def flip_probability(sigma):
    """Chance that N(0, sigma^2) noise pushes an indicator across 0.5: ``2 Phi(-0.5 / sigma)``."""
    if sigma <= 0:
        return 0.0
    return math.erfc(0.5 / sigma / math.sqrt(2.0))


def random_substochastic_chain(m, seed, min_exit=MIN_EXIT_MASS):
    """Rows ~ Dirichlet(1) over ``m + 2`` outcomes, exit mass raised to at least `min_exit`."""
    if m < 1:
        raise DomainError("m must be positive")
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(m + 2), size=m)
    exit_mass = P[:, m:].sum(axis=1)
    low = exit_mass < min_exit
    if low.any():
        ex = P[low, m:]
        ex_mass = exit_mass[low]
        safe = np.where(ex_mass > 0, ex_mass, 1.0)
        ex = np.where(ex_mass[:, None] > 0, ex * (min_exit / safe)[:, None], min_exit / 2)
        tr = P[low, :m] * ((1.0 - min_exit) / (1.0 - ex_mass))[:, None]
        P[low] = np.hstack([tr, ex])
    return AgentMarkovChain(P[:, :m], P[:, m], P[:, m + 1], np.full(m, 1.0 / m))


def _states_step(label):
    return Step(label, retry="retry" in label, error_code="parse_error" if label.startswith("error") else None)


def chain_corpus(chain, n_traces, seed, labels=None, noise_sigma=0.0, censor_rate=0.0, name="corpus"):
    """Sample traces from `chain`; state ``i`` emits the step for ``labels[i]``.

    With probability ``flip_probability(noise_sigma)`` a step's emission is
    replaced by that of a uniformly chosen other state. Each trace is
    censored with probability `censor_rate`: it keeps a uniformly chosen
    prefix of its steps and its outcome becomes ``"censored"``.
    """
    if n_traces < 1:
        raise DomainError("n_traces must be positive")
    labels = tuple(labels or chain.labels)
    m = chain.m
    rng = np.random.default_rng(seed)
    paths, outcomes = sample_paths(chain, n_traces, rng)
    p_flip = flip_probability(noise_sigma)
    steps_for = [_states_step(lab) for lab in labels]
    traces = []
    for i, (path, out) in enumerate(zip(paths, outcomes)):
        emitted = path
        if p_flip > 0 and m > 1:
            flip = rng.random(path.size) < p_flip
            if flip.any():
                emitted = path.copy()
                shift = rng.integers(1, m, size=int(flip.sum()))
                emitted[flip] = (path[flip] + shift) % m
        outcome = "success" if out == SUCCESS else ("censored" if out == CAPPED else "failure")
        if censor_rate > 0 and rng.random() < censor_rate:
            keep = int(rng.integers(1, path.size + 1))
            emitted = emitted[:keep]
            outcome = "censored"
        traces.append(Trace(f"{name}-{i:05d}", tuple(steps_for[s] for s in emitted), outcome))
    return TraceCorpus(traces, provenance=f"{name}: n={n_traces}, seed={seed}, sigma={noise_sigma}, censor={censor_rate}")


def archetype_corpus(spec, n_traces, seed):
    corpus = chain_corpus(spec.ground_truth, n_traces, seed, spec.state_labels, spec.noise_sigma,
                          spec.censor_rate, name=spec.name)
    return corpus, spec.ground_truth


def second_order_kernels(m, seed, exit_mass=0.01, concentration=0.2):
    """Two distinct first-order kernels over ``{1..m, +, -}`` with equal exit rows.

    ``K_B`` is ``K_A`` with its transient columns rotated by the offset that
    maximises the total-variation distance between the two kernels, so they
    differ in where they send mass but not in their exits.
    """
    if m < 2:
        raise DomainError("a second-order law needs at least two states")
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.full(m, concentration), size=m) * (1.0 - exit_mass)
    share = rng.uniform(0.3, 0.7)
    exits = np.tile([exit_mass * share, exit_mass * (1.0 - share)], (m, 1))
    KA = np.hstack([T, exits])
    shift = max(range(1, m), key=lambda r: np.abs(T - np.roll(T, r, axis=1)).sum())
    KB = np.hstack([np.roll(T, shift, axis=1), exits])
    return KA, KB


def second_order_corpus(m, weight, n_traces, seed, same_kernels=False, exit_mass=0.01):
    """Corpus from an explicitly second-order law.

    With ``P_ev = w K_A + (1 - w) K_B`` and ``P_odd = w K_B + (1 - w) K_A``,
    the next outcome from current state ``c`` is drawn from ``P_ev(c)`` when
    the previous state has an even index (and on a trace's first step) and
    from ``P_odd(c)`` otherwise. Steps are exact one-hot emissions ``s<i>``.
    """
    if not 0.0 <= weight <= 1.0:
        raise DomainError("weight must lie in [0, 1]")
    KA, KB = second_order_kernels(m, seed, exit_mass)
    if same_kernels:
        KB = KA
    even = np.cumsum(weight * KA + (1.0 - weight) * KB, axis=1)
    odd = np.cumsum(weight * KB + (1.0 - weight) * KA, axis=1)
    even[:, -1] = odd[:, -1] = 1.0
    rng = np.random.default_rng([seed, 1])
    steps = [Step(f"s{i}") for i in range(m)]
    traces = []
    for i in range(n_traces):
        cur = int(rng.integers(m))
        prev_even = True
        path = [cur]
        while True:
            table = even if prev_even else odd
            nxt = int(np.searchsorted(table[cur], rng.random(), side="right"))
            if nxt >= m:
                outcome = "success" if nxt == m else "failure"
                break
            prev_even = cur % 2 == 0
            cur = nxt
            path.append(cur)
        traces.append(Trace(f"so-{seed}-{i:05d}", tuple(steps[s] for s in path), outcome))
    return TraceCorpus(traces, provenance=f"second-order: m={m}, weight={weight}, n={n_traces}, seed={seed}")


def load_archetype(path):
    with open(path) as fh:
        return ArchetypeSpec.from_dict(json.load(fh))


def shipped_archetypes():
    """The bundled MAST-style and cross-benchmark archetype specs."""
    root = resources.files("agentrel").joinpath(ARCHETYPE_DIR)
    specs = []
    for name in MAST_STYLE + CROSS_BENCHMARK:
        with root.joinpath(f"{name}.json").open() as fh:
            specs.append(ArchetypeSpec.from_dict(json.load(fh)))
    return specs


def get_archetype(name):
    for spec in shipped_archetypes():
        if spec.name == name:
            return spec
    raise KeyError(f"no shipped archetype named {name!r}")
