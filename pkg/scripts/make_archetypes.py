"""Regenerate the bundled archetype specs under src/agentrel/data/archetypes.

Each ground truth is a workflow cycle over the archetype's taxonomy with
seeded Dirichlet jitter. Row exit mass is scaled so that the spectral radius
hits a target, and the success share of the exits is scaled to hit a target
``R_inf``. Targets for the seven MAST-style frameworks follow a reference
``R_inf`` and ``rho(Q)`` ranking; the cross-benchmark targets are made up.

Thirty percent of the start mass sits on the first label, the rest is spread
over all states, and a draw is rejected unless every state expects at least
``MIN_VISITS`` visits per trace, so that every row of Q is estimable from a
few hundred traces.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from agentrel.chain import AgentMarkovChain, reliability_infinity
from agentrel.numerics import power_iteration_spectral_radius
from agentrel.simulate import ArchetypeSpec

# name: (group, labels, R_inf target, rho target)
TARGETS = {
    "react": ("mast_style", ["plan", "tool_call", "observe", "reflect", "error_parse"], 0.0581, 0.509),
    "reflexion": ("mast_style", ["plan", "tool_call", "reflect", "retry", "error_parse"], 0.0695, 0.636),
    "cot_agent": ("mast_style", ["think", "plan", "tool_call", "verify", "retry"], 0.0684, 0.526),
    "toolformer": ("mast_style", ["plan", "tool_call", "tool_result", "retry", "error_parse"], 0.4497, 0.442),
    "babyagi": ("mast_style", ["task_create", "prioritize", "plan", "tool_call", "reflect", "wait"], 0.2853, 0.656),
    "autogpt": ("mast_style", ["plan", "tool_call", "observe", "reflect", "retry", "error_parse"], 0.3866, 0.370),
    "agentbench": ("mast_style", ["plan", "tool_call", "observe", "reflect", "wait"], 0.3262, 0.654),
    "swe_bench": ("cross_benchmark", ["repo_setup", "issue_read", "search", "edit_file", "test_run"], 0.30, 0.60),
    "tau_bench": ("cross_benchmark", ["user_intent", "api_call", "api_resp", "user_clarify", "confirm"], 0.55, 0.50),
    "agentbench_env": ("cross_benchmark", ["think", "act", "observe"], 0.35, 0.55),
}


MIN_VISITS = 0.15


def build(name, seed, max_tries=100):
    for attempt in range(max_tries):
        spec = _draw(name, np.random.default_rng([*seed, attempt]))
        c = spec.ground_truth
        if (c.initial @ c.N).min() >= MIN_VISITS:
            return spec
    raise RuntimeError(f"{name}: no draw with every state visited {MIN_VISITS} times per trace")


def _draw(name, rng):
    group, labels, r_target, rho_target = TARGETS[name]
    m = len(labels)
    P = rng.dirichlet(np.full(m, 0.8), size=m)
    for i in range(m):
        P[i, (i + 1) % m] += 1.5  # workflow successor
    P /= P.sum(axis=1, keepdims=True)
    keep = rng.uniform(0.7, 1.0, size=m)  # relative continuation per row
    lo, hi = 0.0, 1.0 / keep.max()
    for _ in range(100):
        s = 0.5 * (lo + hi)
        if power_iteration_spectral_radius(P * (s * keep)[:, None]) < rho_target:
            lo = s
        else:
            hi = s
    Q = P * (lo * keep)[:, None]
    exits = 1.0 - Q.sum(axis=1)
    g = rng.uniform(0.2, 1.0, size=m)
    g[-1] *= 0.5
    init = 0.7 * rng.dirichlet(np.full(m, 4.0))
    init[0] += 0.3
    unit = reliability_infinity(AgentMarkovChain(Q, exits * g / g.max(), exits * (1 - g / g.max()), init))
    scale = r_target / unit
    if scale > 1.0:
        raise ValueError(f"{name}: R_inf target {r_target} unreachable")
    share = g / g.max() * scale
    chain = AgentMarkovChain(Q, exits * share, exits * (1 - share), init, tuple(labels))
    return ArchetypeSpec(name, tuple(labels), chain, 0.08, 0.05, group)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/agentrel/data/archetypes"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, name in enumerate(TARGETS):
        spec = build(name, [args.seed, k])
        with open(out / f"{name}.json", "w") as fh:
            json.dump(spec.to_dict(), fh, indent=1)
        c = spec.ground_truth
        visits = (c.initial @ c.N).min()
        print(f"{name:15s} m={c.m} R_inf={reliability_infinity(c):.4f} "
              f"rho={power_iteration_spectral_radius(c.Q):.3f} min_visits={visits:.3f}")


if __name__ == "__main__":
    main()
