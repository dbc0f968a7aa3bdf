"""Sweep the perturbation size and compare the exact change in R_inf with the bound.

For each random chain a direction ``Delta = target - Q`` is drawn (so
``Q + eps Delta`` stays substochastic for ``eps <= 1``) and ``eps`` runs
over a grid up to the smallness limit.
"""

import argparse
from pathlib import Path

import numpy as np

from agentrel import numerics
from agentrel.chain import perturb_analysis
from agentrel.plots import save_line_chart
from agentrel.simulate import random_substochastic_chain
from agentrel.studies import write_csv


def sweep(n_chains, m, seed, n_eps=12):
    rows = []
    for i in range(n_chains):
        rng = np.random.default_rng([seed, i])
        c = random_substochastic_chain(m, [seed, i])
        target = rng.dirichlet(np.ones(m), size=m) * (1 - c.R_plus)[:, None] * rng.uniform(0.2, 1, (m, 1))
        D = target - c.Q
        eps_max = min(1.0, 0.9 / (numerics.inf_norm(c.N) * numerics.inf_norm(D)))
        for frac in np.linspace(1.0 / n_eps, 1.0, n_eps):
            eps = frac * eps_max
            rep = perturb_analysis(c, D, eps, compute_exact=True, epsilon_max=eps_max)
            rows.append({"chain": i, "eps_frac": frac, "eps": eps, "exact": rep.exact_delta,
                         "first_order": rep.first_order_delta, "bound": rep.upper_bound,
                         "remainder_ratio": abs(rep.exact_delta - rep.first_order_delta) / (rep.constant_C * eps ** 2)})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--chains", type=int, default=100)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/perturbation")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep(args.chains, args.m, args.seed)
    cols = ["chain", "eps_frac", "eps", "exact", "first_order", "bound", "remainder_ratio"]
    write_csv(out / "perturbation.csv", cols, rows)

    fracs = sorted({r["eps_frac"] for r in rows})
    tight = [max(abs(r["exact"]) / r["bound"] for r in rows if r["eps_frac"] == f and r["bound"] > 0) for f in fracs]
    rem = [max(r["remainder_ratio"] for r in rows if r["eps_frac"] == f) for f in fracs]
    save_line_chart(out / "perturbation.svg",
                    [{"x": fracs, "y": tight, "label": "max |exact| / bound"},
                     {"x": fracs, "y": rem, "label": "max remainder / (C eps^2)", "dashed": True}],
                    title="perturbation bound tightness", xlabel="eps / eps_max", ylabel="ratio")
    held = sum(r["bound"] >= abs(r["exact"]) for r in rows)
    print(f"bound held in {held}/{len(rows)} cases; worst |exact|/bound {max(tight):.3f}; "
          f"worst remainder ratio {max(rem):.3g}")


if __name__ == "__main__":
    main()
