"""Exact step budgets vs the spectral horizon bound on the shipped archetypes."""

import argparse
from pathlib import Path

from agentrel.chain import exact_horizon, spectral_horizon_bound
from agentrel.errors import NotDiagonalizable
from agentrel.plots import save_line_chart
from agentrel.simulate import shipped_archetypes
from agentrel.studies import write_csv

DELTAS = (0.1, 0.05, 0.02, 0.01, 0.005, 0.001)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/horizons")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, series = [], []
    for spec in shipped_archetypes():
        c = spec.ground_truth
        exact, bound = [], []
        for delta in DELTAS:
            d = exact_horizon(c, delta)
            try:
                hb = spectral_horizon_bound(c, delta)
                b, rho, kappa = hb.d_star, hb.rho, hb.kappa
            except NotDiagonalizable:
                b, rho, kappa = None, None, None
            rows.append({"archetype": spec.name, "delta": delta, "exact": d, "spectral": b, "rho": rho, "kappa": kappa})
            exact.append(d)
            bound.append(b)
        series.append({"x": list(DELTAS), "y": exact, "label": spec.name})
    write_csv(out / "horizons.csv", ["archetype", "delta", "exact", "spectral", "rho", "kappa"], rows)
    save_line_chart(out / "horizons.svg", series, title="exact step budget", xlabel="delta", ylabel="d*")
    slack = [r["spectral"] - r["exact"] for r in rows if r["spectral"] is not None]
    print(f"{len(rows)} (archetype, delta) pairs; spectral bound minus exact horizon in [{min(slack)}, {max(slack)}]")


if __name__ == "__main__":
    main()
