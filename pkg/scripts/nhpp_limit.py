"""One-state chains in the rare-failure scaling vs the Goel-Okumoto curve.

Runs the six regimes ``mu in {0.2, ..., 0.005}`` twice: once with
``eps = 0.1 mu`` (the failure share stays fixed, so the exact curve
tends to ``(1/1.1)(1 - e^{-1.1 c L})``) and once with ``eps = mu^2``
(``eps / mu -> 0``, the regime in which the limit holds).
"""

import argparse
from pathlib import Path

import numpy as np

from agentrel.chain import NhppScaling, nhpp_curves
from agentrel.plots import save_line_chart
from agentrel.studies import write_csv

MUS = (0.2, 0.1, 0.05, 0.02, 0.01, 0.005)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--c-max", type=float, default=3.0)
    ap.add_argument("--out", default="results/nhpp")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0.0, args.c_max, 601)
    rows = []
    for label, ratio in (("eps=0.1mu", lambda mu: 0.1), ("eps=mu^2", lambda mu: mu)):
        series = []
        for mu in MUS:
            sc = NhppScaling.regime(mu, failure_ratio=ratio(mu), lambda_target=args.lam)
            exact, limit = nhpp_curves(sc, grid)
            rows.append({"scaling": label, "mu": mu, "eps": sc.eps, "d_n": sc.horizon,
                         "sup_distance": float(np.abs(exact - limit).max())})
            series.append({"x": grid, "y": exact, "label": f"mu={mu:g}"})
        series.append({"x": grid, "y": limit, "label": "1 - exp(-c L)", "dashed": True, "color": "#000000"})
        save_line_chart(out / f"nhpp_{label.replace('=', '_').replace('^', '')}.svg", series,
                        title=f"rare-failure limit, {label}", xlabel="c = d / d_n", ylabel="R_n(c d_n)", ylim=(0, 1))
    write_csv(out / "nhpp.csv", ["scaling", "mu", "eps", "d_n", "sup_distance"], rows)
    for r in rows:
        print(f"{r['scaling']:10s} mu={r['mu']:<6g} sup distance {r['sup_distance']:.5f}")


if __name__ == "__main__":
    main()
