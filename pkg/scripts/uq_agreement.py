"""Posterior vs bootstrap interval widths on archetype corpora."""

import argparse
from pathlib import Path

import numpy as np

from agentrel import estimate as est
from agentrel import uncertainty as uq
from agentrel.simulate import MAST_STYLE, archetype_corpus, get_archetype
from agentrel.studies import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--B", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--slow", action="store_true", help="re-cluster every replicate")
    ap.add_argument("--out", default="results/uq")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in MAST_STYLE:
        corpus, _ = archetype_corpus(get_archetype(name), args.n, args.seed)
        fitted = est.fit(corpus)
        post = uq.posterior_intervals(fitted.counts, fitted.alpha)
        boot = uq.bootstrap_intervals(corpus, fitted, B=args.B, fast=not args.slow, seed=args.seed)
        m = fitted.m
        rows.append({"framework": name, "m": m, "posterior_median": post.median_width,
                     "bootstrap_median": boot.median_width,
                     "abs_diff": abs(post.median_width - boot.median_width),
                     "abs_diff_Q": abs(np.median(post.widths[:, :m]) - np.median(boot.widths[:, :m]))})
    cols = ["framework", "m", "posterior_median", "bootstrap_median", "abs_diff", "abs_diff_Q"]
    write_csv(out / "uq_agreement.csv", cols, rows)
    for r in rows:
        print(f"{r['framework']:11s} posterior {r['posterior_median']:.4f}  bootstrap {r['bootstrap_median']:.4f}"
              f"  |diff| {r['abs_diff']:.4f}")


if __name__ == "__main__":
    main()
