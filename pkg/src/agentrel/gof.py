"""Composite goodness-of-fit certificate: first-passage KS test and AIC order test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics
from .chain import sample_fpt, success_fpt_cdf
from .errors import NoSuccesses

ALPHA_KS = 0.05
MODEL_SAMPLE_SIZE = 8000
CDF_SLACK = 200


@dataclass(frozen=True)
class GofCertificate:
    d_ks: float
    p_ks: float
    delta_aic: Optional[float]
    accepted: bool
    n_success_traces: int
    model_cdf_mode: dict
    alpha_ks: float = ALPHA_KS
    ks_approximation: str = "asymptotic Kolmogorov, no small-sample correction"

    @property
    def ks_ok(self):
        return self.p_ks > self.alpha_ks

    @property
    def aic_ok(self):
        return self.delta_aic is not None and self.delta_aic > 0

    def to_dict(self):
        return dict(self.__dict__)


def empirical_success_fpts(corpus):
    """Step counts of the successful traces, in corpus order."""
    fpts = np.array([t.length for t in corpus if t.outcome == "success"], dtype=np.int64)
    if fpts.size == 0:
        raise NoSuccesses("corpus contains no successful trace")
    return fpts


def certify(corpus, fitted, mode="analytic", n_model=MODEL_SAMPLE_SIZE, seed=0, alpha_ks=ALPHA_KS):
    """Accept the fitted chain iff ``p_KS > alpha_ks`` and ``delta_AIC > 0``.

    In ``"analytic"`` mode the empirical success times are compared with the
    model's conditional first-passage CDF (one-sample limit). In
    ``"sampled"`` mode `n_model` trajectories are simulated and the success
    times of that sample enter a two-sample test.
    """
    fpts = empirical_success_fpts(corpus)
    chain = fitted.chain
    if mode == "analytic":
        d_max = int(fpts.max()) + CDF_SLACK
        cdf = success_fpt_cdf(chain, d_max)
        d, p = numerics.ks_one_sample_discrete(fpts, np.arange(1, d_max + 1), cdf[1:])
        mode_info = {"mode": "analytic", "d_max": d_max}
    elif mode == "sampled":
        model = sample_fpt(chain, n_model, seed).success_steps()
        if model.size == 0:
            raise NoSuccesses(f"no successful trajectory among {n_model} model samples")
        d, p = numerics.ks_two_sample(fpts, model)
        mode_info = {"mode": "sampled", "n": int(n_model), "seed": int(seed), "n_model_successes": int(model.size)}
    else:
        raise ValueError(f"unknown model CDF mode {mode!r}")
    delta_aic = fitted.delta_aic
    accepted = bool(p > alpha_ks and delta_aic is not None and delta_aic > 0)
    return GofCertificate(d, p, delta_aic, accepted, int(fpts.size), mode_info, alpha_ks)
