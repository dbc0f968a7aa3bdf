"""Absorbing-chain reliability analysis of LLM-agent traces.

Fit an absorbing discrete-time Markov chain to step-level traces, certify
the fit, attach intervals to its entries and answer reliability queries
(eventual success, finite-horizon success, mean time to absorption,
horizons, repeated-trial metrics and perturbation bounds).
"""

__version__ = "0.1.0"

from .chain import (AgentMarkovChain, exact_horizon, load_chain, mtta, pass_metrics, perturb_analysis,
                    reliability_at, reliability_curve, reliability_infinity, sample_fpt, save_chain,
                    spectral_horizon_bound, success_fpt_cdf)
from .estimate import FitConfig, FittedChain, fit
from .gof import GofCertificate, certify
from .traces import Step, Trace, TraceCorpus, load_corpus, save_corpus
from .uncertainty import CredibleTable, bootstrap_intervals, posterior_intervals, propagate_interval

__all__ = [
    "AgentMarkovChain", "CredibleTable", "FitConfig", "FittedChain", "GofCertificate", "Step", "Trace",
    "TraceCorpus", "bootstrap_intervals", "certify", "exact_horizon", "fit", "load_chain", "load_corpus", "mtta",
    "pass_metrics", "perturb_analysis", "posterior_intervals", "propagate_interval", "reliability_at",
    "reliability_curve", "reliability_infinity", "sample_fpt", "save_chain", "save_corpus",
    "spectral_horizon_bound", "success_fpt_cdf",
]
