"""Reproducible validation studies.

Every study takes ``seed`` and ``scale`` (fraction of the full case count)
and returns a :class:`StudyReport` whose verdict is recomputed from its rows.
Count thresholds are applied as fractions, so reduced-scale runs use the
same rates; the thresholds are only meaningful at scale 1.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import (SUCCESS, exact_horizon, mtta, reliability_curve, reliability_infinity, sample_fpt)
from .estimate import fit
from .gof import certify
from .numerics import power_iteration_spectral_radius
from .plots import PALETTE, save_line_chart
from .simulate import (CROSS_BENCHMARK, MAST_STYLE, archetype_corpus, chain_corpus, get_archetype,
                       random_substochastic_chain, second_order_corpus)
from .traces import empirical_rdc, split_corpus

STUDY_IDS = ("ss1", "ss7a", "ss7b", "ss7c", "ss9", "ss6", "archetypes")
SS7A_CHAIN_SEED = 7  # the "known" first-order chain
RDC_D_MAX = 50


@dataclass
class StudyReport:
    study_id: str
    config: dict
    columns: tuple
    rows: list
    verdict: bool = False
    summary: dict = field(default_factory=dict)
    seconds: float = 0.0
    curves: list = field(default_factory=list)  # plot payloads, not part of the verdict

    @property
    def config_hash(self):
        return config_hash(self.config)

    def to_dict(self):
        return {"study_id": self.study_id, "config": self.config, "config_hash": self.config_hash,
                "seed": self.config.get("seed"), "columns": list(self.columns), "rows": self.rows,
                "verdict": self.verdict, "summary": self.summary, "seconds": self.seconds}

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{self.study_id}_report.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, default=_jsonable)
        write_csv(out / f"{self.study_id}.csv", self.columns, self.rows)
        written = []
        for k, plot in enumerate(self.curves):
            path = out / f"{self.study_id}_{plot.get('name', k)}.svg"
            save_line_chart(path, plot["series"], title=plot.get("title", ""), xlabel=plot.get("xlabel", ""),
                            ylabel=plot.get("ylabel", ""), ylim=plot.get("ylim"))
            written.append(str(path))
        return written


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=_jsonable).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def _n_cases(full, scale):
    return max(1, int(math.ceil(full * scale - 1e-9)))


def _seed_int(*parts):
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _rdc_series(chain, corpus, label, color, d_max=RDC_D_MAX):
    d = np.arange(d_max + 1)
    series = [{"x": d, "y": reliability_curve(chain, d_max), "label": label, "color": color}]
    if corpus is not None:
        series.append({"x": d, "y": empirical_rdc(corpus, d_max), "label": f"{label} (emp.)", "color": color,
                       "dashed": True})
    return series


# ---------------------------------------------------------------------------
# verdicts (rows only)


def verdict_ss1(rows, config):
    return bool(rows) and max(r["abs_error"] for r in rows) < config["threshold"]


def verdict_ss7a(rows, config):
    return sum(r["accepted"] for r in rows) >= math.ceil(config["min_retained"] * len(rows) - 1e-9)


def verdict_ss7b(rows, config):
    n = len(rows)
    return (all(r["delta_aic"] < 0 for r in rows)
            and sum(r["ks_reject"] for r in rows) <= math.floor(config["max_ks_reject"] * n + 1e-9))


def verdict_ss7c(rows, config):
    return sum(r["accepted"] for r in rows) >= math.ceil(config["min_accepted"] * len(rows) - 1e-9)


def verdict_ss9(rows, config):
    n_ok = sum(r["p_KS"] > config["alpha_ks"] for r in rows)
    return (n_ok >= math.ceil(config["min_ks_pass"] * len(rows) - 1e-9)
            and max(r["L_inf_RDC"] for r in rows) <= config["max_linf"])


def verdict_ss6(rows, config):
    r = [row["R_inf"] for row in rows]
    by = {row["framework"]: row["R_inf"] for row in rows}
    ordered = all(a >= b for a, b in zip(r, r[1:]))
    return ordered and by.get("toolformer", 0.0) > by.get("react", 1.0) and all(row["rho"] < 1 for row in rows)


def verdict_archetypes(rows, config):
    return len(rows) == len(config["archetypes"]) and all(
        0.0 <= row["R_inf"] <= 1.0 and row["rho"] < 1.0 and np.isfinite(row["mtta"]) for row in rows)


VERDICTS = {"ss1": verdict_ss1, "ss7a": verdict_ss7a, "ss7b": verdict_ss7b, "ss7c": verdict_ss7c,
            "ss9": verdict_ss9, "ss6": verdict_ss6, "archetypes": verdict_archetypes}


def _finish(report, t0):
    report.verdict = VERDICTS[report.study_id](report.rows, report.config)
    report.seconds = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# studies


def ss1(seed=0, scale=1.0, sizes=(5, 10, 50), n_chains=500, n_mc=100_000, threshold=0.05):
    """Closed-form ``R_inf`` against Monte Carlo on random substochastic chains."""
    t0 = time.perf_counter()
    n = _n_cases(n_chains, scale)
    cfg = {"study": "ss1", "seed": seed, "scale": scale, "sizes": list(sizes), "n_chains": n, "n_mc": n_mc,
           "threshold": threshold}
    rows = []
    for m in sizes:
        for i in range(n):
            chain = random_substochastic_chain(m, [seed, m, i])
            r_cf = reliability_infinity(chain)
            sim = sample_fpt(chain, n_mc, _seed_int(seed, m, i, 1))
            r_mc = float(np.mean(sim.outcomes == SUCCESS))
            rows.append({"m": m, "chain": i, "r_closed_form": r_cf, "r_monte_carlo": r_mc,
                         "abs_error": abs(r_cf - r_mc), "cap_hits": sim.cap_hits})
    by_m = {m: [r["abs_error"] for r in rows if r["m"] == m] for m in sizes}
    summary = {"max_abs_error": {str(m): max(v) for m, v in by_m.items()},
               "mean_abs_error": {str(m): float(np.mean(v)) for m, v in by_m.items()}}
    curves = [{"name": "errors", "title": "closed-form vs Monte Carlo R_inf", "xlabel": "chain size m",
               "ylabel": "|error|", "series": [
                   {"x": list(sizes), "y": [max(by_m[m]) for m in sizes], "label": "max"},
                   {"x": list(sizes), "y": [float(np.mean(by_m[m])) for m in sizes], "label": "mean", "dashed": True},
                   {"x": list(sizes), "y": [threshold] * len(sizes), "label": "threshold", "color": "#7f7f7f"}]}]
    rep = StudyReport("ss1", cfg, ("m", "chain", "r_closed_form", "r_monte_carlo", "abs_error", "cap_hits"), rows,
                      summary=summary, curves=curves)
    return _finish(rep, t0)


def _gof_row(corpus, fitted, mode="analytic", seed=0):
    cert = certify(corpus, fitted, mode=mode, seed=seed)
    return cert, {"m": fitted.m, "delta_aic": cert.delta_aic if cert.delta_aic is not None else float("nan"),
                  "D_KS": cert.d_ks, "p_KS": cert.p_ks, "accepted": cert.accepted}


def ss7a(seed=0, scale=1.0, n_corpora=30, n_traces=300, m=5, min_retained=0.9):
    """Type-I control: corpora drawn from a known first-order chain."""
    t0 = time.perf_counter()
    n = _n_cases(n_corpora, scale)
    cfg = {"study": "ss7a", "seed": seed, "scale": scale, "n_corpora": n, "n_traces": n_traces, "m": m,
           "chain_seed": SS7A_CHAIN_SEED, "min_retained": min_retained}
    chain = random_substochastic_chain(m, SS7A_CHAIN_SEED)
    rows = []
    for i in range(n):
        corpus = chain_corpus(chain, n_traces, [seed, i], name=f"ss7a-{i}")
        _, row = _gof_row(corpus, fit(corpus))
        rows.append({"corpus": i, **row})
    curves = [{"name": "pvalues", "title": "KS p-values on first-order corpora", "xlabel": "corpus",
               "ylabel": "p_KS", "ylim": (0.0, 1.0),
               "series": [{"x": [r["corpus"] for r in rows], "y": [r["p_KS"] for r in rows], "label": "p_KS"}]}]
    rep = StudyReport("ss7a", cfg, ("corpus", "m", "delta_aic", "D_KS", "p_KS", "accepted"), rows,
                      summary={"retained": sum(r["accepted"] for r in rows)}, curves=curves)
    return _finish(rep, t0)


def ss7b(seed=0, scale=1.0, n_corpora=15, n_traces=300, m=5, weight=0.6, max_ks_reject=2 / 15):
    """Power: corpora from an explicitly second-order law."""
    t0 = time.perf_counter()
    n = _n_cases(n_corpora, scale)
    cfg = {"study": "ss7b", "seed": seed, "scale": scale, "n_corpora": n, "n_traces": n_traces, "m": m,
           "weight": weight, "max_ks_reject": max_ks_reject}
    rows = []
    for i in range(n):
        corpus = second_order_corpus(m, weight, n_traces, _seed_int(seed, i))
        cert, row = _gof_row(corpus, fit(corpus))
        rows.append({"corpus": i, **row, "ks_reject": not cert.ks_ok, "aic_reject": not cert.aic_ok})
    aic = [r["delta_aic"] for r in rows]
    summary = {"delta_aic_range": [min(aic), max(aic)], "ks_rejections": sum(r["ks_reject"] for r in rows),
               "aic_rejections": sum(r["aic_reject"] for r in rows)}
    curves = [{"name": "delta_aic", "title": "AIC order test on second-order corpora", "xlabel": "corpus",
               "ylabel": "delta AIC", "series": [{"x": [r["corpus"] for r in rows], "y": aic, "label": "delta AIC"},
                                                 {"x": [0, max(n - 1, 1)], "y": [0, 0], "label": "zero",
                                                  "dashed": True, "color": "#7f7f7f"}]}]
    rep = StudyReport("ss7b", cfg, ("corpus", "m", "delta_aic", "D_KS", "p_KS", "ks_reject", "aic_reject",
                                    "accepted"), rows, summary=summary, curves=curves)
    return _finish(rep, t0)


def ss7c(seed=0, scale=1.0, n_traces=500, min_accepted=6 / 7):
    """In-sample self-consistency: fit and certify noiseless corpora from each MAST-style chain."""
    t0 = time.perf_counter()
    n = _n_cases(n_traces, scale)
    cfg = {"study": "ss7c", "seed": seed, "scale": scale, "n_traces": n, "archetypes": list(MAST_STYLE),
           "min_accepted": min_accepted}
    rows = []
    for k, name in enumerate(MAST_STYLE):
        spec = get_archetype(name)
        corpus = chain_corpus(spec.ground_truth, n, [seed, k], spec.state_labels, name=name)
        _, row = _gof_row(corpus, fit(corpus))
        rows.append({"framework": name, "n": n, **row})
    rep = StudyReport("ss7c", cfg, ("framework", "n", "m", "delta_aic", "D_KS", "p_KS", "accepted"), rows,
                      summary={"accepted": sum(r["accepted"] for r in rows)})
    return _finish(rep, t0)


def ss9(seed=0, scale=1.0, n_traces=400, fit_fraction=0.5, n_model=8000, alpha_ks=0.05, min_ks_pass=6 / 7,
        max_linf=0.10):
    """Held-out recovery: fit on one half of a noisy, censored corpus, test on the other."""
    t0 = time.perf_counter()
    n = max(4, _n_cases(n_traces, scale))
    cfg = {"study": "ss9", "seed": seed, "scale": scale, "n_traces": n, "fit_fraction": fit_fraction,
           "n_model": n_model, "alpha_ks": alpha_ks, "min_ks_pass": min_ks_pass, "max_linf": max_linf,
           "d_max": RDC_D_MAX, "archetypes": list(MAST_STYLE)}
    rows, series = [], []
    for k, name in enumerate(MAST_STYLE):
        spec = get_archetype(name)
        corpus, _ = archetype_corpus(spec, n, [seed, k])
        fit_half, test_half = split_corpus(corpus, fit_fraction, _seed_int(seed, k))
        fitted = fit(fit_half)
        cert = certify(test_half, fitted, mode="sampled", n_model=n_model, seed=_seed_int(seed, k, 2),
                       alpha_ks=alpha_ks)
        linf = float(np.max(np.abs(reliability_curve(fitted.chain, RDC_D_MAX) - empirical_rdc(test_half, RDC_D_MAX))))
        rows.append({"framework": name, "n_fit": len(fit_half), "n_test": len(test_half), "m": fitted.m,
                     "D_KS": cert.d_ks, "p_KS": cert.p_ks, "L_inf_RDC": linf,
                     "delta_aic": cert.delta_aic if cert.delta_aic is not None else float("nan")})
        series.extend(_rdc_series(fitted.chain, test_half, name, PALETTE[k % len(PALETTE)]))
    summary = {"min_p_KS": min(r["p_KS"] for r in rows), "max_L_inf_RDC": max(r["L_inf_RDC"] for r in rows),
               "median_L_inf_RDC": float(np.median([r["L_inf_RDC"] for r in rows]))}
    curves = [{"name": "rdc_overlay", "title": "held-out RDC: analytic (solid) vs empirical (dashed)",
               "xlabel": "step d", "ylabel": "R(d)", "series": series}]
    rep = StudyReport("ss9", cfg, ("framework", "n_fit", "n_test", "m", "D_KS", "p_KS", "L_inf_RDC", "delta_aic"),
                      rows, summary=summary, curves=curves)
    return _finish(rep, t0)


def _closed_form_table(names, delta=0.01):
    rows, series = [], []
    for name in names:
        c = get_archetype(name).ground_truth
        rows.append({"framework": name, "R_inf": reliability_infinity(c), "rho": power_iteration_spectral_radius(c.Q),
                     "horizon": exact_horizon(c, delta), "m": c.m, "mtta": mtta(c)})
    rows.sort(key=lambda r: -r["R_inf"])
    for k, r in enumerate(rows):
        chain = get_archetype(r["framework"]).ground_truth
        series.extend(_rdc_series(chain, None, r["framework"], PALETTE[k % len(PALETTE)], 20))
    return rows, series


def ss6(seed=0, scale=1.0, delta=0.01):
    """Closed-form reliability table of the MAST-style chains, ranked by ``R_inf``."""
    t0 = time.perf_counter()
    cfg = {"study": "ss6", "seed": seed, "scale": scale, "delta": delta, "archetypes": list(MAST_STYLE)}
    rows, series = _closed_form_table(MAST_STYLE, delta)
    curves = [{"name": "rdc", "title": "reliability decay curves", "xlabel": "step d", "ylabel": "R(d)",
               "series": series}]
    rep = StudyReport("ss6", cfg, ("framework", "R_inf", "rho", "horizon", "m", "mtta"), rows, curves=curves)
    return _finish(rep, t0)


def archetypes(seed=0, scale=1.0, delta=0.01):
    """Closed-form quantities of the cross-benchmark archetypes."""
    t0 = time.perf_counter()
    cfg = {"study": "archetypes", "seed": seed, "scale": scale, "delta": delta, "archetypes": list(CROSS_BENCHMARK)}
    rows, series = _closed_form_table(CROSS_BENCHMARK, delta)
    curves = [{"name": "rdc", "title": "cross-benchmark reliability decay curves", "xlabel": "step d",
               "ylabel": "R(d)", "series": series}]
    rep = StudyReport("archetypes", cfg, ("framework", "R_inf", "rho", "horizon", "m", "mtta"), rows, curves=curves)
    return _finish(rep, t0)


STUDIES = {"ss1": ss1, "ss7a": ss7a, "ss7b": ss7b, "ss7c": ss7c, "ss9": ss9, "ss6": ss6, "archetypes": archetypes}


def run_study(study_id, seed=0, scale=1.0, **kw):
    if study_id not in STUDIES:
        raise KeyError(f"unknown study {study_id!r}; choose from {', '.join(STUDY_IDS)}")
    return STUDIES[study_id](seed=seed, scale=scale, **kw)


def recheck(report_dict):
    """Recompute a stored report's verdict from its rows and config."""
    return VERDICTS[report_dict["study_id"]](report_dict["rows"], report_dict["config"])
