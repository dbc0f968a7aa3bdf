"""Command-line interface.

Exit codes: 0 ok, 1 acceptance failure, 2 input error, 3 corpus without
successes, 4 goodness-of-fit rejection, 5 analysis precondition violated.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .chain import (AgentMarkovChain, exact_horizon, mtta, pass_metrics, perturb_analysis, reliability_curve,
                    reliability_infinity, spectral_horizon_bound)
from .errors import (AgentRelError, DomainError, EmptyCorpus, InvalidChain, NoSuccesses, NoSuccessMass,
                     NotDiagonalizable, ParseError, SmallnessViolated, SubstochasticityViolated)
from .estimate import FitConfig, FittedChain, fit
from .gof import certify
from .simulate import archetype_corpus, chain_corpus, get_archetype, random_substochastic_chain, second_order_corpus
from .studies import STUDY_IDS, recheck, run_study, write_csv
from .traces import load_corpus, save_corpus
from .uncertainty import bootstrap_intervals, posterior_intervals, propagate_interval

EXIT_OK, EXIT_ACCEPTANCE, EXIT_INPUT, EXIT_NO_SUCCESS, EXIT_GOF, EXIT_PRECONDITION = 0, 1, 2, 3, 4, 5

# keys accepted in a --config JSON file; command-line flags override them
CONFIG_KEYS = ("k_min", "k_max", "alpha", "initial_mode", "seed", "gof_mode", "n_model", "ci", "B", "level",
               "delta")


class InputError(Exception):
    pass


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    unknown = set(cfg) - set(CONFIG_KEYS)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


def _merged(args, defaults):
    cfg = {**defaults, **_load_config(getattr(args, "config", None))}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _load_model(path):
    """A fitted-model JSON or a bare chain JSON; returns ``(chain, fitted_or_None)``."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    try:
        if d.get("kind") == "fitted_chain":
            fitted = FittedChain.from_dict(d)
            return fitted.chain, fitted
        return AgentMarkovChain.from_dict(d), None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model file {path}: {exc}") from exc


def _load_corpus(path):
    try:
        return load_corpus(path)
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc


def _summary_lines(chain, fitted=None, cert=None, delta=0.01):
    lines = [f"states m            {chain.m}"]
    if fitted is not None:
        daic = fitted.delta_aic
        lines.append(f"featurizer          {fitted.meta.get('featurizer', 'rule_based/indicator')}")
        lines.append(f"delta AIC           {daic:.4f}" if daic is not None else "delta AIC           n/a")
    if cert is not None:
        lines.append(f"KS D / p            {cert.d_ks:.4f} / {cert.p_ks:.4f}")
        lines.append(f"GoF accepted        {cert.accepted}")
    lines.append(f"R_inf               {reliability_infinity(chain):.6f}")
    lines.append(f"MTTA                {mtta(chain):.6f}")
    try:
        lines.append(f"horizon (delta={delta:g})  {exact_horizon(chain, delta)}")
    except AgentRelError:
        lines.append("horizon             n/a")
    return lines


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args):
    cfg = _merged(args, {"gof_mode": "analytic", "n_model": 8000, "ci": "posterior", "B": 200, "level": 0.95,
                         "delta": 0.01})
    corpus = _load_corpus(args.corpus)
    fitted = fit(corpus, FitConfig.from_dict(cfg))
    out = dict(fitted.to_dict())
    code = EXIT_OK
    cert = None
    try:
        cert = certify(corpus, fitted, mode=cfg["gof_mode"], n_model=int(cfg["n_model"]), seed=fitted.config.seed)
        out["gof"] = cert.to_dict()
        if not cert.accepted:
            code = EXIT_GOF
    except NoSuccesses as exc:
        out["gof"] = {"error": str(exc)}
        code = EXIT_NO_SUCCESS
    if cfg["ci"] == "posterior":
        table = posterior_intervals(fitted.counts, fitted.alpha, float(cfg["level"]), fitted.chain.labels)
    elif cfg["ci"] == "bootstrap":
        table = bootstrap_intervals(corpus, fitted, int(cfg["B"]), True, fitted.config.seed, float(cfg["level"]))
    else:
        table = None
    if table is not None:
        out["credible_table"] = table.to_dict()
    out["summary"] = _summary_lines(fitted.chain, fitted, cert, float(cfg["delta"]))
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
    if table is not None and args.ci_csv:
        table.to_csv(args.ci_csv)
    print("\n".join(out["summary"]))
    if code == EXIT_GOF:
        print("warning: goodness-of-fit rejected; model written with accepted=false", file=sys.stderr)
    return code


def cmd_gof(args):
    corpus = _load_corpus(args.corpus)
    _, fitted = _load_model(args.model)
    if fitted is None:
        raise InputError("gof needs a fitted-model file (it carries the order test)")
    cert = certify(corpus, fitted, mode=args.mode, n_model=args.n_model, seed=args.seed)
    print(json.dumps(cert.to_dict(), indent=1, sort_keys=True))
    return EXIT_OK if cert.accepted else EXIT_GOF


def _ci_table(fitted, method, corpus_path, B, seed, level, fast=True):
    if fitted is None:
        raise InputError("--ci needs a fitted-model file")
    if method == "posterior":
        return posterior_intervals(fitted.counts, fitted.alpha, level, fitted.chain.labels)
    if corpus_path is None:
        raise InputError("bootstrap intervals need --corpus")
    return bootstrap_intervals(_load_corpus(corpus_path), fitted, B, fast, seed, level)


def _load_delta(path, m):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read perturbation {path}: {exc}") from exc
    D = np.asarray(d["delta"] if isinstance(d, dict) else d, dtype=float)
    if D.size != m * m:
        raise InputError(f"perturbation has {D.size} entries, expected {m * m}")
    return D.reshape(m, m)


def cmd_query(args):
    chain, fitted = _load_model(args.model)
    table = None
    if args.ci:
        table = _ci_table(fitted, args.ci, args.corpus, args.B, args.seed, args.level)

    def interval(q):
        if table is None:
            return {}
        iv = propagate_interval(fitted, table, q, samples=args.samples, seed=args.seed)
        return {"lower": iv.lower, "upper": iv.upper}

    rows = []
    q = args.query
    if q == "rdc":
        curve = reliability_curve(chain, args.value_int)
        for d, r in enumerate(curve):
            rows.append({"d": d, "R": float(r), **(interval(f"rdc:{d}") if d else {})})
    elif q == "rinf":
        rows.append({"R_inf": reliability_infinity(chain), **interval("rinf")})
    elif q == "mtta":
        rows.append({"mtta": mtta(chain), **interval("mtta")})
    elif q == "horizon":
        row = {"delta": args.value, "exact_horizon": exact_horizon(chain, args.value)}
        try:
            hb = spectral_horizon_bound(chain, args.value)
            row.update({"spectral_bound": hb.d_star, "rho": hb.rho, "kappa": hb.kappa})
        except (NotDiagonalizable, DomainError):
            row.update({"spectral_bound": "n/a"})
        rows.append(row)
    elif q == "passk":
        k = args.value_int
        pm = pass_metrics(reliability_infinity(chain), k)
        row = {"k": k, "pass_k": pm.pass_k, "pass_at_k": pm.pass_at_k}
        if table is not None:
            lo = interval(f"pass_k:{k}")
            hi = interval(f"pass_at_k:{k}")
            row.update({"pass_k_lower": lo["lower"], "pass_k_upper": lo["upper"],
                        "pass_at_k_lower": hi["lower"], "pass_at_k_upper": hi["upper"]})
        rows.append(row)
    elif q == "perturb":
        if args.delta_file is None or args.epsilon is None:
            raise InputError("perturb needs --delta-file and --epsilon")
        D = _load_delta(args.delta_file, chain.m)
        rep = perturb_analysis(chain, D, args.epsilon, compute_exact=True)
        rows.append(rep.to_dict())
    cols = list(rows[0]) if rows else []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    print("\t".join(cols))
    for r in rows:
        print("\t".join(_cell(r.get(c, "")) for c in cols))
    if args.csv:
        write_csv(args.csv, cols, [{c: r.get(c, "") for c in cols} for r in rows])
    return EXIT_OK


def _cell(v):
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def cmd_uq(args):
    _, fitted = _load_model(args.model)
    table = _ci_table(fitted, args.method, args.corpus, args.B, args.seed, args.level, args.fast)
    text = table.to_csv(args.csv)
    if not args.csv:
        print(text, end="")
    print(f"# method={table.method} level={table.level} median width={table.median_width:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args):
    if args.source == "archetype":
        if not args.name:
            raise InputError("simulate archetype needs --name")
        try:
            spec = get_archetype(args.name)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
        corpus, _ = archetype_corpus(spec, args.n, args.seed)
    elif args.source == "second-order":
        corpus = second_order_corpus(args.m, args.weight, args.n, args.seed)
    elif args.source == "chain":
        if not args.chain:
            raise InputError("simulate chain needs --chain")
        chain, _ = _load_model(args.chain)
        corpus = chain_corpus(chain, args.n, args.seed, noise_sigma=args.sigma, censor_rate=args.censor)
    else:  # random
        chain = random_substochastic_chain(args.m, args.seed)
        if args.chain_out:
            with open(args.chain_out, "w") as fh:
                json.dump(chain.to_dict(), fh, indent=1)
        corpus = chain_corpus(chain, args.n, args.seed, noise_sigma=args.sigma, censor_rate=args.censor)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} traces to {args.out}")
    return EXIT_OK


def cmd_study(args):
    ids = STUDY_IDS if args.study_id == "all" else (args.study_id,)
    ok = True
    t0 = time.perf_counter()
    for sid in ids:
        kw = {}
        if sid == "ss1" and args.sizes:
            kw["sizes"] = tuple(args.sizes)
        rep = run_study(sid, seed=args.seed, scale=args.scale, **kw)
        rep.write(args.out)
        ok &= rep.verdict
        print(f"{sid:11s} {'PASS' if rep.verdict else 'FAIL'}  {rep.seconds:7.1f}s  {json.dumps(rep.summary)}")
    print(f"total {time.perf_counter() - t0:.1f}s; reports in {args.out}")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_report(args):
    try:
        with open(args.path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {args.path}: {exc}") from exc
    if "study_id" in d:
        verdict = recheck(d)
        print(f"study {d['study_id']}  seed={d.get('seed')}  config_hash={d.get('config_hash')}  "
              f"verdict={'PASS' if verdict else 'FAIL'}")
        cols = d["columns"]
        print("\t".join(cols))
        for r in d["rows"]:
            print("\t".join(_cell(r[c]) for c in cols))
        return EXIT_OK if verdict else EXIT_ACCEPTANCE
    chain, fitted = _load_model(args.path)
    lines = d.get("summary") or _summary_lines(chain, fitted)
    print("\n".join(lines))
    if args.plot:
        from .plots import save_line_chart
        dm = np.arange(args.d_max + 1)
        save_line_chart(args.plot, [{"x": dm, "y": reliability_curve(chain, args.d_max), "label": "R(d)"}],
                        title="reliability decay curve", xlabel="step d", ylabel="R(d)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="agentrel", description="Absorbing-chain reliability analysis of agent traces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a chain to a trace corpus")
    f.add_argument("corpus")
    f.add_argument("--out", "-o", default="model.json")
    f.add_argument("--config")
    f.add_argument("--k-min", dest="k_min", type=int)
    f.add_argument("--k-max", dest="k_max", type=int)
    f.add_argument("--alpha", type=float)
    f.add_argument("--initial-mode", dest="initial_mode", choices=("empirical", "s0"))
    f.add_argument("--seed", type=int)
    f.add_argument("--gof-mode", dest="gof_mode", choices=("analytic", "sampled"))
    f.add_argument("--n-model", dest="n_model", type=int)
    f.add_argument("--ci", choices=("posterior", "bootstrap", "none"))
    f.add_argument("--B", type=int)
    f.add_argument("--level", type=float)
    f.add_argument("--delta", type=float, help="horizon tolerance in the summary")
    f.add_argument("--ci-csv", dest="ci_csv")
    f.set_defaults(func=cmd_fit)

    g = sub.add_parser("gof", help="certify a fitted model against a corpus")
    g.add_argument("corpus")
    g.add_argument("model")
    g.add_argument("--mode", choices=("analytic", "sampled"), default="analytic")
    g.add_argument("--n-model", dest="n_model", type=int, default=8000)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gof)

    q = sub.add_parser("query", help="reliability queries on a chain or fitted model")
    q.add_argument("model")
    q.add_argument("query", choices=("rdc", "rinf", "mtta", "horizon", "passk", "perturb"))
    q.add_argument("value", nargs="?", type=float, help="d_max for rdc, delta for horizon, k for passk")
    q.add_argument("--delta-file", dest="delta_file")
    q.add_argument("--epsilon", type=float)
    q.add_argument("--ci", choices=("posterior", "bootstrap"))
    q.add_argument("--corpus", help="corpus for bootstrap intervals")
    q.add_argument("--B", type=int, default=200)
    q.add_argument("--samples", type=int, default=1000)
    q.add_argument("--level", type=float, default=0.95)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--csv")
    q.set_defaults(func=cmd_query)

    u = sub.add_parser("uq", help="per-entry credible or bootstrap intervals")
    u.add_argument("model")
    u.add_argument("--method", choices=("posterior", "bootstrap"), default="posterior")
    u.add_argument("--corpus")
    u.add_argument("--B", type=int, default=200)
    u.add_argument("--slow", dest="fast", action="store_false", help="re-cluster every bootstrap replicate")
    u.add_argument("--level", type=float, default=0.95)
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--csv")
    u.set_defaults(func=cmd_uq)

    s = sub.add_parser("simulate", help="write a synthetic trace corpus")
    s.add_argument("source", choices=("archetype", "second-order", "chain", "random"))
    s.add_argument("--name")
    s.add_argument("--chain")
    s.add_argument("--chain-out", dest="chain_out")
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--weight", type=float, default=0.6)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--censor", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", "-o", default="corpus.jsonl")
    s.set_defaults(func=cmd_simulate)

    st = sub.add_parser("study", help="run a validation study")
    st.add_argument("study_id", choices=STUDY_IDS + ("all",))
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--scale", type=float, default=1.0)
    st.add_argument("--sizes", type=int, nargs="+", help="chain sizes for ss1 (default 5 10 50)")
    st.add_argument("--out", "-o", default="study_out")
    st.set_defaults(func=cmd_study)

    r = sub.add_parser("report", help="summarise a model file or re-check a study report")
    r.add_argument("path")
    r.add_argument("--plot", help="write the RDC of a model as SVG")
    r.add_argument("--d-max", dest="d_max", type=int, default=30)
    r.set_defaults(func=cmd_report)
    return p


def _check_query_args(args):
    if args.command != "query":
        return
    if args.query in ("rdc", "passk"):
        if args.value is None or args.value < 1 or int(args.value) != args.value:
            raise InputError(f"{args.query} needs a positive integer argument")
        args.value_int = int(args.value)
    if args.query == "horizon" and args.value is None:
        raise InputError("horizon needs a delta argument")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_query_args(args)
        return args.func(args)
    except (InputError, ParseError, EmptyCorpus, InvalidChain) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NoSuccesses, NoSuccessMass) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SUCCESS
    except (SmallnessViolated, SubstochasticityViolated) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (DomainError, AgentRelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
