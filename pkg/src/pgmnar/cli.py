"""Command-line interface: fit, simulate, replicate, summarize."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import dataio
from .evaluation import (
    ScenarioSpec,
    StudyConfig,
    dic,
    estimate_mu,
    generate_scenario,
    posterior_summary,
    replication_study,
)
from .mcmc import McmcConfig, run_chain
from .outcome import LinRegSpec, LmmSpec
from .response import PriorConfig, ResponseModelSpec

_ADAPTIVE_MAP = {"off": "quantile", "a": "adaptive_a", "ab": "adaptive_ab"}


def read_config_file(path: str) -> dict:
    """Plain key = value lines; '#' starts a comment; flags override."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


# Flag defaults of `fit`; the subparser leaves everything None so config-file
# values can fill only what was not given explicitly on the command line.
_FIT_DEFAULTS = {
    "data": None, "response": None, "z": [], "instrument": [],
    "group": None, "time": None, "lag_missing": False, "out": ".",
    "save_imputed": False, "model": "sr", "outcome": "linear", "knots": 10,
    "degree": 2, "rbf": 10, "rbf_scale": 1.0, "adaptive_knots": "off",
    "c_phi": 1e-4, "c_delta": 1e-4, "c_lambda": 1.0, "c_xi": 1.0,
    "seed": 0, "burn": 2000, "keep": 3000, "thin": 1, "step_size": 0.25,
    "rw_sd": 0.1, "no_adapt_mala": False,
}
_BOOL_KEYS = {"lag_missing", "save_imputed", "no_adapt_mala"}
_LIST_KEYS = {"z", "instrument"}


def _merge_config(args: argparse.Namespace) -> None:
    """Config file fills flags left unset; explicit flags win; then defaults."""
    file_vals = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, raw in file_vals.items():
        if key not in _FIT_DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, key) is not None:
            continue
        if key in _BOOL_KEYS:
            setattr(args, key, raw.lower() in ("1", "true", "yes", "on"))
        elif key in _LIST_KEYS:
            setattr(args, key, [v.strip() for v in raw.split(",") if v.strip()])
        else:
            setattr(args, key, raw)
    for key, default in _FIT_DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, default)


def _mcmc_config(args) -> McmcConfig:
    return McmcConfig(
        n_burn=int(args.burn), n_keep=int(args.keep), thin=int(args.thin),
        mala_step=float(args.step_size), rw_sd=float(args.rw_sd),
        seed=int(args.seed), adapt_mala=not args.no_adapt_mala,
    )


def _response_spec(args) -> ResponseModelSpec:
    if args.adaptive_knots not in _ADAPTIVE_MAP:
        raise ValueError(f"adaptive_knots must be one of off/a/ab, "
                         f"got {args.adaptive_knots!r}")
    if args.model == "lr":
        return ResponseModelSpec.lr()
    return ResponseModelSpec(
        kind=args.model, degree=int(args.degree), n_knots=int(args.knots),
        n_rbf=int(args.rbf), rbf_scale=float(args.rbf_scale),
        knot_strategy=_ADAPTIVE_MAP[args.adaptive_knots],
    )


def _prior(args) -> PriorConfig:
    return PriorConfig(c_phi=float(args.c_phi), c_delta=float(args.c_delta),
                       c_lambda=float(args.c_lambda), c_xi=float(args.c_xi))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgmnar",
        description="Semiparametric Bayesian regression with nonignorable "
                    "missing responses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one model to a CSV dataset")
    fit.add_argument("--config", help="key = value config file")
    fit.add_argument("--data", help="input CSV path")
    fit.add_argument("--response", help="response column name")
    fit.add_argument("--z", nargs="+", help="response-model covariate columns")
    fit.add_argument("--instrument", nargs="+",
                     help="instrument columns (outcome model only)")
    fit.add_argument("--group", help="subject id column (lmm)")
    fit.add_argument("--time", help="time column")
    fit.add_argument("--lag-missing", dest="lag_missing", action="store_const",
                     const=True, help="add the lagged response indicator to z")
    fit.add_argument("--out", help="output directory")
    fit.add_argument("--save-imputed", dest="save_imputed", action="store_const",
                     const=True)
    fit.add_argument("--model", choices=("lr", "sr", "nr"))
    fit.add_argument("--outcome", choices=("linear", "lmm"))
    fit.add_argument("--knots", type=int, help="knot count K")
    fit.add_argument("--degree", type=int, help="spline degree q")
    fit.add_argument("--rbf", type=int, help="radial basis count R")
    fit.add_argument("--rbf-scale", dest="rbf_scale", type=float)
    fit.add_argument("--adaptive-knots", dest="adaptive_knots",
                     choices=("off", "a", "ab"))
    fit.add_argument("--c-phi", dest="c_phi", type=float)
    fit.add_argument("--c-delta", dest="c_delta", type=float)
    fit.add_argument("--c-lambda", dest="c_lambda", type=float)
    fit.add_argument("--c-xi", dest="c_xi", type=float)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--burn", type=int)
    fit.add_argument("--keep", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--step-size", dest="step_size", type=float,
                     help="initial Langevin step size h")
    fit.add_argument("--rw-sd", dest="rw_sd", type=float,
                     help="random-walk sd of the knot-expansion proposals")
    fit.add_argument("--no-adapt-mala", dest="no_adapt_mala",
                     action="store_const", const=True)

    sim = sub.add_parser("simulate", help="write one simulated scenario dataset")
    sim.add_argument("--scenario", required=True, type=int)
    sim.add_argument("--n", required=True, type=int)
    sim.add_argument("--seed", default=0, type=int)
    sim.add_argument("--out", required=True, help="output CSV path")

    rep = sub.add_parser("replicate", help="run a replication study")
    rep.add_argument("--scenario", nargs="+", required=True, type=int)
    rep.add_argument("--n", nargs="+", required=True, type=int)
    rep.add_argument("--reps", required=True, type=int)
    rep.add_argument("--methods", required=True,
                     help="comma-separated subset of OR,CC,LR,SR,NR")
    rep.add_argument("--seed", default=2026, type=int)
    rep.add_argument("--out", default="metrics.csv", help="output CSV path")
    rep.add_argument("--burn", default=2000, type=int)
    rep.add_argument("--keep", default=3000, type=int)
    rep.add_argument("--knots", default=10, type=int)
    rep.add_argument("--degree", default=2, type=int)
    rep.add_argument("--rbf", default=10, type=int)
    rep.add_argument("--random-covariates", dest="random_covariates",
                     action="store_true",
                     help="redraw covariates every replication")
    rep.add_argument("--workers", default=None, type=int,
                     help="process count (default: PGMNAR_WORKERS or all cores)")

    summ = sub.add_parser("summarize", help="recompute summaries and DIC "
                                            "from a saved run")
    summ.add_argument("--run", required=True, help="directory written by fit")
    summ.add_argument("--data", required=True)
    summ.add_argument("--response", required=True)
    summ.add_argument("--z", nargs="+", default=None)
    summ.add_argument("--instrument", nargs="+", default=None)
    summ.add_argument("--group", default=None)
    summ.add_argument("--time", default=None)
    summ.add_argument("--lag-missing", dest="lag_missing", action="store_true")
    summ.add_argument("--out", default=None,
                      help="summary CSV path (default: <run>/summary.csv)")
    return parser


def _load_dataset(args):
    if not args.data or not args.response:
        raise ValueError("fit needs --data and --response (flag or config file)")
    return dataio.load_csv(
        args.data, response=args.response, z_cols=args.z or [],
        instrument_cols=args.instrument or [], group_col=args.group,
        time_col=args.time, lag_missing=args.lag_missing,
    )


def _cmd_fit(args) -> None:
    data = _load_dataset(args)
    if args.outcome not in ("linear", "lmm"):
        raise ValueError(f"outcome must be linear or lmm, got {args.outcome!r}")
    outcome_spec = LmmSpec() if args.outcome == "lmm" else LinRegSpec()
    draws = run_chain(data, _response_spec(args), outcome_spec, _prior(args),
                      _mcmc_config(args))
    os.makedirs(args.out, exist_ok=True)
    dataio.write_draws_csv(draws, os.path.join(args.out, "draws.csv"))
    dataio.write_model_json(draws, data, os.path.join(args.out, "model.json"))
    rows = posterior_summary(draws)
    mu_est, mu_lo, mu_hi = estimate_mu(draws, data)
    rows.append({"name": "dic", "mean": dic(draws, data), "sd": np.nan,
                 "q025": np.nan, "q500": np.nan, "q975": np.nan})
    rows.append({"name": "mala_accept_rate", "mean": draws.mala_accept_rate,
                 "sd": np.nan, "q025": np.nan, "q500": np.nan, "q975": np.nan})
    if draws.response_spec.adaptive:
        rows.append({"name": "knot_accept_rate", "mean": draws.knot_accept_rate,
                     "sd": np.nan, "q025": np.nan, "q500": np.nan, "q975": np.nan})
    dataio.write_summary_csv(rows, os.path.join(args.out, "summary.csv"))
    if args.save_imputed and data.n_missing:
        dataio.write_imputed_csv(draws, data, os.path.join(args.out, "imputed.csv"))
    print(f"fit: {data.n} rows, {data.n_missing} missing; "
          f"mu = {mu_est:.4f} [{mu_lo:.4f}, {mu_hi:.4f}]; "
          f"wrote {args.out}/draws.csv")


def _cmd_simulate(args) -> None:
    data = generate_scenario(ScenarioSpec(scenario=args.scenario, n=args.n,
                                          seed=args.seed))
    dataio.write_dataset_csv(data, args.out)
    print(f"simulate: scenario {args.scenario}, n={args.n}, "
          f"{data.n_missing} missing -> {args.out}")


def _cmd_replicate(args) -> None:
    methods = [m.strip().upper() for m in args.methods.split(",") if m.strip()]
    study = StudyConfig(
        n_burn=args.burn, n_keep=args.keep, degree=args.degree,
        n_knots=args.knots, n_rbf=args.rbf, master_seed=args.seed,
        fixed_covariates=not args.random_covariates, workers=args.workers,
    )
    result = replication_study(args.scenario, args.n, args.reps, methods, study)
    dataio.write_metrics_csv(result.rows, args.out)
    print(f"replicate: {len(result.rows)} rows -> {args.out}")


def _cmd_summarize(args) -> None:
    data = dataio.load_csv(
        args.data, response=args.response, z_cols=args.z or [],
        instrument_cols=args.instrument or [], group_col=args.group,
        time_col=args.time, lag_missing=args.lag_missing,
    )
    draws = dataio.load_run(args.run, data)
    rows = posterior_summary(draws)
    rows.append({"name": "dic", "mean": dic(draws, data), "sd": np.nan,
                 "q025": np.nan, "q500": np.nan, "q975": np.nan})
    out = args.out or os.path.join(args.run, "summary.csv")
    dataio.write_summary_csv(rows, out)
    print(f"summarize: {len(rows)} rows -> {out}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            _merge_config(args)
            _cmd_fit(args)
        elif args.command == "simulate":
            _cmd_simulate(args)
        elif args.command == "replicate":
            _cmd_replicate(args)
        elif args.command == "summarize":
            _cmd_summarize(args)
    except Exception as exc:  # noqa: BLE001 - single-line diagnostic contract
        print(f"pgmnar: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
