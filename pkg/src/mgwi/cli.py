"""Command-line interface.

Subcommands: ``simulate`` (write a series as CSV), ``fit`` (estimate a
model from the embedded Hansen data or a user CSV), ``diagnose``
(residuals, ACF/PACF, and summary statistics for a fitted model), and
``mc`` (Monte Carlo study tables).

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure.
Every run is deterministic given its inputs and ``--seed``; output files
carry a sidecar JSON with the seed and a hash of the invocation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np
import pandas as pd

from .datasets import hansen_series
from .diagnostics import describe, pearson_residuals, pseudo_residuals, sample_acf_pacf, sspe
from .estimation import bootstrap_se, fit_cls, fit_mle
from .montecarlo import (
    BUILTIN_SCENARIO_IDS,
    McTable,
    builtin_scenario,
    parse_scenario_file,
    run_study,
)
from .process import CountSeries, GeoMgwiModel, cond_mean, simulate
from .regression import (
    COVARIATE_TERMS,
    RegressionModel,
    bootstrap_se_nonstat,
    build_design,
    fit_nonstat,
    fit_pinar_cls,
    predict,
    simulate_nonstat,
    simulate_pinar,
)
from .zmg_process import ZmgMgwiModel, simulate_zmg_mgwi, zmg_mgwi_feasible

__all__ = ["main"]


class DataError(Exception):
    """User-supplied data could not be read or validated."""


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _write_sidecar(path: str, payload: dict) -> None:
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc


def _parse_names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip() != ""]


def _read_series(data: str) -> tuple[CountSeries, pd.DataFrame | None]:
    """Load counts from the embedded dataset or a CSV with a 'count' column."""
    if data == "hansen":
        return hansen_series(), None
    path = data[4:] if data.startswith("csv:") else data
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read CSV {path!r}: {exc}") from exc
    if "count" not in frame.columns:
        raise DataError(f"CSV {path!r} has no 'count' column")
    counts = frame["count"].to_numpy()
    if not np.all(np.isfinite(counts)) or np.any(np.mod(counts, 1) != 0) or np.any(counts < 0):
        raise DataError("the 'count' column must hold nonnegative integers")
    return CountSeries(counts.astype(np.int64)), frame


def _design_from_args(args, n: int, frame: pd.DataFrame | None):
    """Build (W, V) from the trend/seasonal flags plus named CSV columns."""
    mu_terms = ["intercept"]
    alpha_terms = ["intercept"]
    if args.trend != "none":
        mu_terms.append(args.trend)
        alpha_terms.append(args.trend)
    if args.seasonal != "none":
        mu_terms.append(args.seasonal)

    def pull_columns(names):
        cols = []
        for name in names:
            if frame is None or name not in frame.columns:
                raise DataError(f"covariate column {name!r} not found in the input CSV")
            cols.append(frame[name].to_numpy(dtype=float))
        return cols

    W = build_design(n, mu_terms)
    V = build_design(n, alpha_terms)
    extra_mu = pull_columns(_parse_names(args.mu_cols)) if args.mu_cols else []
    extra_alpha = pull_columns(_parse_names(args.alpha_cols)) if args.alpha_cols else []
    if extra_mu:
        W = np.column_stack([W] + extra_mu)
    if extra_alpha:
        V = np.column_stack([V] + extra_alpha)
    return W, V


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _cmd_simulate(args, parser) -> int:
    rng = np.random.default_rng(args.seed)
    if args.model == "geo-mgwi":
        if args.mu is None or args.alpha is None:
            parser.error("geo-mgwi needs --mu and --alpha")
        series = simulate(GeoMgwiModel(args.mu, args.alpha), args.n, rng)
        params = {"mu": args.mu, "alpha": args.alpha}
    elif args.model == "zmg-mgwi":
        if None in (args.mu, args.alpha, args.pi, args.eta):
            parser.error("zmg-mgwi needs --mu, --pi, --alpha, and --eta")
        ok, why = zmg_mgwi_feasible(args.mu, args.pi, args.alpha, args.eta)
        if not ok:
            parser.error(f"infeasible zmg-mgwi parameters: {why}")
        model = ZmgMgwiModel(args.mu, args.pi, args.alpha, args.eta)
        series = simulate_zmg_mgwi(model, args.n, rng)
        params = {"mu": args.mu, "pi": args.pi, "alpha": args.alpha, "eta": args.eta}
    else:  # mgwi-reg | pinar
        if args.beta is None or args.gamma is None:
            parser.error(f"{args.model} needs --beta and --gamma")
        mu_terms = _parse_names(args.mu_terms)
        alpha_terms = _parse_names(args.alpha_terms)
        kind = "mgwi" if args.model == "mgwi-reg" else "pinar"
        try:
            model = RegressionModel(
                kind=kind,
                beta=_parse_floats(args.beta),
                gamma=_parse_floats(args.gamma),
                W=build_design(args.n, mu_terms),
                V=build_design(args.n, alpha_terms),
            )
        except ValueError as exc:
            parser.error(str(exc))
        series = (simulate_nonstat if kind == "mgwi" else simulate_pinar)(model, rng)
        params = {
            "beta": _parse_floats(args.beta),
            "gamma": _parse_floats(args.gamma),
            "mu_terms": mu_terms,
            "alpha_terms": alpha_terms,
        }

    frame = pd.DataFrame(
        {"t": np.arange(1, len(series) + 1), "count": series.values}
    )
    frame.to_csv(args.out, index=False)
    meta = {
        "command": "simulate",
        "model": args.model,
        "params": params,
        "n": args.n,
        "seed": args.seed,
    }
    meta["config_sha256"] = _config_hash(meta)
    _write_sidecar(args.out, meta)
    print(f"wrote {args.out} (seed={args.seed})", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _fit_payload(args, series, frame) -> dict:
    n = len(series)
    payload: dict = {
        "command": "fit",
        "model": args.model,
        "method": args.method,
        "n": n,
        "seed": args.seed,
    }
    rng = np.random.default_rng(args.seed)

    if args.model == "geo-mgwi":
        fitter = fit_cls if args.method == "cls" else fit_mle
        result = fitter(series)
        mu = result.estimates["mu"]
        alpha = result.estimates["alpha"]
        preds = cond_mean(GeoMgwiModel(mu, alpha), series.values[:-1]) if result.converged else None
        payload["sspe"] = (
            float(np.sum((series.values[1:] - preds) ** 2)) if preds is not None else None
        )
        if args.method == "mle" and result.converged:
            payload["loglik"] = result.objective
        if result.converged and args.bootstrap:
            payload["bootstrap"] = {
                "B": args.bootstrap,
                "generative": args.bootstrap_model or "geo-mgwi",
                "std_errors": bootstrap_se(
                    series, result, args.bootstrap, rng,
                    generative=args.bootstrap_model or "geo-mgwi",
                    n_jobs=args.jobs,
                ),
            }
    else:
        kind = "mgwi" if args.model == "mgwi-reg" else "pinar"
        W, V = _design_from_args(args, n, frame)
        skeleton = RegressionModel(
            kind=kind, beta=np.zeros(W.shape[1]), gamma=np.zeros(V.shape[1]), W=W, V=V
        )
        options = {"polish": True}
        if kind == "pinar":
            result = fit_pinar_cls(series, skeleton, options=options)
        else:
            result = fit_nonstat(series, skeleton, method=args.method, options=options)
        if result.converged:
            p = W.shape[1]
            theta = np.array(list(result.estimates.values()))
            fitted_model = skeleton.with_coefficients(theta[:p], theta[p:])
            payload["sspe"] = sspe(series, predict(fitted_model, series))
            if args.method == "mle":
                payload["loglik"] = result.objective
            if args.bootstrap:
                generative = args.bootstrap_model or (
                    "pinar" if kind == "pinar" else "poisson-mgwi"
                )
                payload["bootstrap"] = {
                    "B": args.bootstrap,
                    "generative": generative,
                    "std_errors": bootstrap_se_nonstat(
                        series, skeleton, result, args.bootstrap, rng,
                        generative=generative, n_jobs=args.jobs,
                    ),
                }

    payload.update(
        estimates=result.estimates,
        std_errors=result.std_errors,
        objective=result.objective,
        converged=result.converged,
        iterations=result.iterations,
        message=result.message,
    )
    payload["config_sha256"] = _config_hash(
        {k: payload[k] for k in ("command", "model", "method", "n", "seed")}
    )
    return payload


def _cmd_fit(args, parser) -> int:
    if args.model == "pinar" and args.method == "mle":
        parser.error("the pinar baseline is fitted by CLS only")
    if args.model == "geo-mgwi" and (args.trend != "none" or args.seasonal != "none"):
        parser.error("trend/seasonal terms need --model mgwi-reg or pinar")
    series, frame = _read_series(args.data)
    if len(series) < 2:
        raise DataError("fitting needs a series of length >= 2")
    payload = _fit_payload(args, series, frame)
    text = json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_sidecar(args.out, {"command": "fit", "seed": args.seed,
                                  "config_sha256": payload["config_sha256"]})
    print(f"seed={args.seed}", file=sys.stderr)
    return 0 if payload["converged"] else 4


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def _cmd_diagnose(args, parser) -> int:
    series, frame = _read_series(args.data)
    try:
        with open(args.params, "r", encoding="utf-8") as fh:
            fitted = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read fitted-parameter JSON: {exc}") from exc
    estimates = fitted.get("estimates")
    model_name = fitted.get("model", args.model)
    if estimates is None:
        raise DataError("fitted-parameter JSON has no 'estimates' entry")
    if model_name == "pinar":
        parser.error("residual diagnostics need a min-thinning model (geo-mgwi or mgwi-reg)")

    if model_name == "geo-mgwi":
        model = GeoMgwiModel(estimates["mu"], estimates["alpha"])
    else:
        W, V = _design_from_args(args, len(series), frame)
        theta = np.array([estimates[k] for k in sorted(estimates, key=_coef_order)])
        p = W.shape[1]
        if theta.size != p + V.shape[1]:
            raise DataError(
                "fitted coefficients do not match the design built from the flags"
            )
        model = RegressionModel(kind="mgwi", beta=theta[:p], gamma=theta[p:], W=W, V=V)

    rng = np.random.default_rng(args.seed)
    pearson = pearson_residuals(series, model)
    pseudo = pseudo_residuals(series, model, rng)
    acf, pacf = sample_acf_pacf(series.values, args.max_lag)
    t_index = np.arange(2, len(series) + 1)

    prefix = args.out_prefix
    pd.DataFrame({"t": t_index, "residual": pearson.values}).to_csv(
        f"{prefix}_pearson.csv", index=False
    )
    pd.DataFrame({"t": t_index, "residual": pseudo.values}).to_csv(
        f"{prefix}_pseudo.csv", index=False
    )
    pd.DataFrame(
        {"lag": np.arange(len(acf)), "acf": acf, "pacf": pacf}
    ).to_csv(f"{prefix}_acf.csv", index=False)
    with open(f"{prefix}_summary.json", "w", encoding="utf-8") as fh:
        json.dump(describe(series), fh, indent=2, sort_keys=True)
        fh.write("\n")
    meta = {"command": "diagnose", "seed": args.seed, "max_lag": args.max_lag,
            "model": model_name}
    meta["config_sha256"] = _config_hash(meta)
    _write_sidecar(f"{prefix}_diagnose", meta)
    print(f"wrote {prefix}_pearson.csv, {prefix}_pseudo.csv, "
          f"{prefix}_acf.csv, {prefix}_summary.json (seed={args.seed})",
          file=sys.stderr)
    return 0


def _coef_order(name: str) -> tuple[int, int]:
    if name.startswith("beta"):
        return (0, int(name[4:]))
    if name.startswith("gamma"):
        return (1, int(name[5:]))
    return (2, 0)


# ---------------------------------------------------------------------------
# mc
# ---------------------------------------------------------------------------


def _cmd_mc(args, parser) -> int:
    if args.scenario.startswith("file:"):
        try:
            scenario = parse_scenario_file(args.scenario[5:])
        except OSError as exc:
            raise DataError(f"cannot read scenario file: {exc}") from exc
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    else:
        try:
            scenario = builtin_scenario(args.scenario, paper_scale=args.paper_scale,
                                        seed=args.seed)
        except ValueError as exc:
            parser.error(str(exc))
    overrides = {}
    if args.n:
        overrides["sample_sizes"] = tuple(int(v) for v in _parse_floats(args.n))
    if args.reps:
        overrides["replications"] = args.reps
    if overrides:
        from dataclasses import replace

        scenario = replace(scenario, **overrides)
    table = run_study(scenario, n_jobs=args.jobs)
    text = table.to_csv() if args.format == "csv" else table.to_markdown()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        meta = {"command": "mc", "scenario": scenario.id, "seed": scenario.seed,
                "replications": scenario.replications,
                "sample_sizes": list(scenario.sample_sizes)}
        meta["config_sha256"] = _config_hash(meta)
        _write_sidecar(args.out, meta)
    print(f"seed={scenario.seed}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgwi",
        description="Count time series built on geometric min-thinning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a series to CSV")
    sim.add_argument("--model", required=True,
                     choices=["geo-mgwi", "zmg-mgwi", "mgwi-reg", "pinar"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--mu", type=float)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--pi", type=float)
    sim.add_argument("--eta", type=float)
    sim.add_argument("--beta", help="comma-separated coefficients for mu_t")
    sim.add_argument("--gamma", help="comma-separated coefficients for alpha_t")
    sim.add_argument("--mu-terms", default="intercept",
                     help=f"comma-separated terms from {sorted(COVARIATE_TERMS)}")
    sim.add_argument("--alpha-terms", default="intercept")

    fit = sub.add_parser("fit", help="fit a model to data, emit JSON")
    fit.add_argument("--data", required=True,
                     help="'hansen' (embedded) or csv:PATH with a 'count' column")
    fit.add_argument("--model", required=True,
                     choices=["geo-mgwi", "mgwi-reg", "pinar"])
    fit.add_argument("--method", default="cls", choices=["cls", "mle"])
    fit.add_argument("--trend", default="none",
                     choices=["none", "t-over-n", "t-over-252"])
    fit.add_argument("--seasonal", default="none", choices=["none", "cos-12"])
    fit.add_argument("--mu-cols", default="",
                     help="comma-separated CSV columns used as extra mu covariates")
    fit.add_argument("--alpha-cols", default="")
    fit.add_argument("--bootstrap", type=int, default=0, metavar="B")
    fit.add_argument("--bootstrap-model", default=None,
                     choices=["geo-mgwi", "poisson-mgwi", "pinar"])
    fit.add_argument("--jobs", type=int, default=1)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default="-")

    diag = sub.add_parser("diagnose", help="residuals, ACF/PACF, summary stats")
    diag.add_argument("--data", required=True)
    diag.add_argument("--params", required=True, help="JSON produced by 'fit'")
    diag.add_argument("--model", default="geo-mgwi",
                      help="fallback model name if the JSON lacks one")
    diag.add_argument("--trend", default="none",
                      choices=["none", "t-over-n", "t-over-252"])
    diag.add_argument("--seasonal", default="none", choices=["none", "cos-12"])
    diag.add_argument("--mu-cols", default="")
    diag.add_argument("--alpha-cols", default="")
    diag.add_argument("--max-lag", type=int, default=20)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out-prefix", required=True)

    mc = sub.add_parser("mc", help="Monte Carlo study tables")
    mc.add_argument("--scenario", required=True,
                    help=f"one of {', '.join(BUILTIN_SCENARIO_IDS)} or file:PATH")
    mc.add_argument("--n", default="", help="comma-separated sample sizes override")
    mc.add_argument("--reps", type=int, default=0)
    mc.add_argument("--paper-scale", action="store_true",
                    help="published replication counts and full size ladder")
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--jobs", type=int, default=1)
    mc.add_argument("--format", default="csv", choices=["csv", "markdown"])
    mc.add_argument("--out", default="-")
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "diagnose": _cmd_diagnose,
    "mc": _cmd_mc,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
