"""Command-line entry point: simulate | fit | score | experiment.

Every command is a thin adapter over the library modules; all flags can
also be supplied through RPPS_-prefixed environment variables (for example
RPPS_SEED for --seed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .conjugate import (
    PluginGaussian,
    PosteriorPredictive,
    PriorPredictive,
    default_prior,
    posterior_mean,
    posterior_update,
    sample_posterior,
)
from .datagen import DataSet, GeneratorSpec, read_dataset_csv, sample_dataset, write_dataset_csv
from .harness import ExperimentConfig, emit_outputs, run_experiment
from .linmodel import ModelSpec, fit_mle
from .scores import (
    Bootstrap,
    HoldOut,
    Jackknife,
    MlePluginAdapter,
    PosteriorPredictiveAdapter,
    PriorPredictiveAdapter,
    aic,
    bootstrap_estimator,
    delta_estimator,
    dic,
    evidence_criterion,
    holdout_estimator,
    jackknife_estimator,
    waic,
)

ENV_PREFIX = "RPPS_"

_ESTIMATOR_KINDS = ("delta", "holdout", "jackknife", "bootstrap")
_CRITERION_KINDS = ("evidence", "aic", "waic", "dic")


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name.upper())


def _resolve(args: argparse.Namespace, name: str, cast=str, default=None):
    """Flag value, else RPPS_<NAME> environment variable, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    raw = _env(name)
    if raw is not None:
        return cast(raw)
    return default


def _load_json(path: str, what: str) -> dict:
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise SystemExit(f"error: cannot read {what} {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: {what} {path!r} is not valid JSON: {exc}")


def _print_record(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def cmd_simulate(args: argparse.Namespace) -> int:
    spec_path = _resolve(args, "spec")
    out_path = _resolve(args, "out")
    if spec_path is None or out_path is None:
        raise SystemExit("error: simulate needs --spec and --out")
    n = _resolve(args, "n", int, 12)
    seed = _resolve(args, "seed", int, 0)
    raw = _load_json(spec_path, "generator spec")
    try:
        spec = GeneratorSpec.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemExit(f"error: bad generator spec {spec_path!r}: {exc}")
    data = sample_dataset(spec, n, seed)
    write_dataset_csv(data, out_path)
    _print_record({"spec": spec.to_json_dict(), "n": n, "seed": seed, "out": str(out_path)})
    return 0


def _load_model(args: argparse.Namespace) -> ModelSpec:
    model_path = _resolve(args, "model")
    if model_path is None:
        raise SystemExit("error: a --model JSON file is required")
    raw = _load_json(model_path, "model config")
    try:
        return ModelSpec.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemExit(f"error: bad model config {model_path!r}: {exc}")


def _load_data(args: argparse.Namespace) -> DataSet:
    data_path = _resolve(args, "data")
    if data_path is None:
        raise SystemExit("error: a --data CSV file is required")
    try:
        return read_dataset_csv(data_path)
    except (OSError, ValueError) as exc:
        raise SystemExit(f"error: cannot read dataset {data_path!r}: {exc}")


def cmd_fit(args: argparse.Namespace) -> int:
    model = _load_model(args)
    data = _load_data(args)
    fit = fit_mle(model, data)
    _print_record(
        {
            "degree": model.degree,
            "coeffs": fit.coeffs.tolist(),
            "sigma2": fit.sigma2,
            "n_fit": fit.n_fit,
        }
    )
    return 0


def _adapter_for(inference: str, model: ModelSpec):
    if inference == "mle":
        return MlePluginAdapter(model)
    prior = default_prior(model)
    if inference == "prior_predictive":
        return PriorPredictiveAdapter(prior, model)
    if inference == "posterior_predictive":
        return PosteriorPredictiveAdapter(prior, model)
    raise SystemExit(f"error: unknown inference {inference!r}")


def _predictive_for(inference: str, model: ModelSpec, data: DataSet):
    if inference == "mle":
        return PluginGaussian(fit_mle(model, data))
    prior = default_prior(model)
    if inference == "prior_predictive":
        return PriorPredictive(prior, model)
    if inference == "posterior_predictive":
        return PosteriorPredictive(posterior_update(prior, model, data), model)
    raise SystemExit(f"error: unknown inference {inference!r}")


def _usage_error(message: str) -> SystemExit:
    print(f"usage error: {message}", file=sys.stderr)
    return SystemExit(2)


def _score_one(request: dict, model: ModelSpec, data: DataSet) -> dict:
    kind = request.get("kind")
    if kind not in _ESTIMATOR_KINDS + _CRITERION_KINDS:
        raise _usage_error(
            f"unknown estimator {kind!r}; expected one of {_ESTIMATOR_KINDS + _CRITERION_KINDS}"
        )
    seed = int(request.get("seed", 0))
    inference = request.get("inference", "mle")
    if kind == "delta":
        est = delta_estimator(_predictive_for(inference, model, data), data)
        return est.to_json_dict()
    if kind == "holdout":
        scheme = HoldOut(n_train=int(request["n_train"]), n_valid=int(request["n_valid"]), seed=seed)
        return holdout_estimator(_adapter_for(inference, model), data, scheme).to_json_dict()
    if kind == "jackknife":
        scheme = Jackknife(k_folds=int(request["k_folds"]), seed=seed)
        return jackknife_estimator(_adapter_for(inference, model), data, scheme).to_json_dict()
    if kind == "bootstrap":
        scheme = Bootstrap(b_resamples=int(request["b_resamples"]), seed=seed)
        return bootstrap_estimator(_adapter_for(inference, model), data, scheme).to_json_dict()
    if kind == "evidence":
        return evidence_criterion(default_prior(model), model, data).to_json_dict()
    if kind == "aic":
        return aic(fit_mle(model, data), data).to_json_dict()
    # waic / dic draw from the conjugate posterior
    n_samples = int(request.get("n_samples", 1000))
    posterior = posterior_update(default_prior(model), model, data)
    samples = sample_posterior(posterior, n_samples, seed)
    if kind == "waic":
        record = waic(samples, model, data).to_json_dict()
    else:
        record = dic(samples, posterior_mean(posterior), model, data).to_json_dict()
    record["n_samples"] = n_samples
    return record


def cmd_score(args: argparse.Namespace) -> int:
    model = _load_model(args)
    data = _load_data(args)
    est_path = _resolve(args, "estimators")
    if est_path is None:
        raise SystemExit("error: an --estimators JSON file is required")
    raw = _load_json(est_path, "estimator config")
    requests = raw.get("requests") if isinstance(raw, dict) else raw
    if not isinstance(requests, list) or not requests:
        raise SystemExit(f"error: estimator config {est_path!r} must hold a nonempty list of requests")
    for request in requests:
        _print_record(_score_one(request, model, data))
    return 0


def _summary_table(result) -> str:
    lines = [f"{'estimator':<12} {'q20':>14} {'q50':>14} {'q80':>14} {'failed':>7}"]
    for s in result.summary:
        lines.append(f"{s.estimator:<12} {s.q20:>14.6g} {s.q50:>14.6g} {s.q80:>14.6g} {s.n_failed:>7d}")
    return "\n".join(lines)


def cmd_experiment(args: argparse.Namespace) -> int:
    config_path = _resolve(args, "config")
    if config_path is None:
        raise SystemExit("error: experiment needs --config")
    raw = _load_json(config_path, "experiment config")
    try:
        config = ExperimentConfig.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemExit(f"error: bad experiment config {config_path!r}: {exc}")
    out_override = _resolve(args, "out")
    out_dir = out_override if out_override is not None else config.output_dir
    if _resolve(args, "dry_run", lambda s: s not in ("", "0", "false"), False):
        print("config OK")
        print(json.dumps(config.to_json_dict(), indent=2, sort_keys=True))
        return 0
    if out_dir is None:
        raise SystemExit("error: no output directory (set output_dir in the config or pass --out)")
    result = run_experiment(config)
    emit_outputs(result, out_dir)
    print(_summary_table(result))
    for message in result.warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"wrote {Path(out_dir) / 'rows.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpps",
        description="Relative predictive performance scores: simulate data, fit, score, and run estimator-error experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="sample a dataset from a generator spec")
    p_sim.add_argument("--spec", help="generator spec JSON file")
    p_sim.add_argument("--n", type=int, help="number of points (default 12)")
    p_sim.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p_sim.add_argument("--out", help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="maximum likelihood polynomial fit")
    p_fit.add_argument("--data", help="dataset CSV file")
    p_fit.add_argument("--model", help="model config JSON file ({\"degree\": d})")
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser("score", help="evaluate estimators/criteria on a dataset")
    p_score.add_argument("--data", help="dataset CSV file")
    p_score.add_argument("--model", help="model config JSON file")
    p_score.add_argument("--estimators", help="estimator request JSON file")
    p_score.set_defaults(func=cmd_score)

    p_exp = sub.add_parser("experiment", help="run an estimator-error experiment")
    p_exp.add_argument("--config", help="experiment config JSON file")
    p_exp.add_argument("--out", help="output directory (overrides the config)")
    p_exp.add_argument("--dry-run", dest="dry_run", action="store_const", const=True, default=None,
                       help="validate and echo the config without running")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
