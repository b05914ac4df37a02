"""Estimator-error experiments: ensembles of measurements, every estimator
against the exact-score oracle, error quantiles, and flat-file outputs.

Seeding: replication r draws its generator, oracle, and estimator seeds from
numpy SeedSequence(config.seed).spawn(replications)[r], so a config is a
complete, machine-independent description of the run.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .conjugate import (
    PluginGaussian,
    PosteriorPredictive,
    PriorPredictive,
    Predictive,
    default_prior,
    posterior_update,
)
from .datagen import DataSet, GeneratorSpec, sample_dataset
from .linmodel import ModelSpec, RankDeficient, TooFewPoints, fit_mle
from .scores import (
    AllResamplesDegenerate,
    Bootstrap,
    HoldOut,
    Jackknife,
    MlePluginAdapter,
    ModelAdapter,
    PosteriorPredictiveAdapter,
    PriorPredictiveAdapter,
    ScoreEstimate,
    bootstrap_estimator,
    delta_estimator,
    exact_score_mc,
    exact_score_quadrature,
    holdout_estimator,
    jackknife_estimator,
)

logger = logging.getLogger(__name__)

ROWS_HEADER = ["replication_id", "estimator", "estimate", "std_error", "exact", "error", "floor_engaged"]
SUMMARY_HEADER = ["estimator", "q20", "q50", "q80"]
SUMMARY_PROBS = (0.2, 0.5, 0.8)


class InferenceKind(str, Enum):
    MLE = "mle"
    PRIOR_PREDICTIVE = "prior_predictive"
    POSTERIOR_PREDICTIVE = "posterior_predictive"


@dataclass(frozen=True)
class EstimatorRequest:
    """One estimator selection; `label` names its rows in the outputs."""

    kind: str  # delta | holdout | jackknife | bootstrap
    n_train: int | None = None
    n_valid: int | None = None
    k_folds: int | None = None
    b_resamples: int | None = None
    label: str | None = None

    KINDS = ("delta", "holdout", "jackknife", "bootstrap")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "holdout" and (self.n_train is None or self.n_valid is None):
            raise ValueError("holdout needs n_train and n_valid")
        if self.kind == "jackknife" and self.k_folds is None:
            raise ValueError("jackknife needs k_folds")
        if self.kind == "bootstrap" and self.b_resamples is None:
            raise ValueError("bootstrap needs b_resamples")

    @property
    def name(self) -> str:
        return self.label if self.label is not None else self.kind

    def to_json_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        for key in ("n_train", "n_valid", "k_folds", "b_resamples", "label"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "EstimatorRequest":
        known = {k: d[k] for k in ("kind", "n_train", "n_valid", "k_folds", "b_resamples", "label") if k in d}
        extra = set(d) - set(known)
        if extra:
            raise ValueError(f"unknown estimator keys: {sorted(extra)}")
        return cls(**known)


@dataclass(frozen=True)
class OracleConfig:
    """Exact-score oracle settings: quadrature for plug-in predictives,
    Monte Carlo with mc_datasets replicates otherwise."""

    mc_datasets: int = 20000
    quadrature: bool = True

    def to_json_dict(self) -> dict:
        return {"mc_datasets": self.mc_datasets, "quadrature": self.quadrature}

    @classmethod
    def from_json_dict(cls, d: dict) -> "OracleConfig":
        return cls(mc_datasets=int(d.get("mc_datasets", 20000)), quadrature=bool(d.get("quadrature", True)))


@dataclass(frozen=True)
class ExperimentConfig:
    truth: GeneratorSpec
    model: ModelSpec
    inference: InferenceKind
    estimators: tuple[EstimatorRequest, ...]
    seed: int
    replications: int = 500
    n_points: int = 12
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "inference", InferenceKind(self.inference))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.inference == InferenceKind.MLE and self.n_points < self.model.min_fit_size:
            raise ValueError(
                f"n_points {self.n_points} below the degree-{self.model.degree} MLE minimum {self.model.min_fit_size}"
            )
        if not self.estimators:
            raise ValueError("select at least one estimator")
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise ValueError(f"estimator labels must be unique, got {names}")
        for request in self.estimators:
            if request.kind == "holdout" and request.n_train + request.n_valid != self.n_points:
                raise ValueError(f"holdout partitions must cover all {self.n_points} points")
            if request.kind == "jackknife" and self.n_points % request.k_folds != 0:
                raise ValueError(f"k_folds must divide n_points = {self.n_points}")

    def to_json_dict(self) -> dict:
        return {
            "truth": self.truth.to_json_dict(),
            "model": self.model.to_json_dict(),
            "inference": self.inference.value,
            "n_points": self.n_points,
            "replications": self.replications,
            "estimators": [e.to_json_dict() for e in self.estimators],
            "oracle": self.oracle.to_json_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            truth=GeneratorSpec.from_json_dict(d["truth"]),
            model=ModelSpec.from_json_dict(d["model"]),
            inference=InferenceKind(d["inference"]),
            n_points=int(d.get("n_points", 12)),
            replications=int(d.get("replications", 500)),
            estimators=tuple(EstimatorRequest.from_json_dict(e) for e in d["estimators"]),
            oracle=OracleConfig.from_json_dict(d.get("oracle", {})),
            seed=int(d["seed"]),
            output_dir=d.get("output_dir"),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with Path(path).open("r", encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f))


@dataclass(frozen=True)
class ReplicationRow:
    """One estimator evaluation on one replication; failed rows keep the
    estimator name and exact score but no estimate."""

    replication_id: int
    estimator: str
    estimate: float | None
    std_error: float | None
    exact: float | None
    error: float | None
    floor_engaged: int
    failed: bool = False
    message: str = ""


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    q20: float
    q50: float
    q80: float
    n_failed: int = 0


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[ReplicationRow, ...]
    summary: tuple[SummaryRow, ...]
    warnings: tuple[str, ...] = ()


def quantiles(errors, probs) -> list[float]:
    """Empirical quantiles with linear interpolation between order
    statistics at h = (n - 1) * p (numpy's default rule)."""
    errors = np.asarray(list(errors), dtype=float)
    if errors.size == 0:
        raise ValueError("quantiles of an empty list are undefined")
    probs = np.asarray(list(probs), dtype=float)
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("probs must lie in [0, 1]")
    return [float(q) for q in np.quantile(errors, probs, method="linear")]


def _build_predictive(
    config: ExperimentConfig, measurement: DataSet
) -> tuple[Predictive, ModelAdapter]:
    if config.inference == InferenceKind.MLE:
        fit = fit_mle(config.model, measurement)
        return PluginGaussian(fit), MlePluginAdapter(config.model)
    prior = default_prior(config.model)
    if config.inference == InferenceKind.PRIOR_PREDICTIVE:
        return PriorPredictive(prior, config.model), PriorPredictiveAdapter(prior, config.model)
    posterior = posterior_update(prior, config.model, measurement)
    return PosteriorPredictive(posterior, config.model), PosteriorPredictiveAdapter(prior, config.model)


def _exact_score(config: ExperimentConfig, predictive: Predictive, oracle_seed: int) -> ScoreEstimate:
    if isinstance(predictive, PluginGaussian) and config.oracle.quadrature:
        return exact_score_quadrature(config.truth, predictive, config.n_points)
    return exact_score_mc(
        config.truth, predictive, config.oracle.mc_datasets, config.n_points, oracle_seed
    )


def _run_estimator(
    request: EstimatorRequest,
    predictive: Predictive,
    adapter: ModelAdapter,
    measurement: DataSet,
    seed: int,
) -> ScoreEstimate:
    if request.kind == "delta":
        return delta_estimator(predictive, measurement)
    if request.kind == "holdout":
        scheme = HoldOut(n_train=request.n_train, n_valid=request.n_valid, seed=seed)
        return holdout_estimator(adapter, measurement, scheme)
    if request.kind == "jackknife":
        return jackknife_estimator(adapter, measurement, Jackknife(k_folds=request.k_folds, seed=seed))
    return bootstrap_estimator(adapter, measurement, Bootstrap(b_resamples=request.b_resamples, seed=seed))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full ensemble and summarize estimator errors.

    Per replication: sample a measurement, build the configured predictive,
    compute the exact score once, then every selected estimator.  Estimator
    failures (degenerate folds and the like) are recorded as failed rows;
    the run only fails if every row does.
    """
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.replications)
    rows: list[ReplicationRow] = []
    oracle_ses: list[float] = []
    for r, child in enumerate(children):
        sub = child.generate_state(2 + len(config.estimators), dtype=np.uint64)
        data_seed, oracle_seed = int(sub[0]), int(sub[1])
        measurement = sample_dataset(config.truth, config.n_points, data_seed)
        try:
            predictive, adapter = _build_predictive(config, measurement)
            exact = _exact_score(config, predictive, oracle_seed)
        except (TooFewPoints, RankDeficient) as exc:
            for request in config.estimators:
                rows.append(
                    ReplicationRow(r, request.name, None, None, None, None, 0, failed=True, message=str(exc))
                )
            continue
        if exact.std_error is not None:
            oracle_ses.append(exact.std_error)
        for j, request in enumerate(config.estimators):
            try:
                est = _run_estimator(request, predictive, adapter, measurement, int(sub[2 + j]))
            except (TooFewPoints, RankDeficient, AllResamplesDegenerate, ValueError) as exc:
                rows.append(
                    ReplicationRow(
                        r, request.name, None, None, exact.value, None, 0, failed=True, message=str(exc)
                    )
                )
                continue
            rows.append(
                ReplicationRow(
                    replication_id=r,
                    estimator=request.name,
                    estimate=est.value,
                    std_error=est.std_error,
                    exact=exact.value,
                    error=est.value - exact.value,
                    floor_engaged=est.floor_engaged + exact.floor_engaged,
                )
            )
    if all(row.failed for row in rows):
        raise RuntimeError("every estimator row failed; see row messages")

    warnings: list[str] = []
    summary: list[SummaryRow] = []
    for request in config.estimators:
        errors = [row.error for row in rows if row.estimator == request.name and not row.failed]
        n_failed = sum(1 for row in rows if row.estimator == request.name and row.failed)
        if not errors:
            warnings.append(f"estimator {request.name}: all {n_failed} replications failed")
            summary.append(SummaryRow(request.name, float("nan"), float("nan"), float("nan"), n_failed))
            continue
        q20, q50, q80 = quantiles(errors, SUMMARY_PROBS)
        summary.append(SummaryRow(request.name, q20, q50, q80, n_failed))
        if oracle_ses:
            iqr = float(np.subtract(*np.quantile(errors, [0.75, 0.25])))
            median_se = float(np.median(oracle_ses))
            if iqr > 0 and median_se > 0.05 * iqr:
                warnings.append(
                    f"estimator {request.name}: oracle SE {median_se:.4g} exceeds 5% of error IQR {iqr:.4g}"
                )
    for message in warnings:
        logger.warning(message)
    return ExperimentResult(config=config, rows=tuple(rows), summary=tuple(summary), warnings=tuple(warnings))


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def emit_outputs(result: ExperimentResult, out_dir) -> None:
    """Write rows.csv (long format, one row per replication x estimator),
    summary.csv, and config.echo.json into `out_dir`."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        rows_path = out / "rows.csv"
        with rows_path.open("w", encoding="utf-8", newline="") as f:
            f.write(",".join(ROWS_HEADER) + "\n")
            for row in result.rows:
                f.write(
                    ",".join(
                        [
                            str(row.replication_id),
                            row.estimator,
                            _fmt(row.estimate),
                            _fmt(row.std_error),
                            _fmt(row.exact),
                            _fmt(row.error),
                            str(row.floor_engaged),
                        ]
                    )
                    + "\n"
                )
        with (out / "summary.csv").open("w", encoding="utf-8", newline="") as f:
            f.write(",".join(SUMMARY_HEADER) + "\n")
            for s in result.summary:
                f.write(",".join([s.estimator, _fmt(s.q20), _fmt(s.q50), _fmt(s.q80)]) + "\n")
        with (out / "config.echo.json").open("w", encoding="utf-8") as f:
            json.dump(result.config.to_json_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing experiment outputs under {out}: {exc}") from exc
