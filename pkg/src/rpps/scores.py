"""Relative predictive performance scores and their estimators.

The score of a predictive distribution is the negated expected log density
of future measurements under the true generating process, shifted by a
model-independent reference constant; lower is better, and differences
between two predictives' scores are reference-free.  This module provides
the exact-score oracles (quadrature for plug-in predictives, Monte Carlo
over replicate measurements otherwise), the single-measurement estimators
(delta, hold-out, jackknife, bootstrap), and the information criteria
(log evidence / log odds, AIC, WAIC, DIC), all on the same lower-is-better
orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

import numpy as np
from scipy.special import logsumexp

from .conjugate import (
    NormalGammaParams,
    PluginGaussian,
    PosteriorSample,
    Predictive,
    log_evidence,
    posterior_update,
)
from .datagen import LOG_HALF, DataSet, GeneratorSpec
from .linmodel import (
    FitResult,
    ModelSpec,
    RankDeficient,
    TooFewPoints,
    fit_mle,
    plugin_log_predictive,
)

_LOG_2PI = math.log(2.0 * math.pi)

# Overfit folds can drive the MLE noise variance to zero; densities are
# evaluated with the variance floored here and the engagement counted.
SIGMA2_FLOOR = 1e-12


class NotFactorizing(ValueError):
    """The quadrature oracle needs a predictive that factorizes across points."""


class AllResamplesDegenerate(RuntimeError):
    """Every bootstrap resample was unusable (empty out-of-bag or fit failure)."""


class DegeneratePosterior(ValueError):
    """Too few posterior samples to form the criterion."""


class EstimatorKind(str, Enum):
    EXACT = "exact"
    MONTE_CARLO_ENSEMBLE = "monte_carlo_ensemble"
    DELTA = "delta"
    HOLD_OUT = "holdout"
    JACKKNIFE = "jackknife"
    BOOTSTRAP = "bootstrap"


class CriterionKind(str, Enum):
    LOG_EVIDENCE = "log_evidence"
    LOG_ODDS = "log_odds"
    AIC = "aic"
    WAIC = "waic"
    DIC = "dic"


@dataclass(frozen=True)
class HoldOut:
    """Split into n_train training and n_valid validation points by a seeded
    shuffle; sizes must add up to the measurement size."""

    n_train: int
    n_valid: int
    seed: int = 0


@dataclass(frozen=True)
class Jackknife:
    """K disjoint folds (contiguous blocks after one seeded shuffle); K must
    divide the measurement size."""

    k_folds: int
    seed: int = 0


@dataclass(frozen=True)
class Bootstrap:
    """B resamples with replacement, validated on the out-of-bag points."""

    b_resamples: int
    seed: int = 0


PartitionScheme = HoldOut | Jackknife | Bootstrap


@dataclass(frozen=True)
class ScoreEstimate:
    """An estimate of the relative predictive performance score.

    `value` follows the lower-is-better (negated log density) orientation.
    `std_error` is present only where a spread over sub-estimates exists
    (Monte Carlo ensemble, bootstrap); `n_effective` counts the aggregated
    sub-estimates; `floor_engaged` counts variance-floor engagements during
    density evaluation.
    """

    value: float
    std_error: float | None
    estimator: EstimatorKind
    n_effective: int
    floor_engaged: int = 0

    def __post_init__(self):
        spread_kinds = (EstimatorKind.MONTE_CARLO_ENSEMBLE, EstimatorKind.BOOTSTRAP)
        if self.std_error is not None and self.estimator not in spread_kinds:
            raise ValueError(f"{self.estimator.value} has no spread of sub-estimates")

    def to_json_dict(self) -> dict:
        return {
            "estimator": self.estimator.value,
            "value": self.value,
            "std_error": self.std_error,
            "n_effective": self.n_effective,
            "floor_engaged": self.floor_engaged,
        }


@dataclass(frozen=True)
class Criterion:
    """An information criterion value on the lower-is-better orientation
    (log evidence and log odds keep their classical sign)."""

    kind: CriterionKind
    value: float

    def to_json_dict(self) -> dict:
        return {"criterion": self.kind.value, "value": self.value}


def _floored_fit(fit: FitResult) -> tuple[FitResult, bool]:
    if fit.sigma2 < SIGMA2_FLOOR:
        return replace(fit, sigma2=SIGMA2_FLOOR), True
    return fit, False


def _floored_predictive(predictive: Predictive) -> tuple[Predictive, int]:
    if isinstance(predictive, PluginGaussian):
        fit, engaged = _floored_fit(predictive.fit)
        if engaged:
            return replace(predictive, fit=fit), 1
    return predictive, 0


# ---------------------------------------------------------------------------
# Model adapters: one fitting/evaluation contract for every inference kind


class ModelAdapter:
    """Uniform contract used by the partition-based estimators.

    fit() maps a training set to an opaque state, log_joint_predictive()
    scores a dataset under that state, and min_train_size() is the smallest
    usable training set.  floor_engaged() reports variance-floor engagements
    recorded in a state (zero unless an adapter overrides it).
    """

    def fit(self, train: DataSet) -> Any:
        raise NotImplementedError

    def log_joint_predictive(self, state: Any, data: DataSet) -> float:
        raise NotImplementedError

    def min_train_size(self) -> int:
        raise NotImplementedError

    def floor_engaged(self, state: Any) -> int:
        return 0


@dataclass(frozen=True)
class _MleState:
    fit: FitResult
    floored: bool


class MlePluginAdapter(ModelAdapter):
    """Refit the MLE on each training partition and score with the plug-in
    Gaussian, flooring degenerate noise variances."""

    def __init__(self, spec: ModelSpec, include_y1_factor: bool = True):
        self.spec = spec
        self.include_y1_factor = include_y1_factor

    def fit(self, train: DataSet) -> _MleState:
        fit, floored = _floored_fit(fit_mle(self.spec, train))
        return _MleState(fit=fit, floored=floored)

    def log_joint_predictive(self, state: _MleState, data: DataSet) -> float:
        return plugin_log_predictive(state.fit, data, include_y1_factor=self.include_y1_factor)

    def min_train_size(self) -> int:
        return self.spec.min_fit_size

    def floor_engaged(self, state: _MleState) -> int:
        return int(state.floored)


class PriorPredictiveAdapter(ModelAdapter):
    """Score under the prior predictive; fitting is a no-op.

    A delta estimate through this adapter is exactly the negated log
    evidence.  Whether the prior was itself tuned on the measurement is
    outside the adapter's control.
    """

    def __init__(self, prior: NormalGammaParams, spec: ModelSpec, include_y1_factor: bool = True):
        self.prior = prior
        self.spec = spec
        self.include_y1_factor = include_y1_factor

    def fit(self, train: DataSet) -> NormalGammaParams:
        return self.prior

    def log_joint_predictive(self, state: NormalGammaParams, data: DataSet) -> float:
        return log_evidence(state, self.spec, data, include_y1_factor=self.include_y1_factor)

    def min_train_size(self) -> int:
        return 0


class PosteriorPredictiveAdapter(ModelAdapter):
    """Condition the prior on each training partition and score under the
    resulting posterior predictive."""

    def __init__(self, prior: NormalGammaParams, spec: ModelSpec, include_y1_factor: bool = True):
        self.prior = prior
        self.spec = spec
        self.include_y1_factor = include_y1_factor

    def fit(self, train: DataSet) -> NormalGammaParams:
        return posterior_update(self.prior, self.spec, train)

    def log_joint_predictive(self, state: NormalGammaParams, data: DataSet) -> float:
        return log_evidence(state, self.spec, data, include_y1_factor=self.include_y1_factor)

    def min_train_size(self) -> int:
        return 0


# ---------------------------------------------------------------------------
# Exact-score oracles


def exact_score_mc(
    spec_true: GeneratorSpec,
    predictive: Predictive,
    n_datasets: int,
    n_points: int,
    seed: int,
) -> ScoreEstimate:
    """Monte Carlo exact-score oracle over replicate measurements.

    Draws `n_datasets` fresh measurements of `n_points` from the true
    process and averages the negated joint log density of the (fixed)
    predictive; the standard error is the sample SD over replicates divided
    by sqrt(n_datasets).
    """
    if n_datasets < 2:
        raise ValueError("n_datasets must be >= 2")
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    predictive, floored = _floored_predictive(predictive)
    rng = np.random.default_rng(seed)
    y1 = rng.uniform(-1.0, 1.0, size=(n_datasets, n_points))
    y2 = rng.normal(spec_true.mean_at(y1), spec_true.sigma)
    scores = -predictive.log_density_batch(y1, y2)
    value = float(np.mean(scores))
    std_error = float(np.std(scores, ddof=1) / math.sqrt(n_datasets))
    return ScoreEstimate(
        value=value,
        std_error=std_error,
        estimator=EstimatorKind.MONTE_CARLO_ENSEMBLE,
        n_effective=n_datasets,
        floor_engaged=floored,
    )


def exact_score_quadrature(
    spec_true: GeneratorSpec,
    predictive: PluginGaussian,
    n_points: int,
    n_nodes: int = 64,
) -> ScoreEstimate:
    """Exact score of a plug-in Gaussian predictive by Gauss-Legendre
    quadrature over the uniform y1 marginal.

    Per point the conditional cross entropy at y1 is
    log(2 pi s^2)/2 + (sigma^2 + (f_true(y1) - m_fit(y1))^2) / (2 s^2),
    integrated against the uniform density 1/2 on [-1, 1]; the joint score
    is n_points times the per-point value (the predictive factorizes).
    """
    if not isinstance(predictive, PluginGaussian):
        raise NotFactorizing("quadrature oracle applies to plug-in predictives only; use exact_score_mc")
    if n_nodes < 64:
        raise ValueError("use at least 64 quadrature nodes")
    predictive, floored = _floored_predictive(predictive)
    fit = predictive.fit
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    gap = spec_true.mean_at(nodes) - fit.mean_at(nodes)
    cross_entropy = 0.5 * np.log(2.0 * math.pi * fit.sigma2) + (spec_true.sigma**2 + gap**2) / (
        2.0 * fit.sigma2
    )
    per_point = float(np.sum(weights * 0.5 * cross_entropy))
    if predictive.include_y1_factor:
        per_point += math.log(2.0)
    return ScoreEstimate(
        value=n_points * per_point,
        std_error=None,
        estimator=EstimatorKind.EXACT,
        n_effective=1,
        floor_engaged=floored,
    )


# ---------------------------------------------------------------------------
# Single-measurement estimators


def delta_estimator(predictive: Predictive, data: DataSet) -> ScoreEstimate:
    """Score the measurement itself under the predictive (delta
    approximation of the true process).

    The caller is responsible for `data` being the measurement the
    predictive was built from; for a prior predictive the value is exactly
    the negated log evidence.
    """
    predictive, floored = _floored_predictive(predictive)
    return ScoreEstimate(
        value=-predictive.log_density(data),
        std_error=None,
        estimator=EstimatorKind.DELTA,
        n_effective=1,
        floor_engaged=floored,
    )


def _shuffled_indices(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def holdout_estimator(model: ModelAdapter, data: DataSet, scheme: HoldOut) -> ScoreEstimate:
    """Fit on a seeded training partition, score the held-out partition,
    and rescale by N / n_valid to the full measurement size."""
    n = len(data)
    if scheme.n_train + scheme.n_valid != n:
        raise ValueError(f"n_train + n_valid must equal {n}")
    if scheme.n_train < 1 or scheme.n_valid < 1:
        raise ValueError("both partitions need at least one point")
    if scheme.n_train < model.min_train_size():
        raise TooFewPoints(f"training partition of {scheme.n_train} below model minimum {model.min_train_size()}")
    idx = _shuffled_indices(n, scheme.seed)
    train = data.subset(idx[: scheme.n_train])
    valid = data.subset(idx[scheme.n_train :])
    state = model.fit(train)
    value = -(n / scheme.n_valid) * model.log_joint_predictive(state, valid)
    return ScoreEstimate(
        value=value,
        std_error=None,
        estimator=EstimatorKind.HOLD_OUT,
        n_effective=1,
        floor_engaged=model.floor_engaged(state),
    )


def jackknife_estimator(model: ModelAdapter, data: DataSet, scheme: Jackknife) -> ScoreEstimate:
    """Sum the held-out log densities over K disjoint folds.

    Folds are contiguous blocks after one seeded shuffle; no extra scaling
    is applied because the K folds cover every point exactly once.
    """
    n = len(data)
    k = scheme.k_folds
    if k < 1 or n % k != 0:
        raise ValueError(f"k_folds must divide the measurement size {n}")
    fold_size = n // k
    if n - fold_size < model.min_train_size():
        raise TooFewPoints(
            f"fold complements of {n - fold_size} below model minimum {model.min_train_size()}"
        )
    idx = _shuffled_indices(n, scheme.seed)
    value = 0.0
    floored = 0
    for j in range(k):
        fold = idx[j * fold_size : (j + 1) * fold_size]
        rest = np.concatenate([idx[: j * fold_size], idx[(j + 1) * fold_size :]])
        state = model.fit(data.subset(rest))
        value -= model.log_joint_predictive(state, data.subset(fold))
        floored += model.floor_engaged(state)
    return ScoreEstimate(
        value=value,
        std_error=None,
        estimator=EstimatorKind.JACKKNIFE,
        n_effective=k,
        floor_engaged=floored,
    )


def bootstrap_estimator(model: ModelAdapter, data: DataSet, scheme: Bootstrap) -> ScoreEstimate:
    """Average hold-out-style scores over resamples drawn with replacement.

    Each resample trains on N draws with replacement and validates on the
    out-of-bag points with the N / n_oob rescaling.  Resamples with an empty
    out-of-bag set, too little distinct training support, or a singular fit
    are skipped; if none survive, AllResamplesDegenerate is raised.
    """
    if scheme.b_resamples < 1:
        raise ValueError("b_resamples must be >= 1")
    n = len(data)
    rng = np.random.default_rng(scheme.seed)
    values = []
    floored = 0
    for _ in range(scheme.b_resamples):
        draw = rng.integers(0, n, size=n)
        oob = np.setdiff1d(np.arange(n), draw)
        if oob.size == 0 or np.unique(draw).size < model.min_train_size():
            continue
        try:
            state = model.fit(data.subset(draw))
        except (TooFewPoints, RankDeficient):
            continue
        values.append(-(n / oob.size) * model.log_joint_predictive(state, data.subset(oob)))
        floored += model.floor_engaged(state)
    if not values:
        raise AllResamplesDegenerate(f"no usable resample among {scheme.b_resamples}")
    values = np.asarray(values)
    std_error = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else None
    return ScoreEstimate(
        value=float(np.mean(values)),
        std_error=std_error,
        estimator=EstimatorKind.BOOTSTRAP,
        n_effective=int(values.size),
        floor_engaged=floored,
    )


# ---------------------------------------------------------------------------
# Information criteria


def aic(fit: FitResult, data: DataSet, include_y1_factor: bool = True) -> Criterion:
    """Akaike criterion on the negated log likelihood scale: the plug-in
    delta value plus the parameter count (coefficients plus one variance)."""
    k_params = fit.spec.degree + 2
    value = -plugin_log_predictive(fit, data, include_y1_factor=include_y1_factor) + k_params
    return Criterion(kind=CriterionKind.AIC, value=value)


def _pointwise_loglik(
    samples: list[PosteriorSample],
    spec: ModelSpec,
    data: DataSet,
    include_y1_factor: bool,
) -> np.ndarray:
    """Matrix of log pi(y_n | x_s): rows are posterior samples, columns data
    points; the conditional likelihood carries the uniform y1 factor."""
    coeffs = np.stack([s.coeffs for s in samples])
    tau = np.array([s.precision for s in samples])
    phi = spec.design_matrix(data.y1)
    mean = coeffs @ phi.T
    loglik = -0.5 * _LOG_2PI + 0.5 * np.log(tau)[:, None] - 0.5 * tau[:, None] * (data.y2 - mean) ** 2
    if include_y1_factor:
        loglik = loglik + LOG_HALF
    return loglik


def waic(
    posterior_samples: list[PosteriorSample],
    spec: ModelSpec,
    data: DataSet,
    include_y1_factor: bool = True,
) -> Criterion:
    """Widely applicable information criterion from posterior samples,
    flipped to the lower-is-better orientation.

    value = -(sum_n log mean_s pi(y_n|x_s) - sum_n var_s log pi(y_n|x_s)),
    with the sample variance on the 1/(S-1) normalization.
    """
    if len(posterior_samples) < 2:
        raise DegeneratePosterior("WAIC needs at least 2 posterior samples")
    loglik = _pointwise_loglik(posterior_samples, spec, data, include_y1_factor)
    s_count = loglik.shape[0]
    lppd = float(np.sum(logsumexp(loglik, axis=0) - math.log(s_count)))
    penalty = float(np.sum(np.var(loglik, axis=0, ddof=1)))
    return Criterion(kind=CriterionKind.WAIC, value=-(lppd - penalty))


def dic(
    posterior_samples: list[PosteriorSample],
    point_estimate: PosteriorSample,
    spec: ModelSpec,
    data: DataSet,
    include_y1_factor: bool = True,
) -> Criterion:
    """Deviance information criterion at a point estimate (conventionally the
    posterior mean), flipped to the lower-is-better orientation.

    value = -(sum_n log pi(y_n|x_hat)
              - 2 sum_n (log pi(y_n|x_hat) - mean_s log pi(y_n|x_s))).
    """
    if len(posterior_samples) < 2:
        raise DegeneratePosterior("DIC needs at least 2 posterior samples")
    loglik = _pointwise_loglik(posterior_samples, spec, data, include_y1_factor)
    at_hat = _pointwise_loglik([point_estimate], spec, data, include_y1_factor)[0]
    penalty = 2.0 * float(np.sum(at_hat - np.mean(loglik, axis=0)))
    return Criterion(kind=CriterionKind.DIC, value=-(float(np.sum(at_hat)) - penalty))


def log_odds(evidence_a: Criterion, evidence_b: Criterion) -> Criterion:
    """Log-odds ratio between two models' evidences (positive favors A)."""
    if evidence_a.kind != CriterionKind.LOG_EVIDENCE or evidence_b.kind != CriterionKind.LOG_EVIDENCE:
        raise ValueError("log_odds takes two log-evidence criteria")
    return Criterion(kind=CriterionKind.LOG_ODDS, value=evidence_a.value - evidence_b.value)


def evidence_criterion(
    prior: NormalGammaParams,
    spec: ModelSpec,
    data: DataSet,
    include_y1_factor: bool = True,
) -> Criterion:
    """Log marginal likelihood as a criterion (classical sign: higher is
    better; its negation is the prior-predictive delta estimate)."""
    return Criterion(
        kind=CriterionKind.LOG_EVIDENCE,
        value=log_evidence(prior, spec, data, include_y1_factor=include_y1_factor),
    )
