"""Frequentist small world: polynomial MLE fits and the plug-in predictive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import LOG_HALF, DataSet, normal_logpdf


class TooFewPoints(ValueError):
    """Not enough points for a finite, positive-variance fit."""


class RankDeficient(ValueError):
    """The design matrix is numerically rank-deficient."""


@dataclass(frozen=True)
class ModelSpec:
    """The small world: Gaussians centered on polynomials of a fixed degree."""

    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")

    @property
    def n_coeffs(self) -> int:
        return self.degree + 1

    @property
    def min_fit_size(self) -> int:
        # degree+2 points keep the MLE noise variance positive almost surely
        return self.degree + 2

    def design_matrix(self, y1) -> np.ndarray:
        """Monomial basis rows [1, y1, ..., y1^degree]."""
        return np.vander(np.asarray(y1, dtype=float), self.n_coeffs, increasing=True)

    def to_json_dict(self) -> dict:
        return {"degree": self.degree}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelSpec":
        return cls(degree=int(d["degree"]))


@dataclass(frozen=True)
class FitResult:
    """A maximum likelihood element of the small world.

    sigma2 is the MLE (1/n) normalization.  It is zero only in the degenerate
    case of exactly interpolating data; estimators guard density evaluation
    with a variance floor in that case.
    """

    spec: ModelSpec
    coeffs: np.ndarray
    sigma2: float
    n_fit: int

    def __post_init__(self):
        coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape != (self.spec.n_coeffs,):
            raise ValueError("coefficient vector has wrong length")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")

    def mean_at(self, y1):
        return np.polynomial.polynomial.polyval(np.asarray(y1, dtype=float), self.coeffs)


def fit_mle(spec: ModelSpec, data: DataSet) -> FitResult:
    """Least-squares MLE on the monomial basis.

    Solved by SVD with rank tolerance eps * max(n, p) * s_max; raises
    RankDeficient below that and TooFewPoints when n < degree + 2.
    """
    n = len(data)
    p = spec.n_coeffs
    if n < spec.min_fit_size:
        raise TooFewPoints(f"need at least {spec.min_fit_size} points for degree {spec.degree}, got {n}")
    phi = spec.design_matrix(data.y1)
    rcond = np.finfo(float).eps * max(n, p)
    coeffs, _, rank, _ = np.linalg.lstsq(phi, data.y2, rcond=rcond)
    if rank < p:
        raise RankDeficient(f"design matrix rank {rank} < {p}")
    resid = data.y2 - phi @ coeffs
    sigma2 = float(np.mean(resid**2))
    return FitResult(spec=spec, coeffs=coeffs, sigma2=sigma2, n_fit=n)


def plugin_log_predictive(fit: FitResult, new_data: DataSet | None, include_y1_factor: bool = True) -> float:
    """Joint log density of new data under the plug-in Gaussian predictive.

    Factorizes across points; an empty dataset gives 0 (empty product).
    `include_y1_factor` controls the uniform log(1/2) reference term per
    point (on by default, matching every other density in the package).
    """
    if new_data is None or len(new_data) == 0:
        return 0.0
    if not fit.sigma2 > 0:
        raise ValueError("plug-in predictive needs sigma2 > 0 (apply a variance floor first)")
    mean = fit.mean_at(new_data.y1)
    value = float(np.sum(normal_logpdf(new_data.y2, mean, fit.sigma2)))
    if include_y1_factor:
        value += len(new_data) * LOG_HALF
    return value
