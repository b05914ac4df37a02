"""Latent data generating processes over the (y1, y2) measurement space.

A generating process draws y1 uniformly on [-1, 1] and then y2 conditionally
Gaussian around a polynomial in y1.  All log densities in this package are
taken with respect to Lebesgue measure on (R x R)^N, so the uniform y1
factor log(1/2) is included per point; every predictive density in the other
modules follows the same convention, which keeps scores directly comparable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LOG_HALF = math.log(0.5)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class OutsideSupport(ValueError):
    """A y1 value lies outside [-1, 1], where the generating density is zero."""


def normal_logpdf(x, mean, var):
    """Elementwise Gaussian log density; `var` must be positive."""
    x = np.asarray(x, dtype=float)
    return -_HALF_LOG_2PI - 0.5 * np.log(var) - 0.5 * (x - mean) ** 2 / var


@dataclass(frozen=True)
class GeneratorSpec:
    """A polynomial-mean Gaussian data generating process.

    y1 ~ U(-1, 1) and y2 | y1 ~ Normal(sum_k coeffs[k] * y1^k, sigma^2).
    `coeffs` holds c_0..c_degree in ascending order; the constant model is
    the degree-0 special case.
    """

    degree: int
    coeffs: tuple[float, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if len(self.coeffs) != self.degree + 1:
            raise ValueError(
                f"expected {self.degree + 1} coefficients, got {len(self.coeffs)}"
            )
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def mean_at(self, y1):
        """Polynomial mean of y2 at the given y1 value(s)."""
        return np.polynomial.polynomial.polyval(np.asarray(y1, dtype=float), self.coeffs)

    def to_json_dict(self) -> dict:
        return {"degree": self.degree, "coeffs": list(self.coeffs), "sigma": self.sigma}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GeneratorSpec":
        return cls(degree=int(d["degree"]), coeffs=tuple(d["coeffs"]), sigma=float(d["sigma"]))


@dataclass(frozen=True)
class Datum:
    """A single (y1, y2) measurement point; y1 is meaningful on [-1, 1]."""

    y1: float
    y2: float


@dataclass(frozen=True)
class Provenance:
    """How a dataset was produced, for reproducibility bookkeeping."""

    spec: GeneratorSpec
    seed: int


class DataSet:
    """An ordered measurement y in (R x R)^N with index-based partitioning.

    Points are stored as parallel read-only float64 arrays; the order is part
    of the value (partitions are index-based), and equality is bitwise.
    """

    __slots__ = ("y1", "y2", "provenance")

    def __init__(self, y1, y2, provenance: Provenance | None = None):
        y1 = np.ascontiguousarray(y1, dtype=float)
        y2 = np.ascontiguousarray(y2, dtype=float)
        if y1.ndim != 1 or y2.ndim != 1 or y1.shape != y2.shape:
            raise ValueError("y1 and y2 must be 1-D arrays of equal length")
        if y1.size < 1:
            raise ValueError("a DataSet holds at least one point")
        if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
            raise ValueError("points must be finite")
        y1.setflags(write=False)
        y2.setflags(write=False)
        self.y1 = y1
        self.y2 = y2
        self.provenance = provenance

    @classmethod
    def from_points(cls, points, provenance: Provenance | None = None) -> "DataSet":
        pts = list(points)
        return cls([p.y1 for p in pts], [p.y2 for p in pts], provenance)

    @property
    def points(self) -> list[Datum]:
        return [Datum(float(a), float(b)) for a, b in zip(self.y1, self.y2)]

    def __len__(self) -> int:
        return int(self.y1.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataSet):
            return NotImplemented
        return np.array_equal(self.y1, other.y1) and np.array_equal(self.y2, other.y2)

    def __repr__(self) -> str:
        return f"DataSet(n={len(self)})"

    def subset(self, indices) -> "DataSet":
        """New DataSet of the given indices, in the given order."""
        idx = np.asarray(indices, dtype=int)
        return DataSet(self.y1[idx], self.y2[idx])

    def concat(self, other: "DataSet") -> "DataSet":
        return DataSet(np.concatenate([self.y1, other.y1]), np.concatenate([self.y2, other.y2]))


def sample_dataset(spec: GeneratorSpec, n: int, seed: int) -> DataSet:
    """Draw n points from the generating process, deterministically per seed.

    Uses numpy's PCG64 stream; identical (spec, n, seed) yields a bitwise
    identical DataSet.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    y1 = rng.uniform(-1.0, 1.0, size=n)
    y2 = rng.normal(spec.mean_at(y1), spec.sigma)
    return DataSet(y1, y2, provenance=Provenance(spec=spec, seed=int(seed)))


def true_log_density(spec: GeneratorSpec, data: DataSet) -> float:
    """Joint log density of `data` under the generating process.

    Includes the log(1/2) uniform factor per point.  Raises OutsideSupport
    if any y1 leaves [-1, 1] rather than silently returning -inf.
    """
    if np.any(data.y1 < -1.0) or np.any(data.y1 > 1.0):
        raise OutsideSupport("y1 outside [-1, 1]: generating density is zero there")
    mean = spec.mean_at(data.y1)
    return float(len(data) * LOG_HALF + np.sum(normal_logpdf(data.y2, mean, spec.sigma**2)))


def write_dataset_csv(data: DataSet, path) -> None:
    """Write a dataset as CSV with header y1,y2 using 17 significant digits.

    The encoding is lossless for float64, so a read-back reproduces the
    dataset bitwise.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["y1", "y2"])
        for a, b in zip(data.y1, data.y2):
            w.writerow([format(a, ".17g"), format(b, ".17g")])


def read_dataset_csv(path) -> DataSet:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["y1", "y2"]:
            raise ValueError(f"{path}: expected CSV header 'y1,y2'")
        y1, y2 = [], []
        for row in r:
            if not row:
                continue
            y1.append(float(row[0]))
            y2.append(float(row[1]))
    return DataSet(y1, y2)
