"""First-differencing and frozen standardization of streams.

Differencing removes autocorrelation from slowly varying series so the
engine's i.i.d.-within-segment assumption holds. Standardization is fit
once on a calibration window and then applied unchanged, because an
online detector must not look ahead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Observation, Stream
from .errors import ParameterError

__all__ = ["SeriesStats", "difference", "standardize_apply", "standardize_fit", "standardize_invert"]


@dataclass(frozen=True, eq=False)
class SeriesStats:
    """Per-dimension mean and population variance of a calibration
    window."""

    mean: np.ndarray
    variance: np.ndarray
    count: int

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float, copy=True).reshape(-1)
        variance = np.array(self.variance, dtype=float, copy=True).reshape(-1)
        if mean.shape != variance.shape:
            raise ParameterError("mean and variance must have matching shapes")
        if np.any(variance < 0) or not np.all(np.isfinite(variance)) or not np.all(np.isfinite(mean)):
            raise ParameterError("stats must be finite with nonnegative variance")
        if int(self.count) < 1:
            raise ParameterError(f"count must be >= 1, got {self.count}")
        mean.flags.writeable = False
        variance.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)
        object.__setattr__(self, "count", int(self.count))

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def difference(stream: Stream) -> Stream:
    """Consecutive differences: output element i is input[i+1] - input[i]
    and keeps input[i+1]'s time index. Output is one shorter."""
    if len(stream) < 2:
        raise ParameterError(f"differencing needs at least 2 observations, got {len(stream)}")
    return Stream(stream.times[1:], np.diff(stream.values, axis=0))


def standardize_fit(stream: Stream) -> SeriesStats:
    """Fit per-dimension mean and population (1/T) variance on a
    calibration window. Zero-variance dimensions are rejected."""
    if len(stream) < 2:
        raise ParameterError(f"standardization needs at least 2 observations, got {len(stream)}")
    mean = stream.values.mean(axis=0)
    variance = stream.values.var(axis=0)
    for i, v in enumerate(variance):
        if v <= 0.0:
            raise ParameterError(f"dimension {i} has zero variance; cannot standardize")
    return SeriesStats(mean, variance, len(stream))


def _denominator(stats: SeriesStats, scale: str) -> np.ndarray:
    # scale="variance" reproduces a centering convention that divides by
    # the mean squared deviation instead of the standard deviation; it
    # does not yield unit variance and is not the default.
    if scale == "std":
        return stats.std
    if scale == "variance":
        return stats.variance
    raise ParameterError(f"scale must be 'std' or 'variance', got {scale!r}")


def standardize_apply(stats: SeriesStats, x, scale: str = "std"):
    """Apply the frozen affine transform (x - mean) / denominator per
    dimension. Accepts a Stream or a single Observation and returns the
    same type."""
    denom = _denominator(stats, scale)
    if isinstance(x, Stream):
        if x.d != stats.d:
            raise ParameterError(f"stream dimension {x.d} does not match stats dimension {stats.d}")
        return Stream(x.times, (x.values - stats.mean) / denom)
    if isinstance(x, Observation):
        if x.values.shape[0] != stats.d:
            raise ParameterError(
                f"observation dimension {x.values.shape[0]} does not match stats dimension {stats.d}"
            )
        return Observation(x.t, (x.values - stats.mean) / denom)
    raise ParameterError(f"expected Stream or Observation, got {type(x).__name__}")


def standardize_invert(stats: SeriesStats, x, scale: str = "std"):
    """Inverse of `standardize_apply`."""
    denom = _denominator(stats, scale)
    if isinstance(x, Stream):
        return Stream(x.times, x.values * denom + stats.mean)
    if isinstance(x, Observation):
        return Observation(x.t, x.values * denom + stats.mean)
    raise ParameterError(f"expected Stream or Observation, got {type(x).__name__}")
