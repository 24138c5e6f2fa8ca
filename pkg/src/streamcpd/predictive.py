"""Prediction-error changepoint detection.

A window predictor forecasts the next ``k`` observations from the last
``k``; the anomaly score of a window is the maximum Euclidean norm of the
per-step prediction error. Scores above a threshold flag a change
beginning within the next ``k`` steps. The predictor is pluggable:
persistence and linear autoregression ship as analytic baselines, and
externally produced forecasts can be replayed from file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Stream
from .errors import FitError, ParameterError, ReplayError
from .evaluate import ChangepointSet

__all__ = [
    "AnomalyScore",
    "ExternalPredictor",
    "LinearArPredictor",
    "PersistencePredictor",
    "PredictorSpec",
    "WindowPair",
    "anomaly_score",
    "detect_by_threshold",
    "fit_predictor",
    "make_window_pairs",
    "score_stream",
]

_KINDS = ("persistence", "linear_ar", "external")


@dataclass(frozen=True, eq=False)
class WindowPair:
    """A length-k input window and the length-k target window that starts
    one step after it."""

    inputs: Stream
    targets: Stream

    def __post_init__(self) -> None:
        if len(self.inputs) != len(self.targets):
            raise ParameterError("input and target windows must have equal length")
        if self.inputs.d != self.targets.d:
            raise ParameterError("input and target windows must have equal dimension")
        if int(self.targets.times[0]) != int(self.inputs.times[-1]) + 1:
            raise ParameterError("target window must start one step after the input window ends")

    @property
    def k(self) -> int:
        return len(self.inputs)


def make_window_pairs(stream: Stream, k: int) -> list[WindowPair]:
    """Slide a 2k window over the stream: pair i covers inputs
    [i, i+k) and targets [i+k, i+2k), yielding T - 2k + 1 pairs."""
    k = int(k)
    if k < 1:
        raise ParameterError(f"window length must be >= 1, got {k}")
    n = len(stream)
    if n < 2 * k:
        raise ParameterError(f"stream length {n} is too short for window length {k} (needs >= {2 * k})")
    return [WindowPair(stream[i : i + k], stream[i + k : i + 2 * k]) for i in range(n - 2 * k + 1)]


@dataclass(frozen=True)
class PredictorSpec:
    """Which predictor to use and its window length ``window_k``.
    ``order`` applies to linear_ar, ``path`` to external replay."""

    kind: str
    window_k: int
    order: int = 1
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ParameterError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if int(self.window_k) < 1:
            raise ParameterError(f"window_k must be >= 1, got {self.window_k}")
        if self.kind == "linear_ar" and int(self.order) < 1:
            raise ParameterError(f"order must be >= 1, got {self.order}")
        if self.kind == "external" and not self.path:
            raise ParameterError("external predictor requires a predictions file path")
        object.__setattr__(self, "window_k", int(self.window_k))
        object.__setattr__(self, "order", int(self.order))


class PersistencePredictor:
    """Predicts every future step to equal the last observed value."""

    def __init__(self, k: int) -> None:
        self.k = int(k)

    def predict(self, window: Stream) -> np.ndarray:
        return np.repeat(window.values[-1][None, :], self.k, axis=0)


class LinearArPredictor:
    """Per-dimension least-squares AR(p) with intercept, applied
    recursively to forecast k steps ahead (predictions feed back in)."""

    def __init__(self, k: int, order: int, coef: np.ndarray, intercept: np.ndarray) -> None:
        self.k = int(k)
        self.order = int(order)
        self.coef = coef  # (order, d), row j weights lag j+1
        self.intercept = intercept  # (d,)

    def predict(self, window: Stream) -> np.ndarray:
        if len(window) < self.order:
            raise ParameterError(f"window of length {len(window)} is shorter than AR order {self.order}")
        lags = [window.values[-j] for j in range(1, self.order + 1)]  # most recent first
        out = np.empty((self.k, window.d))
        for step in range(self.k):
            nxt = self.intercept + sum(self.coef[j] * lags[j] for j in range(self.order))
            out[step] = nxt
            lags = [nxt] + lags[: self.order - 1]
        return out


class ExternalPredictor:
    """Replays a time-indexed prediction table produced elsewhere."""

    def __init__(self, k: int, table: dict[int, np.ndarray]) -> None:
        self.k = int(k)
        self._table = table

    def predict(self, window: Stream) -> np.ndarray:
        start = int(window.times[-1]) + 1
        rows = []
        for t in range(start, start + self.k):
            if t not in self._table:
                raise ReplayError(f"prediction file is missing time index {t}")
            rows.append(self._table[t])
        return np.asarray(rows)


def fit_predictor(spec: PredictorSpec, calibration: Stream):
    """Build a predictor from its spec, fitting on the calibration
    prefix where the kind requires it."""
    if spec.kind == "persistence":
        return PersistencePredictor(spec.window_k)
    if spec.kind == "external":
        from .data import read_series

        series = read_series(spec.path, "csv")
        table = {int(t): series.values[i] for i, t in enumerate(series.times)}
        return ExternalPredictor(spec.window_k, table)

    p = spec.order
    n = len(calibration)
    if p > n - 1:
        raise ParameterError(f"AR order {p} needs a calibration of length > {p}, got {n}")
    values = calibration.values
    # One shared design matrix: row t holds lags 1..p plus an intercept.
    design = np.concatenate(
        [np.column_stack([values[p - j : n - j] for j in range(1, p + 1)]), np.ones((n - p, 1))],
        axis=1,
    )
    targets = values[p:]
    if np.linalg.matrix_rank(design) < p + 1:
        raise FitError("calibration series is rank-deficient; AR fit is singular")
    solution, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return LinearArPredictor(spec.window_k, p, solution[:p], solution[p])


@dataclass(frozen=True)
class AnomalyScore:
    """Maximum per-step prediction-error norm over one window; ``at_t``
    is the time the window's last target step arrived."""

    value: float
    at_t: int | None = None

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ParameterError(f"anomaly score must be >= 0, got {self.value}")


def _window_values(x) -> np.ndarray:
    values = x.values if isinstance(x, Stream) else np.asarray(x, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    return values


def anomaly_score(predicted, actual, at_t: int | None = None) -> AnomalyScore:
    """Score one window: max over steps of the Euclidean prediction-error
    norm. Zero exactly when the prediction matches everywhere."""
    pred = _window_values(predicted)
    act = _window_values(actual)
    if pred.shape != act.shape:
        raise ParameterError(f"prediction shape {pred.shape} does not match actual shape {act.shape}")
    value = float(np.linalg.norm(pred - act, axis=1).max())
    if at_t is None and isinstance(actual, Stream):
        at_t = int(actual.times[-1])
    return AnomalyScore(value, at_t)


def score_stream(predictor, pairs) -> list[AnomalyScore]:
    """Score every window pair with a fitted predictor."""
    return [anomaly_score(predictor.predict(pair.inputs), pair.targets) for pair in pairs]


def detect_by_threshold(scores, thr: float, refractory: int = 0) -> ChangepointSet:
    """Flag each score strictly above ``thr``; flags within ``refractory``
    steps of the previous flag are suppressed (prediction error stays high
    throughout a transition, and one event should yield one flag)."""
    thr = float(thr)
    if not thr > 0.0:
        raise ParameterError(f"threshold must be > 0, got {thr}")
    refractory = int(refractory)
    if refractory < 0:
        raise ParameterError(f"refractory must be >= 0, got {refractory}")
    flagged = []
    last = None
    previous_t = None
    for score in scores:
        if score.at_t is None:
            raise ParameterError("scores must carry their time index (at_t)")
        if previous_t is not None and score.at_t <= previous_t:
            raise ParameterError("scores must be time-ordered")
        previous_t = score.at_t
        if score.value > thr and (last is None or score.at_t - last > refractory):
            flagged.append(score.at_t)
            last = score.at_t
    return ChangepointSet(tuple(flagged))
