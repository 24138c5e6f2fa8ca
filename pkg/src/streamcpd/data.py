"""Streams, synthetic benchmark generation, and file formats.

A :class:`Stream` is a time-indexed block of multivariate observations.
Synthetic streams are piecewise i.i.d. Gaussian with per-segment mean
jumps and a known truth set, generated from a seeded PCG64 generator
(numpy's ``default_rng``) so byte-identical reruns are guaranteed.

File formats (all newline-delimited UTF-8):

* series CSV: header ``t,dim_0,...,dim_{d-1}``, one row per time index;
* series NDJSON: ``{"t": int, "z": [floats]}`` per line, strictly
  increasing ``t``;
* detections NDJSON: ``{"flagged_at": int, "located_at": int,
  "scheme": str}`` per line, ordered by ``flagged_at``;
* changepoint list: one integer time per line;
* run-length posterior matrix: headerless CSV, row per step, column per
  run length, zero-filled above the support.

Floats are written with ``repr``'s shortest round-trip decimals, so a
write/read cycle reproduces values exactly. Writers go through a
temp-file-plus-rename so failures never leave partial output behind.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DataIOError, ParameterError
from .evaluate import ChangepointSet
from .engine import Detection

__all__ = [
    "FixedSegmentLength",
    "GeometricSegmentLength",
    "LabeledStream",
    "Observation",
    "Stream",
    "SyntheticSpec",
    "generate",
    "read_changepoints",
    "read_detections",
    "read_series",
    "write_changepoints",
    "write_detections",
    "write_posterior_matrix",
    "write_series",
]


@dataclass(frozen=True, eq=False)
class Observation:
    """One multivariate sample at an integer time index."""

    t: int
    values: np.ndarray


class Stream:
    """A contiguous block of observations: integer times plus a (T, d)
    value matrix. Immutable once constructed."""

    def __init__(self, times, values) -> None:
        values = np.array(values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise ParameterError(f"values must be a non-empty (T, d) array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("stream values must be finite")
        times = np.array(times, dtype=np.int64, copy=True).reshape(-1)
        if times.shape[0] != values.shape[0]:
            raise ParameterError(
                f"times ({times.shape[0]}) and values ({values.shape[0]}) lengths differ"
            )
        if np.any(np.diff(times) <= 0):
            raise ParameterError("times must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times = times
        self.values = values

    @classmethod
    def from_values(cls, values, start: int = 1) -> "Stream":
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        return cls(np.arange(start, start + n, dtype=np.int64), values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Stream(self.times[index], self.values[index])
        i = int(index)
        return Observation(int(self.times[i]), self.values[i])

    def __iter__(self):
        for i in range(len(self)):
            yield Observation(int(self.times[i]), self.values[i])


@dataclass(frozen=True)
class FixedSegmentLength:
    """Every segment has exactly ``n`` observations."""

    n: int

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise ParameterError(f"segment length must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.full(count, self.n, dtype=np.int64)


@dataclass(frozen=True)
class GeometricSegmentLength:
    """Segment lengths drawn i.i.d. geometric with mean ``lam``."""

    lam: float

    def __post_init__(self) -> None:
        if not float(self.lam) >= 1.0:
            raise ParameterError(f"expected segment length must be >= 1, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.geometric(1.0 / self.lam, size=count).astype(np.int64)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a piecewise-stationary Gaussian benchmark stream.

    ``mean_shift`` is expressed in units of ``noise_sigma``, so detection
    difficulty is independent of the noise scale. Identical specs produce
    byte-identical streams.
    """

    d: int
    segment_count: int
    length_law: FixedSegmentLength | GeometricSegmentLength
    mean_shift: float = 5.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.d) < 1:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if int(self.segment_count) < 1:
            raise ParameterError(f"segment_count must be >= 1, got {self.segment_count}")
        if not float(self.noise_sigma) > 0.0:
            raise ParameterError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "segment_count", int(self.segment_count))
        object.__setattr__(self, "mean_shift", float(self.mean_shift))
        object.__setattr__(self, "noise_sigma", float(self.noise_sigma))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True, eq=False)
class LabeledStream:
    """A generated stream together with its ground-truth changepoints and
    the spec that produced it."""

    stream: Stream
    truth: ChangepointSet
    spec: SyntheticSpec


def generate(spec: SyntheticSpec) -> LabeledStream:
    """Generate a labeled piecewise Gaussian stream.

    Segment lengths are drawn first; then, per segment after the first,
    every dimension's mean jumps by ``mean_shift * noise_sigma`` with an
    independently drawn sign. Changepoint times mark the first index of
    each new segment, 1-based.
    """
    rng = np.random.default_rng(spec.seed)
    lengths = spec.length_law.sample(rng, spec.segment_count)
    mean = np.zeros(spec.d)
    chunks = []
    truth = []
    t = 1
    for i, length in enumerate(lengths):
        if i > 0:
            signs = rng.choice([-1.0, 1.0], size=spec.d)
            mean = mean + signs * spec.mean_shift * spec.noise_sigma
            truth.append(t)
        chunks.append(rng.normal(mean, spec.noise_sigma, size=(int(length), spec.d)))
        t += int(length)
    stream = Stream.from_values(np.vstack(chunks))
    return LabeledStream(stream, ChangepointSet(tuple(truth)), spec)


def _format_float(value: float) -> str:
    return repr(float(value))


def _atomic_write(path, lines) -> None:
    """Write ``lines`` (no trailing newlines) to ``path`` atomically."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise DataIOError(f"{path}: {exc}") from exc


def _series_header(d: int) -> str:
    return "t," + ",".join(f"dim_{i}" for i in range(d))


def write_series(stream: Stream, path, fmt: str = "csv") -> None:
    """Write a stream as series CSV or NDJSON (see module docstring)."""
    if fmt == "csv":
        lines = [_series_header(stream.d)]
        for i in range(len(stream)):
            row = ",".join(_format_float(v) for v in stream.values[i])
            lines.append(f"{int(stream.times[i])},{row}")
    elif fmt == "ndjson":
        lines = [
            json.dumps({"t": int(stream.times[i]), "z": [float(v) for v in stream.values[i]]})
            for i in range(len(stream))
        ]
    else:
        raise ParameterError(f"unknown series format {fmt!r}")
    _atomic_write(path, lines)


def _read_lines(path):
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataIOError(f"{path}: {exc}") from exc


def _parse_csv_series(path, lines) -> Stream:
    if not lines:
        raise DataFormatError(f"{path}: empty series file")
    header = lines[0].split(",")
    if header[0] != "t" or len(header) < 2:
        raise DataFormatError(f"{path}: line 1: expected header 't,dim_0,...'")
    d = len(header) - 1
    times, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d + 1:
            raise DataFormatError(f"{path}: line {lineno}: expected {d + 1} fields, got {len(parts)}")
        try:
            times.append(int(parts[0]))
            rows.append([float(p) for p in parts[1:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
    return _finish_series(path, times, rows, start_line=2)


def _parse_ndjson_series(path, lines) -> Stream:
    times, rows = [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            times.append(int(record["t"]))
            row = [float(v) for v in record["z"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
        if rows and len(row) != len(rows[0]):
            raise DataFormatError(
                f"{path}: line {lineno}: dimension {len(row)} differs from {len(rows[0])}"
            )
        rows.append(row)
    return _finish_series(path, times, rows, start_line=1)


def _finish_series(path, times, rows, start_line: int) -> Stream:
    if not rows:
        raise DataFormatError(f"{path}: no observations found")
    for i in range(1, len(times)):
        if times[i] <= times[i - 1]:
            lineno = start_line + i
            kind = "duplicate" if times[i] == times[i - 1] else "decreasing"
            raise DataFormatError(f"{path}: line {lineno}: {kind} time index {times[i]}")
    values = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{path}: series contains non-finite values")
    return Stream(np.asarray(times, dtype=np.int64), values)


def read_series(path, fmt: str = "csv") -> Stream:
    """Read a stream from series CSV or NDJSON. Errors name the offending
    line; time indices must be strictly increasing and rows rectangular."""
    lines = _read_lines(path)
    if fmt == "csv":
        return _parse_csv_series(path, lines)
    if fmt == "ndjson":
        return _parse_ndjson_series(path, lines)
    raise ParameterError(f"unknown series format {fmt!r}")


def write_detections(detections, path) -> None:
    """Write detections as NDJSON ordered by ``flagged_at``. An empty
    detection list produces an empty file."""
    ordered = sorted(detections, key=lambda det: det.flagged_at)
    lines = [
        json.dumps(
            {"flagged_at": int(d.flagged_at), "located_at": int(d.located_at), "scheme": d.scheme}
        )
        for d in ordered
    ]
    _atomic_write(path, lines)


def read_detections(path) -> list[Detection]:
    """Read a detections NDJSON file back into Detection records."""
    detections = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            detections.append(
                Detection(int(record["flagged_at"]), int(record["located_at"]), str(record["scheme"]))
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
    return detections


def write_changepoints(times, path) -> None:
    """Write changepoint times, one integer per line."""
    if isinstance(times, ChangepointSet):
        times = times.times
    _atomic_write(path, [str(int(t)) for t in times])


def read_changepoints(path) -> ChangepointSet:
    """Read a one-integer-per-line changepoint file."""
    times = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            times.append(int(line.strip()))
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
    return ChangepointSet(tuple(times))


def write_posterior_matrix(history, path) -> None:
    """Write per-step run-length posteriors as a dense headerless CSV.

    Row order follows the (contiguous) step sequence; columns are run
    lengths 0..max observed, zero-filled where a step's support is
    shorter. Probabilities are linear-domain.
    """
    history = list(history)
    if not history:
        raise ParameterError("posterior history is empty")
    for prev, cur in zip(history, history[1:]):
        if cur.t != prev.t + 1:
            raise ParameterError(
                f"posterior history must be time-contiguous ({prev.t} -> {cur.t})"
            )
    width = max(len(p.log_probs) for p in history)
    lines = []
    for posterior in history:
        probs = posterior.probabilities()
        row = np.zeros(width)
        row[: probs.shape[0]] = probs
        lines.append(",".join(_format_float(v) for v in row))
    _atomic_write(path, lines)
