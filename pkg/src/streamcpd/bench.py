"""Wall-time comparison of the factorized and multivariate engines.

Each benchmark row runs both engines over the same synthetic prefix and
times the step loop only (stream generation and engine construction are
excluded), since the quantity of interest is detection cost per step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .conjugate import NiwParams, NormalGammaParams
from .data import GeometricSegmentLength, SyntheticSpec, generate
from .engine import BocdEngine, FactorizedModel, HazardSpec, MultivariateModel
from .errors import ParameterError

__all__ = ["BenchRow", "run_cost_benchmark"]


@dataclass(frozen=True)
class BenchRow:
    T: int
    factorized_seconds: float
    multivariate_seconds: float

    @property
    def ratio(self) -> float:
        return self.multivariate_seconds / self.factorized_seconds


def _time_run(engine: BocdEngine, values: np.ndarray) -> float:
    start = time.perf_counter()
    for i in range(values.shape[0]):
        engine.step(values[i])
    return time.perf_counter() - start


def run_cost_benchmark(
    d: int = 4,
    t_values: tuple[int, ...] = (1000, 2000, 3000, 4000),
    truncation: int = 500,
    lam: float = 50.0,
    seed: int = 0,
) -> list[BenchRow]:
    """Time both engines at each stream length in ``t_values``.

    The stream is a d-dimensional piecewise Gaussian benchmark; each
    length is a prefix of the same stream and each engine run starts
    fresh.
    """
    t_values = tuple(int(t) for t in t_values)
    if not t_values or any(t < 1 for t in t_values):
        raise ParameterError(f"t_values must be positive, got {t_values!r}")
    spec = SyntheticSpec(
        d=d,
        segment_count=max(2, max(t_values) // 100),
        length_law=GeometricSegmentLength(100.0),
        mean_shift=5.0,
        noise_sigma=1.0,
        seed=seed,
    )
    values = generate(spec).stream.values
    while values.shape[0] < max(t_values):
        spec = SyntheticSpec(
            d=d,
            segment_count=spec.segment_count * 2,
            length_law=spec.length_law,
            mean_shift=spec.mean_shift,
            noise_sigma=spec.noise_sigma,
            seed=seed,
        )
        values = generate(spec).stream.values

    ng_prior = NormalGammaParams(0.0, 1.0, 1.0, 1.0)
    niw_prior = NiwParams(np.zeros(d), 1.0, float(d + 1), np.eye(d))
    rows = []
    for t in t_values:
        prefix = values[:t]
        fact = BocdEngine(FactorizedModel(d, ng_prior), HazardSpec(lam), truncation=truncation)
        mv = BocdEngine(MultivariateModel(niw_prior), HazardSpec(lam), truncation=truncation)
        rows.append(BenchRow(t, _time_run(fact, prefix), _time_run(mv, prefix)))
    return rows
