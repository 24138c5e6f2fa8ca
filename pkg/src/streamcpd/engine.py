"""Online run-length recursion for multivariate changepoint detection.

The engine ingests one observation at a time and maintains a posterior
over the current run length (steps since the last changepoint). Each step
costs one predictive-density sweep over the surviving hypotheses plus a
sufficient-statistic update:

* growth:      log P(r_t = r+1) += pi_r + log(1 - h)
* changepoint: log P(r_t = 0)    = logsumexp_r(log P(r) + pi_r) + log h

where ``pi_r`` is the log predictive of the new observation under
hypothesis ``r`` and ``h`` the constant per-step hazard. All mass
bookkeeping is log-domain; the posterior is renormalized every step.

Two observation models are supported. The factorized model treats the
``d`` dimensions as independent scalar Gaussians (Normal-Gamma per
dimension); per-dimension log predictives sum, and the whole hypothesis
bank is updated with vectorized array arithmetic. The multivariate model
keeps one Normal-Inverse-Wishart state per hypothesis, paying a Cholesky
factorization per hypothesis per step for the joint covariance update;
it is the expensive baseline the factorized model is measured against.

Bounded memory comes from a truncation cap: once the support exceeds the
configured limit, the overflow hypothesis is folded into the last bucket,
which from then on means "run length >= cap". The bucket keeps whichever
statistics carried more posterior mass, never loses mass, and is excluded
from detection (its changepoint location is indeterminate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .conjugate import (
    NiwParams,
    NormalGammaParams,
    _niw_logpdf_raw,
    _niw_update_raw,
    _student_t_logpdf,
)
from .errors import NumericError, ParameterError

__all__ = [
    "BocdEngine",
    "Detection",
    "EngineRun",
    "FactorizedModel",
    "HazardSpec",
    "MapTracker",
    "MultivariateModel",
    "RunLengthPosterior",
    "SCHEMES",
    "StepResult",
    "extract_max_prob",
    "extract_threshold",
]

SCHEMES = ("threshold", "max_prob", "map_set")

# Steps at the start of a stream during which no detection is emitted;
# the posterior there is dominated by the prior.
_STARTUP_STEPS = 5


@dataclass(frozen=True)
class HazardSpec:
    """Constant hazard: each step ends the current run with probability
    ``1/lam``, i.e. run lengths are a priori geometric with mean ``lam``.

    ``lam = inf`` (hazard 0, no changepoints ever) is reserved for tests
    and must be requested explicitly via ``allow_infinite``.
    """

    lam: float

    def __init__(self, lam: float, *, allow_infinite: bool = False) -> None:
        lam = float(lam)
        if math.isinf(lam) and lam > 0:
            if not allow_infinite:
                raise ParameterError("lam=inf is a test-only setting; pass allow_infinite=True")
        elif not (math.isfinite(lam) and lam >= 1.0):
            raise ParameterError(f"lam must be >= 1, got {lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def probability(self) -> float:
        return 0.0 if math.isinf(self.lam) else 1.0 / self.lam

    @property
    def log_hazard(self) -> float:
        p = self.probability
        return -math.inf if p == 0.0 else math.log(p)

    @property
    def log_survival(self) -> float:
        p = self.probability
        return -math.inf if p == 1.0 else math.log1p(-p)


@dataclass(frozen=True)
class FactorizedModel:
    """Independent scalar Gaussians per dimension, sharing one
    Normal-Gamma prior."""

    dims: int
    prior: NormalGammaParams

    def __post_init__(self) -> None:
        if int(self.dims) < 1:
            raise ParameterError(f"dims must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", int(self.dims))


@dataclass(frozen=True)
class MultivariateModel:
    """Joint Gaussian with unknown mean and covariance under one NIW
    prior."""

    prior: NiwParams

    @property
    def dims(self) -> int:
        return self.prior.d


@dataclass(frozen=True, eq=False)
class RunLengthPosterior:
    """Normalized log-domain posterior over run lengths at step ``t``.
    Index ``r`` of ``log_probs`` is the probability that the current run
    is ``r`` steps old."""

    t: int
    log_probs: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def __len__(self) -> int:
        return int(self.log_probs.shape[0])


@dataclass(frozen=True)
class Detection:
    """A flagged changepoint: ``flagged_at`` is when the flag fired,
    ``located_at`` the estimated changepoint time (flag time minus run
    length minus the configured delay)."""

    flagged_at: int
    located_at: int
    scheme: str

    def __post_init__(self) -> None:
        if self.located_at > self.flagged_at:
            raise ParameterError("located_at cannot exceed flagged_at")


class MapTracker:
    """Viterbi-style tracker of the most probable changepoint set.

    ``scores[j]`` is the best log score of a fully segmented prefix
    ending ``j - 1`` steps after the stream start; two boundary zeros
    seed the recursion. Each update adjusts the current posterior by the
    matching prefix scores,

        adjusted[r] = log_posterior[r] + scores[t - r]

    (so a short run composes with a recently closed prefix), appends the
    best adjusted score, and reports whether run length 0 won.
    """

    def __init__(self) -> None:
        self._scores: list[float] = [0.0, 0.0]
        self._t = 0
        self._last_argmax: int | None = None

    @property
    def best_log_score(self) -> tuple[float, ...]:
        return tuple(self._scores)

    @property
    def last_argmax(self) -> int | None:
        return self._last_argmax

    def update(self, log_probs: np.ndarray) -> tuple[bool, int]:
        """Advance one step; returns (fired, argmax run length), where
        fired means run length 0 maximized the adjusted score."""
        self._t += 1
        t = self._t
        n = int(log_probs.shape[0])
        # scores[t - r] for r = 0..n-1, most recent first
        prefix = np.array(self._scores[t - n + 1 : t + 1][::-1])
        adjusted = log_probs + prefix
        r_star = int(np.argmax(adjusted))
        self._scores.append(float(adjusted[r_star]))
        self._last_argmax = r_star
        return r_star == 0, r_star


def extract_threshold(posterior: RunLengthPosterior, p: float) -> int | None:
    """Smallest run length whose posterior probability strictly exceeds
    ``p``, or None if no entry qualifies."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError(f"threshold must lie in (0, 1), got {p}")
    hits = np.nonzero(posterior.log_probs > math.log(p))[0]
    return int(hits[0]) if hits.size else None


def extract_max_prob(posterior: RunLengthPosterior) -> int:
    """Run length with maximum posterior probability; ties break toward
    the smaller run length."""
    if len(posterior) == 0:
        raise ParameterError("posterior is empty")
    return int(np.argmax(posterior.log_probs))


class _FactorizedBank:
    """Hypothesis bank for the factorized model: stacked Normal-Gamma
    parameters, one row per hypothesis, one column per dimension."""

    def __init__(self, model: FactorizedModel) -> None:
        prior = model.prior
        d = model.dims
        self.d = d
        self._prior = prior
        self.mu = np.full((1, d), prior.mu)
        self.beta = np.full((1, d), prior.beta)
        self.kappa = np.array([prior.kappa])
        self.alpha = np.array([prior.alpha])

    def __len__(self) -> int:
        return self.kappa.shape[0]

    def log_predict(self, x: np.ndarray) -> np.ndarray:
        df = 2.0 * self.alpha
        scale2 = self.beta * ((self.kappa + 1.0) / (self.kappa * self.alpha))[:, None]
        per_dim = _student_t_logpdf(x[None, :], df[:, None], self.mu, scale2)
        return per_dim.sum(axis=1)

    def update(self, x: np.ndarray) -> None:
        prior = self._prior
        mu_next = (self.kappa[:, None] * self.mu + x) / (self.kappa[:, None] + 1.0)
        beta_next = self.beta + (self.kappa / (2.0 * (self.kappa + 1.0)))[:, None] * (x - self.mu) ** 2
        self.mu = np.vstack((np.full((1, self.d), prior.mu), mu_next))
        self.beta = np.vstack((np.full((1, self.d), prior.beta), beta_next))
        self.kappa = np.concatenate(([prior.kappa], self.kappa + 1.0))
        self.alpha = np.concatenate(([prior.alpha], self.alpha + 0.5))

    def fold_cap(self, keep_incoming: bool, cap: int) -> None:
        keep = np.arange(cap + 1)
        if keep_incoming:
            keep[cap] = cap + 1
        self.mu = self.mu[keep]
        self.beta = self.beta[keep]
        self.kappa = self.kappa[keep]
        self.alpha = self.alpha[keep]

    def params_at(self, r: int) -> tuple[NormalGammaParams, ...]:
        return tuple(
            NormalGammaParams(self.mu[r, i], self.kappa[r], self.alpha[r], self.beta[r, i])
            for i in range(self.d)
        )


class _MultivariateBank:
    """Hypothesis bank for the joint model: one NIW state per hypothesis,
    held as raw arrays with cached Cholesky factors. Updated sequentially
    per hypothesis; the per-step Cholesky after each rank-1 scale update
    is the inherent cost of modeling the covariance online."""

    def __init__(self, model: MultivariateModel) -> None:
        prior = model.prior
        self.d = prior.d
        self._prior_state = (prior.mu, prior.kappa, prior.nu, prior.psi, prior._psi_chol)
        self._states = [self._prior_state]

    def __len__(self) -> int:
        return len(self._states)

    def log_predict(self, x: np.ndarray) -> np.ndarray:
        return np.array(
            [_niw_logpdf_raw(x, mu, kappa, nu, chol) for (mu, kappa, nu, _, chol) in self._states]
        )

    def update(self, x: np.ndarray) -> None:
        updated = []
        for mu, kappa, nu, psi, _ in self._states:
            mu2, kappa2, nu2, psi2 = _niw_update_raw(x, mu, kappa, nu, psi)
            updated.append((mu2, kappa2, nu2, psi2, np.linalg.cholesky(psi2)))
        self._states = [self._prior_state] + updated

    def fold_cap(self, keep_incoming: bool, cap: int) -> None:
        if keep_incoming:
            del self._states[cap]
        else:
            del self._states[cap + 1]

    def params_at(self, r: int) -> NiwParams:
        mu, kappa, nu, psi, _ = self._states[r]
        return NiwParams(mu, kappa, nu, psi)


class StepResult(NamedTuple):
    posterior: RunLengthPosterior
    detection: Detection | None


class EngineRun(NamedTuple):
    detections: list[Detection]
    posteriors: list[RunLengthPosterior] | None


class BocdEngine:
    """Sequential run-length changepoint detector.

    One engine instance owns one stream; steps must be applied in time
    order. Distinct instances are fully independent.

    Detection works by locating the most recent changepoint from the
    per-step run-length summary of the configured scheme:

    * ``threshold``: smallest run length with posterior above ``threshold``
      (no candidate, no detection);
    * ``max_prob``: posterior argmax;
    * ``map_set``: argmax of the MapTracker-adjusted scores, which damp
      single-step wobble by crediting segmentations of the prefix.

    A candidate run length ``r`` at step ``t`` places the changepoint at
    ``t - r - delay``; the delay compensates the evidence-accumulation lag
    of online detection. A Detection is emitted when that location is new:
    locations within ``dedup_window`` of an already-emitted one are
    suppressed (one event, not one flag per step), as are locations before
    the stream start, anything during the startup transient (first
    ``max(5, delay)`` steps), and the truncation cap bucket (whose
    location is indeterminate).
    """

    def __init__(
        self,
        model: FactorizedModel | MultivariateModel,
        hazard: HazardSpec,
        truncation: int = 500,
        scheme: str = "map_set",
        threshold: float | None = None,
        delay: int = 0,
        dedup_window: int = 5,
    ) -> None:
        if not isinstance(model, (FactorizedModel, MultivariateModel)):
            raise ParameterError(f"unknown model type {type(model).__name__}")
        if not isinstance(hazard, HazardSpec):
            raise ParameterError("hazard must be a HazardSpec")
        truncation = int(truncation)
        if truncation < 2:
            raise ParameterError(f"truncation must be >= 2, got {truncation}")
        if scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        if scheme == "threshold":
            if threshold is None:
                raise ParameterError("threshold scheme requires a threshold in (0, 1)")
            threshold = float(threshold)
            if not 0.0 < threshold < 1.0:
                raise ParameterError(f"threshold must lie in (0, 1), got {threshold}")
        delay = int(delay)
        if delay < 0:
            raise ParameterError(f"delay must be >= 0, got {delay}")
        dedup_window = int(dedup_window)
        if dedup_window < 0:
            raise ParameterError(f"dedup_window must be >= 0, got {dedup_window}")

        self.model = model
        self.hazard = hazard
        self.truncation = truncation
        self.scheme = scheme
        self.threshold = threshold
        self.delay = delay
        self.dedup_window = dedup_window

        self._bank = (
            _FactorizedBank(model) if isinstance(model, FactorizedModel) else _MultivariateBank(model)
        )
        self._log_post = np.array([0.0])
        self._tracker = MapTracker()
        self._steps = 0
        self._label: int | None = None
        self._first_label: int | None = None
        self._posterior: RunLengthPosterior | None = None
        self._emitted: list[int] = []

    @property
    def d(self) -> int:
        return self.model.dims

    @property
    def step_count(self) -> int:
        return self._steps

    @property
    def t(self) -> int | None:
        return self._label

    @property
    def posterior(self) -> RunLengthPosterior | None:
        return self._posterior

    @property
    def map_tracker(self) -> MapTracker:
        return self._tracker

    def hypothesis_parameters(self):
        """Conjugate parameters per surviving hypothesis, index-aligned
        with the posterior. Factorized: a tuple of per-dimension
        Normal-Gamma parameters per hypothesis; multivariate: one NIW
        parameter set per hypothesis. When the support is capped, the last
        entry is the aggregate 'run length >= cap' bucket."""
        return [self._bank.params_at(r) for r in range(len(self._bank))]

    def _check_observation(self, z) -> np.ndarray:
        arr = np.asarray(z, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1 or arr.shape[0] != self.d:
            raise ParameterError(f"observation has shape {np.shape(z)}, expected ({self.d},)")
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite observation at step {self._steps + 1}")
        return arr

    def step(self, z, t: int | None = None) -> StepResult:
        """Ingest one observation; returns the new posterior and the
        detection emitted this step, if any.

        ``t`` labels the observation's time index; omitted, it continues
        the internal counter. Explicit labels must advance by exactly 1.
        """
        if t is None:
            label = 1 if self._label is None else self._label + 1
        else:
            label = int(t)
            if self._label is not None and label != self._label + 1:
                raise ParameterError(f"time index must advance by 1 ({self._label} -> {label})")
        x = self._check_observation(z)

        log_pred = self._bank.log_predict(x)
        joint = self._log_post + log_pred
        grow = joint + self.hazard.log_survival
        change = logsumexp(joint) + self.hazard.log_hazard
        log_post = np.concatenate(([change], grow))
        log_post -= logsumexp(log_post)
        self._bank.update(x)

        cap = self.truncation
        if log_post.shape[0] > cap + 1:
            # Fold the overflow into the absorbing cap bucket. Mass adds
            # exactly (no renormalization); the statistics follow the
            # heavier hypothesis so a dominant long run survives the fold.
            incoming, bucket = log_post[cap + 1], log_post[cap]
            self._bank.fold_cap(keep_incoming=incoming > bucket, cap=cap)
            log_post[cap] = np.logaddexp(bucket, incoming)
            log_post = log_post[: cap + 1]

        self._steps += 1
        self._label = label
        if self._first_label is None:
            self._first_label = label
        self._log_post = log_post
        posterior = RunLengthPosterior(label, log_post.copy())
        posterior.log_probs.flags.writeable = False
        self._posterior = posterior

        detection = self._apply_scheme(posterior)
        return StepResult(posterior, detection)

    def _apply_scheme(self, posterior: RunLengthPosterior) -> Detection | None:
        # The tracker advances every step regardless of scheme so its
        # prefix scores stay aligned with the step count.
        _, adjusted_argmax = self._tracker.update(posterior.log_probs)
        if self.scheme == "map_set":
            r_star: int | None = adjusted_argmax
        elif self.scheme == "max_prob":
            r_star = extract_max_prob(posterior)
        else:
            r_star = extract_threshold(posterior, self.threshold)
        if r_star is None:
            return None
        at_cap = len(posterior) == self.truncation + 1 and r_star == self.truncation
        if at_cap:
            return None
        if self._steps <= max(_STARTUP_STEPS, self.delay):
            return None
        located = posterior.t - r_star - self.delay
        if located < self._first_label:
            return None
        if any(abs(located - prev) <= self.dedup_window for prev in self._emitted):
            return None
        self._emitted.append(located)
        return Detection(posterior.t, located, self.scheme)

    def run(self, stream, collect_posteriors: bool = False) -> EngineRun:
        """Feed a whole stream through the engine.

        ``stream`` may be anything with ``values``/``times`` attributes
        (a Stream) or a plain (T, d) array, in which case steps are
        labeled 1..T. When posteriors are collected on a fresh engine, the
        first entry is the initial state (all mass at run length 0), so an
        exported matrix starts with a probability-1 column-0 row.
        """
        values = getattr(stream, "values", None)
        times = getattr(stream, "times", None)
        if values is None:
            values = np.asarray(stream, dtype=float)
            if values.ndim == 1:
                values = values.reshape(-1, 1)
        detections: list[Detection] = []
        posteriors: list[RunLengthPosterior] | None = [] if collect_posteriors else None
        if posteriors is not None and self._steps == 0 and values.shape[0] > 0:
            first_label = int(times[0]) if times is not None else 1
            posteriors.append(RunLengthPosterior(first_label - 1, np.array([0.0])))
        for i in range(values.shape[0]):
            label = int(times[i]) if times is not None else None
            result = self.step(values[i], t=label)
            if result.detection is not None:
                detections.append(result.detection)
            if posteriors is not None:
                posteriors.append(result.posterior)
        return EngineRun(detections, posteriors)
