"""Conjugate Gaussian families with Student-t posterior predictives.

Normal-Gamma models scalar observations with unknown mean and precision;
Normal-Inverse-Wishart models vector observations with unknown mean and
covariance. Both admit O(1) sufficient-statistic updates per observation,
which is what keeps the online run-length recursion tractable.

All public operations are pure: parameter objects are immutable and every
update returns a fresh instance. Densities are natural-log throughout;
raw probabilities underflow after a few thousand stream steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import ParameterError

__all__ = [
    "NormalGammaParams",
    "NiwParams",
    "ng_posterior_predictive_logpdf",
    "ng_update",
    "niw_posterior_predictive_logpdf",
    "niw_update",
]

# Component-wise tolerance for accepting a scale matrix as symmetric.
_SYMMETRY_ATOL = 1e-12


@dataclass(frozen=True)
class NormalGammaParams:
    """Normal-Gamma prior/posterior over the mean and precision of a
    scalar Gaussian.

    ``mu`` is the location estimate, ``kappa`` the pseudo-count behind it,
    and ``alpha``/``beta`` the Gamma shape/rate over the precision. After
    ``n`` single-observation updates, ``kappa`` has grown by exactly ``n``
    and ``alpha`` by ``n/2``.
    """

    mu: float
    kappa: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("mu", "kappa", "alpha", "beta"):
            raw = getattr(self, name)
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ParameterError(f"{name} must be a real number, got {raw!r}") from None
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.kappa <= 0.0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.alpha <= 0.0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0.0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True, eq=False)
class NiwParams:
    """Normal-Inverse-Wishart prior/posterior over the mean and covariance
    of a d-dimensional Gaussian.

    ``psi`` is the positive-definite scale matrix and ``nu`` the degrees of
    freedom (``nu > d - 1`` at all times). Construction validates eagerly
    and caches the Cholesky factor of ``psi`` for the predictive density.
    """

    mu: np.ndarray
    kappa: float
    nu: float
    psi: np.ndarray

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float, copy=True).reshape(-1)
        if mu.size == 0:
            raise ParameterError("mu must have at least one component")
        if not np.all(np.isfinite(mu)):
            raise ParameterError("mu must be finite")
        d = mu.size
        psi = np.array(self.psi, dtype=float, copy=True)
        if psi.shape != (d, d):
            raise ParameterError(f"psi must have shape ({d}, {d}), got {psi.shape}")
        if not np.all(np.isfinite(psi)):
            raise ParameterError("psi must be finite")
        if np.abs(psi - psi.T).max() > _SYMMETRY_ATOL:
            raise ParameterError("psi must be symmetric")
        kappa = float(self.kappa)
        nu = float(self.nu)
        if not math.isfinite(kappa) or kappa <= 0.0:
            raise ParameterError(f"kappa must be a finite positive real, got {self.kappa!r}")
        if not math.isfinite(nu) or nu <= d - 1:
            raise ParameterError(f"nu must exceed d - 1 = {d - 1}, got {self.nu!r}")
        try:
            chol = np.linalg.cholesky(psi)
        except np.linalg.LinAlgError:
            raise ParameterError("psi must be positive definite") from None
        for arr in (mu, psi, chol):
            arr.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "_psi_chol", chol)

    @property
    def d(self) -> int:
        return self.mu.size


def _student_t_logpdf(x, df, loc, scale2):
    """Log density of a Student-t with the given df, location and squared
    scale. Vectorized over any broadcastable argument combination."""
    z2 = (x - loc) ** 2 / scale2
    return (
        gammaln(0.5 * (df + 1.0))
        - gammaln(0.5 * df)
        - 0.5 * np.log(df * np.pi * scale2)
        - 0.5 * (df + 1.0) * np.log1p(z2 / df)
    )


def _mv_student_t_logpdf(x, df, mu, scale_chol):
    """Log density of a multivariate Student-t given the Cholesky factor
    of its scale matrix."""
    d = mu.size
    y = solve_triangular(scale_chol, x - mu, lower=True, check_finite=False)
    maha = float(y @ y)
    logdet = 2.0 * float(np.log(np.diagonal(scale_chol)).sum())
    return float(
        gammaln(0.5 * (df + d))
        - gammaln(0.5 * df)
        - 0.5 * (d * math.log(df * math.pi) + logdet)
        - 0.5 * (df + d) * math.log1p(maha / df)
    )


def _checked_scalar(x) -> float:
    try:
        value = float(x)
    except (TypeError, ValueError):
        raise ParameterError(f"observation must be a real number, got {x!r}") from None
    if not math.isfinite(value):
        raise ParameterError(f"observation must be finite, got {value!r}")
    return value


def _checked_vector(x, d: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size != d:
        raise ParameterError(f"observation has dimension {arr.size}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("observation must be finite")
    return arr


def ng_posterior_predictive_logpdf(params: NormalGammaParams, x: float) -> float:
    """Log density of the next observation under the Normal-Gamma
    posterior predictive.

    The predictive is Student-t with ``df = 2*alpha``, location ``mu`` and
    squared scale ``beta*(kappa+1)/(alpha*kappa)``.
    """
    value = _checked_scalar(x)
    df = 2.0 * params.alpha
    scale2 = params.beta * (params.kappa + 1.0) / (params.alpha * params.kappa)
    return float(_student_t_logpdf(value, df, params.mu, scale2))


def ng_update(params: NormalGammaParams, x: float) -> NormalGammaParams:
    """Absorb one observation and return the updated Normal-Gamma
    parameters. The input object is left untouched."""
    value = _checked_scalar(x)
    kappa = params.kappa
    mu_next = (kappa * params.mu + value) / (kappa + 1.0)
    beta_next = params.beta + kappa * (value - params.mu) ** 2 / (2.0 * (kappa + 1.0))
    return NormalGammaParams(mu_next, kappa + 1.0, params.alpha + 0.5, beta_next)


def niw_posterior_predictive_logpdf(params: NiwParams, x) -> float:
    """Log density of the next observation under the NIW posterior
    predictive: multivariate Student-t with ``df = nu - d + 1``, location
    ``mu`` and scale matrix ``psi*(kappa+1)/(kappa*(nu-d+1))``."""
    vec = _checked_vector(x, params.d)
    df = params.nu - params.d + 1.0
    # chol(psi * c) = chol(psi) * sqrt(c)
    c = (params.kappa + 1.0) / (params.kappa * df)
    scale_chol = params._psi_chol * math.sqrt(c)
    return _mv_student_t_logpdf(vec, df, params.mu, scale_chol)


def niw_update(params: NiwParams, x) -> NiwParams:
    """Absorb one observation and return the updated NIW parameters via
    the rank-1 scale update. The input object is left untouched."""
    vec = _checked_vector(x, params.d)
    kappa_next = params.kappa + 1.0
    diff = vec - params.mu
    mu_next = (params.kappa * params.mu + vec) / kappa_next
    psi_next = params.psi + (params.kappa / kappa_next) * np.outer(diff, diff)
    return NiwParams(mu_next, kappa_next, params.nu + 1.0, psi_next)


# Internal fast paths used by the engine's hypothesis banks. They share
# the formulas above but skip per-call validation and object construction;
# the public operations remain the validated reference surface.


def _niw_logpdf_raw(x, mu, kappa, nu, psi_chol) -> float:
    d = mu.size
    df = nu - d + 1.0
    scale_chol = psi_chol * math.sqrt((kappa + 1.0) / (kappa * df))
    return _mv_student_t_logpdf(x, df, mu, scale_chol)


def _niw_update_raw(x, mu, kappa, nu, psi):
    kappa_next = kappa + 1.0
    diff = x - mu
    mu_next = (kappa * mu + x) / kappa_next
    psi_next = psi + (kappa / kappa_next) * np.outer(diff, diff)
    return mu_next, kappa_next, nu + 1.0, psi_next
