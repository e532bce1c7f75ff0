"""Contaminated normal mixture, penalties and the modified log-likelihood.

The model is ``(1 - alpha) N(0, sigma1**2) + alpha N(mu, sigma2**2)``. The
second component is the contamination; ``alpha = 1`` is admitted so that the
null value of the modified log-likelihood can be written as
``pl(1, 0, s0, s0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import LOG_SQRT_2PI

# variances below this multiple of sigma0_sq are clamped in evaluations
MIN_VAR_RATIO = 1e-12


class DegenerateDataError(ValueError):
    """Raised when the data cannot support the model (e.g. all zeros)."""


@dataclass(frozen=True)
class MixtureParams:
    alpha: float
    mu: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        vals = (self.alpha, self.mu, self.sigma1, self.sigma2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("mixture parameters must be finite")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("component standard deviations must be positive")

    @classmethod
    def from_variances(cls, alpha, mu, var1, var2):
        return cls(float(alpha), float(mu), math.sqrt(var1), math.sqrt(var2))

    @property
    def var1(self):
        return self.sigma1 ** 2

    @property
    def var2(self):
        return self.sigma2 ** 2

    def scaled(self, c):
        """Parameters of the model for data multiplied by ``c > 0``."""
        return MixtureParams(self.alpha, c * self.mu, c * self.sigma1, c * self.sigma2)

    def describe(self, digits=3):
        a = self.alpha
        return (f"{1 - a:.{digits}f} N(0, {self.sigma1:.{digits}f}^2) + "
                f"{a:.{digits}f} N({self.mu:.{digits}f}, {self.sigma2:.{digits}f}^2)")


@dataclass(frozen=True)
class PenaltyConfig:
    """Strength ``a_n`` of the variance penalty and its anchor ``sigma0_sq``."""

    a_n: float
    sigma0_sq: float

    def __post_init__(self):
        if not (self.a_n > 0 and math.isfinite(self.a_n)):
            raise ValueError("a_n must be positive")
        if not (self.sigma0_sq > 0 and math.isfinite(self.sigma0_sq)):
            raise ValueError("sigma0_sq must be positive")


def _as_data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("data must be nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    return x


def _pointwise_loglik(params, x, var1, var2):
    lf1 = -LOG_SQRT_2PI - 0.5 * np.log(var1) - 0.5 * x * x / var1
    if params.mu == 0 and var1 == var2:
        # identical components: the mixture is exactly one normal
        return lf1
    d = x - params.mu
    lf2 = -LOG_SQRT_2PI - 0.5 * np.log(var2) - 0.5 * d * d / var2
    if params.alpha == 1:
        return lf2
    return np.logaddexp(math.log1p(-params.alpha) + lf1, math.log(params.alpha) + lf2)


def log_likelihood(params: MixtureParams, data) -> float:
    """Mixture log-likelihood summed over ``data`` (log-sum-exp per point)."""
    x = _as_data(data)
    return float(np.sum(_pointwise_loglik(params, x, params.var1, params.var2)))


def penalty_alpha(alpha: float) -> float:
    """``log(alpha)``; zero at ``alpha = 1`` and unbounded below at 0."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    return math.log(alpha)


def penalty_sigma(sigma_sq: float, cfg: PenaltyConfig) -> float:
    """``-a_n * (s0^2 / sigma^2 + log(sigma^2 / s0^2))``, maximal at ``s0^2``."""
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    r = sigma_sq / cfg.sigma0_sq
    return -cfg.a_n * (1.0 / r + math.log(r))


def modified_log_likelihood(params: MixtureParams, data, cfg: PenaltyConfig) -> float:
    x = _as_data(data)
    floor = MIN_VAR_RATIO * cfg.sigma0_sq
    v1 = max(params.var1, floor)
    v2 = max(params.var2, floor)
    ll = float(np.sum(_pointwise_loglik(params, x, v1, v2)))
    return (ll + penalty_alpha(params.alpha)
            + penalty_sigma(v1, cfg) + penalty_sigma(v2, cfg))


def null_fit(data, a_n: float = 1.0):
    """Null variance estimate ``sum(x**2)/n`` and the null modified log-likelihood.

    Returns ``(sigma0_sq, pl_null)`` where ``pl_null`` is evaluated at
    ``(1, 0, s0, s0)`` with penalty strength ``a_n``.
    """
    x = _as_data(data)
    sigma0_sq = float(np.mean(x * x))
    if sigma0_sq == 0:
        raise DegenerateDataError("all observations are zero; null variance is 0")
    s0 = math.sqrt(sigma0_sq)
    cfg = PenaltyConfig(a_n, sigma0_sq)
    pl_null = modified_log_likelihood(MixtureParams(1.0, 0.0, s0, s0), x, cfg)
    return sigma0_sq, pl_null


def a_n_default(n: int) -> float:
    """Regression-calibrated variance-penalty strength for sample size ``n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.exp(1.747 - 843.681 / n) + 1.4
