"""Asymptotic representation of the EM-test statistic.

Under the null, after dividing the data by the null standard deviation,

    EM = (sum X)^2 / sum X^2 + ((sum V)^+)^2 / sum V^2 + shift + o_p(1)

with ``V = (X^4 - 6 X^2 + 3) / 24`` the fourth Hermite polynomial term. This
module computes that representation from the data alone, without any EM
iterations, so it can serve as an independent check on :func:`em_test`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DegenerateDataError, _as_data
from .special import RngState


@dataclass(frozen=True)
class HermiteStats:
    n: int
    sum_x: float
    sum_x_sq: float
    sum_z: float
    sum_z_sq: float
    sum_u: float
    sum_u_sq: float
    sum_v: float
    sum_v_sq: float


def hermite_terms(data):
    """Per-observation ``(X, Z, U, V)`` arrays."""
    x = _as_data(data)
    x2 = x * x
    z = (x2 - 1.0) / 2.0
    u = (x2 * x - 3.0 * x) / 6.0
    v = (x2 * x2 - 6.0 * x2 + 3.0) / 24.0
    return x, z, u, v


def hermite_stats(data) -> HermiteStats:
    """Sums and sums of squares of the Hermite terms.

    ``data`` must already be on the unit null scale.
    """
    x, z, u, v = hermite_terms(data)
    return HermiteStats(
        n=x.size,
        sum_x=float(x.sum()), sum_x_sq=float(np.dot(x, x)),
        sum_z=float(z.sum()), sum_z_sq=float(np.dot(z, z)),
        sum_u=float(u.sum()), sum_u_sq=float(np.dot(u, u)),
        sum_v=float(v.sum()), sum_v_sq=float(np.dot(v, v)),
    )


def t_hat(stats: HermiteStats):
    """Maximizer ``(t1, t2, t4)`` of the quadratic approximation, ``t4 >= 0``."""
    if stats.sum_x_sq <= 0 or stats.sum_z_sq <= 0 or stats.sum_v_sq <= 0:
        raise DegenerateDataError("Hermite sums of squares must be positive")
    t1 = stats.sum_x / stats.sum_x_sq
    t2 = stats.sum_z / stats.sum_z_sq
    t4 = max(stats.sum_v, 0.0) / stats.sum_v_sq
    return t1, t2, t4


def standardize(data, sigma0=None):
    """Divide by ``sigma0`` (default: the null MLE ``sqrt(mean(x**2))``)."""
    x = _as_data(data)
    if sigma0 is None:
        sigma0 = math.sqrt(float(np.mean(x * x)))
    if not sigma0 > 0:
        raise DegenerateDataError("null standard deviation must be positive")
    return x / sigma0


def asymptotic_em_statistic(data, shift: float, sigma0=None) -> float:
    """Leading-order value of the EM-test statistic for ``data``.

    ``data`` is raw; it is divided by ``sigma0`` (the null MLE by default)
    before the Hermite sums are formed.
    """
    st = hermite_stats(standardize(data, sigma0))
    t1, _, t4 = t_hat(st)
    return t1 * st.sum_x + t4 * max(st.sum_v, 0.0) + shift


def mc_limiting_sample(draws: int, state: RngState) -> np.ndarray:
    """Monte Carlo draws of ``0.5 chi2_1 + 0.5 chi2_2`` (a 50/50 mixture)."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    rng = state.generator()
    z = rng.standard_normal((int(draws), 2))
    pick_two = rng.random(int(draws)) < 0.5
    return z[:, 0] ** 2 + np.where(pick_two, z[:, 1] ** 2, 0.0)
