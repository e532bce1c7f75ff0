"""Compiled inner loops of the EM-test.

All kernels work on data already divided by the null standard deviation, so
the variance penalty is anchored at 1 and reads ``-a * (1/v + log v)``.
Log-likelihoods are carried relative to the N(0, 1) log-likelihood of the
same data, which keeps ``pl(theta) - pl(1, 0, 1, 1)`` free of cancellation.
"""

import math

import numpy as np
from numba import njit

MIN_VAR = 1e-12


@njit(cache=True)
def penalty_gap(v, a):
    """``p(v) - p(1)`` for the standardized variance penalty."""
    return -a * (1.0 / v + math.log(v) - 1.0)


@njit(cache=True, fastmath=True)
def weighted_pass(x, alpha, mu, v1, v2, a, w):
    """E-step plus sufficient statistics at ``(alpha, mu, v1, v2)``.

    Fills ``w`` with posterior contamination weights and returns
    ``(half_gap, sw, swx, swxx, s1w, s1wxx)`` where ``half_gap`` is
    ``pl(theta) - pl(1, 0, 1, 1)``.
    """
    v1 = max(v1, MIN_VAR)
    v2 = max(v2, MIN_VAR)
    n = x.shape[0]
    collapse = mu == 0.0 and v1 == v2
    la0 = math.log1p(-alpha)
    lb0 = math.log(alpha)
    hl1 = 0.5 * math.log(v1)
    hl2 = 0.5 * math.log(v2)
    c1 = 0.5 * (1.0 / v1 - 1.0)
    iv2 = 0.5 / v2
    ll = 0.0
    sw = 0.0
    swx = 0.0
    swxx = 0.0
    s1w = 0.0
    s1wxx = 0.0
    for i in range(n):
        xi = x[i]
        xx = xi * xi
        d1 = -hl1 - c1 * xx
        if collapse:
            ll += d1
            wi = alpha
        else:
            r = xi - mu
            d2 = -hl2 - iv2 * r * r + 0.5 * xx
            la = la0 + d1
            lb = lb0 + d2
            if la > lb:
                e = math.exp(lb - la)
                ll += la + math.log1p(e)
                wi = e / (1.0 + e)
            else:
                e = math.exp(la - lb)
                ll += lb + math.log1p(e)
                wi = 1.0 / (1.0 + e)
        w[i] = wi
        sw += wi
        swx += wi * xi
        swxx += wi * xx
        s1w += 1.0 - wi
        s1wxx += (1.0 - wi) * xx
    half_gap = ll + lb0 + penalty_gap(v1, a) + penalty_gap(v2, a)
    return half_gap, sw, swx, swxx, s1w, s1wxx


@njit(cache=True)
def profile_fit(x, alpha, mu0, a, tol, max_iter, pl_ref, w):
    """Alpha-frozen ECM from ``(alpha, mu0, 1, 1)``.

    Returns ``(mu, v1, v2, half_gap, iterations)`` for the endpoint, or the
    start itself if rounding left the endpoint below it.
    """
    mu = mu0
    v1 = 1.0
    v2 = 1.0
    prev = 0.0
    h_start = 0.0
    it = 0
    h = 0.0
    while True:
        h, sw, swx, swxx, s1w, s1wxx = weighted_pass(x, alpha, mu, v1, v2, a, w)
        if it == 0:
            h_start = h
        elif abs(h - prev) <= tol * abs(pl_ref + h):
            break
        if it >= max_iter:
            break
        prev = h
        if sw > 0.0:
            mu = swx / sw
            ss2 = max(swxx - swx * mu, 0.0)
        else:
            ss2 = 0.0
        v1 = (s1wxx + 2.0 * a) / (s1w + 2.0 * a)
        v2 = (ss2 + 2.0 * a) / (sw + 2.0 * a)
        it += 1
    if h < h_start:
        return mu0, 1.0, 1.0, h_start, it
    return mu, v1, v2, h, it


@njit(cache=True)
def em_statistic(x, alphas, mu_starts, K, a, tol, max_iter, pl_ref):
    """Steps 1-3 for every initial alpha.

    Returns ``trace`` of shape ``(J, K, 5)`` holding
    ``(alpha, mu, v1, v2, half_gap)`` at iterations ``k = 1..K``, the number
    of Step-1 iterations used and the index of the winning start per alpha.
    """
    n = x.shape[0]
    J = alphas.shape[0]
    S = mu_starts.shape[0]
    trace = np.empty((J, K, 5))
    iters = np.zeros(J, dtype=np.int64)
    best_start = np.zeros(J, dtype=np.int64)
    w = np.empty(n)
    for j in range(J):
        al = alphas[j]
        best_h = -np.inf
        bmu = 0.0
        bv1 = 1.0
        bv2 = 1.0
        for s in range(S):
            mu, v1, v2, h, it = profile_fit(x, al, mu_starts[s], a, tol, max_iter, pl_ref, w)
            iters[j] += it
            if h > best_h:
                best_h = h
                bmu = mu
                bv1 = v1
                bv2 = v2
                best_start[j] = s
        trace[j, 0, 0] = al
        trace[j, 0, 1] = bmu
        trace[j, 0, 2] = bv1
        trace[j, 0, 3] = bv2
        trace[j, 0, 4] = best_h
        cur_a = al
        cur_mu = bmu
        cur_v1 = bv1
        cur_v2 = bv2
        for k in range(1, K):
            h, sw, swx, swxx, s1w, s1wxx = weighted_pass(x, cur_a, cur_mu, cur_v1, cur_v2, a, w)
            new_a = (sw + 1.0) / (n + 1.0)
            if sw > 0.0:
                new_mu = swx / sw
            else:
                new_mu = cur_mu
            # residuals around the current mean, as in the displayed M-step
            ss2 = max(swxx - 2.0 * cur_mu * swx + cur_mu * cur_mu * sw, 0.0)
            cur_v1 = (s1wxx + 2.0 * a) / (s1w + 2.0 * a)
            cur_v2 = (ss2 + 2.0 * a) / (sw + 2.0 * a)
            cur_a = new_a
            cur_mu = new_mu
            h, sw, swx, swxx, s1w, s1wxx = weighted_pass(x, cur_a, cur_mu, cur_v1, cur_v2, a, w)
            trace[j, k, 0] = cur_a
            trace[j, k, 1] = cur_mu
            trace[j, k, 2] = cur_v1
            trace[j, k, 3] = cur_v2
            trace[j, k, 4] = h
    return trace, iters, best_start
