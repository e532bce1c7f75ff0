import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from emtest import (
    DegenerateDataError,
    EmTestConfig,
    MixtureParams,
    PenaltyConfig,
    e_step,
    em_test,
    fit_report,
    limiting_pvalue,
    m_step,
    modified_log_likelihood,
    null_fit,
    step1_profile_fit,
)
from emtest.em import modified_gap
from emtest.special import normal_cdf

W_AT_3 = 0.98901305736940681996  # phi(0) / (phi(3) + phi(0)), mpmath


def _data(seed, n=300, contam=0.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    k = int(contam * n)
    x[:k] = rng.normal(1.8, 1.4, size=k)
    return x


# --- E-step -----------------------------------------------------------------

def test_e_step_identical_components_returns_alpha():
    x = _data(0, 50)
    assert np.allclose(e_step(MixtureParams(0.3, 0.0, 1.2, 1.2), x), 0.3, atol=1e-15)
    assert np.allclose(e_step(MixtureParams(0.5, 0.0, 1.0, 1.0), x), 0.5, atol=1e-15)


def test_e_step_hand_value():
    w = e_step(MixtureParams(0.5, 3.0, 1.0, 1.0), [3.0])
    assert w[0] == pytest.approx(W_AT_3, abs=1e-12)


def test_e_step_bounds_and_monotonicity():
    x = np.linspace(-40, 40, 2001)
    w = e_step(MixtureParams(0.1, 2.0, 1.0, 1.0), x)
    assert np.all((w >= 0) & (w <= 1))
    # equal variances: the density ratio is increasing in x when mu > 0
    assert np.all(np.diff(w) >= 0)
    assert w[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [1.0])
def test_e_step_degenerate_alpha(alpha):
    with pytest.raises(ValueError):
        e_step(MixtureParams(alpha, 0, 1, 1), [0.1, 0.2])


# --- M-step -----------------------------------------------------------------

def test_m_step_alpha_closed_form_against_numeric():
    w = np.r_[np.full(4, 0.5), np.zeros(6)]  # n=10, sum=2
    x = np.linspace(-1, 1, 10)
    p = m_step(w, x, 0.0, PenaltyConfig(2.0, 1.0))
    assert p.alpha == pytest.approx(3 / 11, abs=1e-15)
    obj = lambda a: -(8 * math.log(1 - a) + 2 * math.log(a) + math.log(a))
    res = optimize.minimize_scalar(obj, bounds=(1e-9, 1 - 1e-9), method="bounded",
                                   options={"xatol": 1e-12})
    assert p.alpha == pytest.approx(res.x, abs=1e-7)


def test_m_step_mean_symmetric():
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    p = m_step(np.full(4, 0.3), x, 0.0, PenaltyConfig(2.0, 1.0))
    assert p.mu == pytest.approx(0.0, abs=1e-15)


def test_m_step_sigma1_limit_example():
    x = np.array([1.0, -1.0, 1.0, -1.0])  # sum (1-w) x^2 -> 4
    eps = 1e-12
    p = m_step(np.full(4, eps), x, 0.0, PenaltyConfig(2.0, 1.0))
    assert p.var1 == pytest.approx(1.0, abs=1e-10)

    def obj(v):
        return -(np.sum(-0.5 * np.log(v) - x ** 2 / (2 * v)) - 2.0 * (1 / v + math.log(v)))

    res = optimize.minimize_scalar(obj, bounds=(1e-3, 10), method="bounded",
                                   options={"xatol": 1e-10})
    assert p.var1 == pytest.approx(res.x, abs=1e-6)


def test_m_step_degenerate_weights():
    with pytest.raises(DegenerateDataError):
        m_step(np.zeros(5), np.arange(5.0), 0.0, PenaltyConfig(2.0, 1.0))
    with pytest.raises(ValueError):
        m_step(np.full(4, 1.5), np.arange(4.0), 0.0, PenaltyConfig(2.0, 1.0))


def _objectives(w, x, mu_cur, a, s0):

    def f_alpha(al):
        return np.sum(1 - w) * np.log(1 - al) + (np.sum(w) + 1) * np.log(al)

    def f_mu(mu):
        return -0.5 * np.sum(w[:, None] * (x[:, None] - mu) ** 2, axis=0)

    def pen(v):
        return -a * (s0 / v + np.log(v / s0))

    def f_v1(v):
        return (np.sum((1 - w)[:, None] * (-0.5 * np.log(v) - x[:, None] ** 2 / (2 * v)), axis=0)
                + pen(v))

    def f_v2(v):
        r = (x - mu_cur)[:, None]
        return np.sum(w[:, None] * (-0.5 * np.log(v) - r ** 2 / (2 * v)), axis=0) + pen(v)

    return f_alpha, f_mu, f_v1, f_v2


def test_m_step_updates_beat_grid_search():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n = int(rng.integers(5, 60))
        x = rng.normal(rng.uniform(-1, 1), rng.uniform(0.3, 3), size=n)
        w = rng.uniform(0, 1, size=n) ** rng.uniform(0.3, 3)
        mu_cur = rng.normal()
        a, s0 = rng.uniform(0.5, 5), rng.uniform(0.2, 4)
        p = m_step(w, x, mu_cur, PenaltyConfig(a, s0))
        fa, fm, f1, f2 = _objectives(w, x, mu_cur, a, s0)
        ga = np.linspace(1e-4, 1 - 1e-4, 1000)
        gm = np.linspace(x.min() - 1, x.max() + 1, 1000)
        gv = np.geomspace(1e-3, 100, 1000) * s0
        assert fa(p.alpha) >= fa(ga).max() - 1e-12
        assert fm(np.array([p.mu]))[0] >= fm(gm).max() - 1e-12
        assert f1(np.array([p.var1]))[0] >= f1(gv).max() - 1e-12
        assert f2(np.array([p.var2]))[0] >= f2(gv).max() - 1e-12


# --- Step 1 -----------------------------------------------------------------

def _pl_vars(alpha, data, pen):
    def f(th):
        return modified_log_likelihood(
            MixtureParams.from_variances(alpha, th[0], th[1], th[2]), data, pen)
    return f


@pytest.mark.parametrize("seed,contam,alpha", [(1, 0.0, 0.05), (2, 0.1, 0.15), (3, 0.2, 0.25)])
def test_step1_is_stationary(seed, contam, alpha):
    x = _data(seed, 400, contam)
    s0sq, _ = null_fit(x)
    pen = PenaltyConfig(2.3, s0sq)
    cfg = EmTestConfig(step1_tol=1e-13, step1_max_iter=20000)
    p, pl = step1_profile_fit(alpha, x, cfg, pen)
    f = _pl_vars(alpha, x, pen)
    th = np.array([p.mu, p.var1, p.var2])
    assert pl == pytest.approx(f(th), rel=1e-12)
    grad = []
    for i in range(3):
        h = 1e-5 * max(1.0, abs(th[i]))
        e = np.zeros(3)
        e[i] = h
        grad.append((f(th + e) - f(th - e)) / (2 * h))
    assert np.max(np.abs(grad)) < 1e-3 * x.size


def test_step1_default_tolerance_near_stationary():
    x = _data(4, 400, 0.1)
    s0sq, _ = null_fit(x)
    pen = PenaltyConfig(2.3, s0sq)
    p, _ = step1_profile_fit(0.15, x, EmTestConfig(), pen)
    f = _pl_vars(0.15, x, pen)
    th = np.array([p.mu, p.var1, p.var2])
    g = [(f(th + h) - f(th - h)) / 2e-5 for h in np.eye(3) * 1e-5]
    assert np.max(np.abs(g)) < 1e-3 * x.size


def test_step1_two_point_data_stays_at_null():
    x = np.array([-1.0, 1.0])
    pen = PenaltyConfig(2.0, 1.0)
    p, pl = step1_profile_fit(0.15, x, EmTestConfig(), pen)
    at_null = modified_log_likelihood(MixtureParams(0.15, 0.0, 1.0, 1.0), x, pen)
    assert pl >= at_null
    assert pl - at_null < 1e-6


def test_step1_never_below_null_start():
    for seed in range(20):
        x = _data(seed, 60, 0.15)
        s0sq, _ = null_fit(x)
        pen = PenaltyConfig(2.0, s0sq)
        s0 = math.sqrt(s0sq)
        for al in (0.05, 0.25):
            _, pl = step1_profile_fit(al, x, EmTestConfig(), pen)
            assert pl >= modified_log_likelihood(MixtureParams(al, 0, s0, s0), x, pen) - 1e-9


def test_step1_deterministic():
    x = _data(5, 200, 0.1)
    pen = PenaltyConfig(2.0, null_fit(x)[0])
    assert step1_profile_fit(0.05, x, EmTestConfig(), pen) == step1_profile_fit(
        0.05, x, EmTestConfig(), pen)


# --- em_test ----------------------------------------------------------------

def test_config_validation():
    for kw in ({"alpha_grid": ()}, {"alpha_grid": (0.0,)}, {"alpha_grid": (1.0,)}, {"K": 0},
               {"step1_tol": 0}, {"a_n_override": -1.0}):
        with pytest.raises(ValueError):
            EmTestConfig(**kw)


def test_em_test_rejects_small_or_degenerate_input():
    with pytest.raises(DegenerateDataError):
        em_test(np.arange(9.0))
    with pytest.raises(DegenerateDataError):
        em_test(np.zeros(50))


@pytest.mark.parametrize("seed,contam", [(0, 0.0), (1, 0.1), (2, 0.25)])
def test_scale_invariance(seed, contam):
    x = _data(seed, 400, contam)
    base = em_test(x)
    for c in (0.5, 2.0, 10.0):
        r = em_test(c * x)
        assert r.statistic == pytest.approx(base.statistic, rel=1e-8, abs=1e-12)
        assert r.p_value == pytest.approx(base.p_value, rel=1e-8, abs=1e-300)
        assert r.best_params.sigma1 == pytest.approx(c * base.best_params.sigma1, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(10, 300), st.floats(0, 0.5))
def test_statistic_lower_bound(seed, n, contam):
    x = _data(seed, n, contam)
    r = em_test(x)
    assert r.statistic >= 2 * math.log(0.25)
    assert r.statistic >= r.shift
    assert 0 < r.p_value <= 1


def test_lower_bound_symmetric_data_and_k1():
    x = np.r_[np.linspace(-2, 2, 21), -np.linspace(-2, 2, 21)]
    for K in (1, 2, 3):
        r = em_test(x, EmTestConfig(K=K))
        assert r.statistic >= r.shift


@pytest.mark.parametrize("seed,contam", [(0, 0.0), (3, 0.1), (6, 0.3)])
def test_ascent_and_trace_consistency(seed, contam):
    x = _data(seed, 500, contam)
    r = em_test(x, EmTestConfig(K=6))
    assert r.statistic == max(t.final_M for t in r.traces)
    assert r.best_index == r.ties[0]
    for t in r.traces:
        pls = [rec.pl for rec in t.records]
        assert all(b >= a - 1e-9 for a, b in zip(pls, pls[1:]))
        assert t.records[0].alpha == t.alpha_init
        for rec in t.records:
            p = MixtureParams(rec.alpha, rec.mu, rec.sigma1, rec.sigma2)
            assert rec.M == pytest.approx(modified_gap(p, x, r.a_n_used), abs=1e-8)


def test_k_counts_total_updates():
    x = _data(8, 200, 0.1)
    for K in (1, 3):
        r = em_test(x, EmTestConfig(K=K))
        assert all(len(t.records) == K for t in r.traces)
    r1 = em_test(x, EmTestConfig(K=1))
    r3 = em_test(x, EmTestConfig(K=3))
    assert [t.records[0] for t in r1.traces] == [t.records[0] for t in r3.traces]


def test_a_n_override_and_defaults():
    x = _data(9, 500)
    assert em_test(x).a_n_used == pytest.approx(math.exp(1.747 - 843.681 / 500) + 1.4)
    assert em_test(x, EmTestConfig(a_n_override=3.0)).a_n_used == 3.0
    r = em_test(x, EmTestConfig(alpha_grid=(0.5,)))
    assert r.shift == pytest.approx(2 * math.log(0.5))


def test_em_test_detects_strong_signal():
    x = _data(10, 1000, 0.1)
    r = em_test(x)
    assert r.p_value < 1e-6
    assert 0.02 < r.best_params.alpha < 0.3


def test_fit_report_consistency_on_null_data():
    x = np.random.default_rng(12).standard_normal(10000)
    p = fit_report(x)
    s0 = math.sqrt(np.mean(x * x))
    assert abs(p.mu) < 0.15
    assert p.sigma1 / s0 == pytest.approx(1, abs=0.1)
    assert p.sigma2 / s0 == pytest.approx(1, abs=0.1)
    assert fit_report(x) == p


# --- limiting p-value -------------------------------------------------------

def test_limiting_pvalue_boundary():
    assert limiting_pvalue(-2.0, -2.0) == 1.0
    assert limiting_pvalue(-5.0, -2.0) == 1.0


def test_limiting_pvalue_reported_value():
    s = 41.042 + 2 * math.log(4)
    expect = 0.5 * 2 * (1 - normal_cdf(math.sqrt(s))) + 0.5 * math.exp(-s / 2)
    p = limiting_pvalue(41.042, 2 * math.log(0.25))
    assert p == pytest.approx(1.7107187678625750e-10, rel=1e-9)
    assert p == pytest.approx(expect, rel=1e-4)
    assert 1.7e-10 / 1.2 < p < 1.7e-10 * 1.2


def test_limiting_pvalue_matches_5_percent_point():
    # 0.5 chi2_1 + 0.5 chi2_2 upper 5% point, found by root finding
    s = optimize.brentq(lambda s: limiting_pvalue(s, 0.0) - 0.05, 1, 10, xtol=1e-14)
    assert s == pytest.approx(5.1376, abs=1e-3)
