import io
import math

import numpy as np
import pytest

from emtest import EmTestConfig
from emtest.simulation import (
    DEFAULT_A_GRID,
    GeneratorSpec,
    calibration_experiment,
    discrepancy_y,
    fit_tuning_regression,
    generate_sample,
    reference_table,
    simulate_rejection_rate,
    simulate_statistics,
    write_calibration_csv,
    write_results_csv,
)
from emtest.special import RngState


def test_generator_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec(kind="beta")
    with pytest.raises(ValueError):
        GeneratorSpec.null(0.0)
    with pytest.raises(ValueError):
        GeneratorSpec.mixture(1.5, 0.0)


def test_null_generator_variance():
    x = generate_sample(GeneratorSpec.null(), 10**6, RngState(1))
    assert abs(x.var() - 1) < 0.006


def test_mixture_with_zero_alpha_matches_null():
    st = RngState(3, 9)
    a = generate_sample(GeneratorSpec.null(1.0), 1000, st)
    b = generate_sample(GeneratorSpec.mixture(0.0, 5.0, 1.0, 3.0), 1000, st)
    assert np.array_equal(a, b)


def test_mixture_generator_mean():
    x = generate_sample(GeneratorSpec.mixture(0.05, 2.0, 1.0, math.sqrt(2)), 10**6, RngState(4))
    # sd of the mean is sqrt(var/n) ~ 0.0011
    assert abs(x.mean() - 0.1) < 0.005


def test_generator_deterministic():
    spec = GeneratorSpec.mixture(0.1, 1.0, 1.0, 2.0)
    assert np.array_equal(generate_sample(spec, 50, RngState(5, 2)),
                          generate_sample(spec, 50, RngState(5, 2)))


def test_single_replication_rate():
    res = simulate_rejection_rate(GeneratorSpec.null(), 100, 1, seed=3)
    assert res.rate in (0.0, 1.0) and res.reps == 1


def test_rejection_rate_fields_and_reproducibility():
    spec = GeneratorSpec.mixture(0.1, 2.0, 1.0, 1.0)
    a = simulate_rejection_rate(spec, 200, 40, 0.05, seed=21)
    b = simulate_rejection_rate(spec, 200, 40, 0.05, seed=21)
    assert a == b
    assert np.array_equal(a.statistics, b.statistics)
    assert a.rate == a.rejections / a.reps
    assert a.mc_stderr == pytest.approx(math.sqrt(a.rate * (1 - a.rate) / a.reps))
    with pytest.raises(ValueError):
        simulate_rejection_rate(spec, 200, 10, level=1.0)


def test_parallel_invariance():
    spec = GeneratorSpec.null()
    s1, p1 = simulate_statistics(spec, 100, 12, seed=8, workers=1)
    s2, p2 = simulate_statistics(spec, 100, 12, seed=8, workers=3)
    assert np.array_equal(s1, s2) and np.array_equal(p1, p2)


def test_workers_env(monkeypatch):
    from emtest.simulation import worker_count
    monkeypatch.setenv("EMTEST_THREADS", "2")
    assert worker_count() == 2
    monkeypatch.delenv("EMTEST_THREADS")
    assert worker_count(5) == 5


def test_discrepancy_y():
    assert discrepancy_y(0.05, 0.05) == 0.0
    assert discrepancy_y(0.07, 0.03) == pytest.approx(-discrepancy_y(0.03, 0.07))
    # invert log-odds at y = 0.175
    q_hat = 1 / (1 + math.exp(-(0.175 + math.log(0.05 / 0.95))))
    assert q_hat == pytest.approx(0.0590, abs=5e-5)
    assert discrepancy_y(q_hat, 0.05) == pytest.approx(0.175, abs=1e-12)
    for bad in ((0.0, 0.05), (0.05, 1.0)):
        with pytest.raises(ValueError):
            discrepancy_y(*bad)


def test_reference_table_shape():
    t = reference_table()
    assert t.n_grid == (500, 1000, 1500)
    assert t.a_grid == DEFAULT_A_GRID
    assert t.y.shape == (3, 13) and t.y.size == 39
    assert t.y[0, 0] == 0.175 and t.y[2, -1] == 0.081


def test_regression_on_reference_table():
    fit = reference_table().fit()
    b0, b1, b2 = fit.coef
    assert b0 == pytest.approx(0.159, abs=0.005)
    assert b1 == pytest.approx(-76.775, abs=2)
    assert b2 == pytest.approx(-0.091, abs=0.005)
    assert fit.adj_r_squared == pytest.approx(0.71, abs=0.02)
    assert fit.formula_intercept == pytest.approx(1.747, abs=0.02)
    assert fit.formula_slope == pytest.approx(843.681, abs=10)


def test_regression_residuals_orthogonal():
    fit = reference_table().fit()
    assert np.max(np.abs(fit.design.T @ fit.residuals)) < 1e-8


def test_regression_recovers_exact_model():
    a = np.tile(np.arange(1.6, 4.01, 0.2), 3)
    nv = np.repeat([500.0, 1000.0, 1500.0], 13)
    y = 0.2 - 50.0 / nv - 0.1 * np.log(a - 1.4)
    fit = fit_tuning_regression(a, nv, y)
    assert np.allclose(fit.coef, (0.2, -50.0, -0.1), atol=1e-10)
    assert fit.a_n(1000) == pytest.approx(math.exp((0.2 - 0.05) / 0.1) + 1.4, rel=1e-10)


def test_regression_degenerate_design():
    with pytest.raises(ValueError):
        fit_tuning_regression([2.0, 2.0, 2.0], [500, 1000, 1500], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        fit_tuning_regression([2.0, 2.2, 2.4], [500, 500, 500], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        calibration_experiment(a_grid=(1.3, 2.0), n_grid=(100, 200), reps=2)


def test_calibration_experiment_small():
    table, fit = calibration_experiment(a_grid=(2.0, 3.0), n_grid=(50, 100), reps=100, seed=2)
    assert table.y.shape == (2, 2)
    assert np.all((table.q_hat > 0) & (table.q_hat < 1))
    assert table.y[0, 0] == pytest.approx(discrepancy_y(table.q_hat[0, 0], 0.05))
    assert len(fit.coef) == 3


def test_calibration_cell_without_rejections_is_an_error():
    with pytest.raises(ValueError, match="reps"):
        calibration_experiment(a_grid=(2.0, 3.0), n_grid=(50, 100), reps=1, seed=0)


def test_csv_writers():
    spec = GeneratorSpec.null()
    res = simulate_rejection_rate(spec, 50, 3, seed=1)
    buf = io.StringIO()
    write_results_csv([(spec, 50, res)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "kind,null_sigma,alpha,mu,sigma1,sigma2,n,reps,level,rate,mc_stderr,seed"
    assert lines[1].startswith("null,1.0,0.0,0.0,1.0,1.0,50,3,0.05,")
    buf = io.StringIO()
    write_calibration_csv(reference_table(), buf)
    rows = buf.getvalue().splitlines()
    assert rows[0].startswith("n,1.6,1.8")
    assert rows[1].startswith("500,0.175,0.061")


@pytest.mark.slow
def test_power_monotone_in_mu():
    rates = []
    for mu in (1.0, 1.5, 2.0):
        spec = GeneratorSpec.mixture(0.07, mu, 1.0, 1.0)
        rates.append(simulate_rejection_rate(spec, 500, 300, seed=5))
    for lo, hi in zip(rates, rates[1:]):
        se = math.hypot(lo.mc_stderr, hi.mc_stderr)
        assert hi.rate >= lo.rate - 2 * se
