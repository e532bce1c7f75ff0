"""Monte Carlo studies: type-I error, power and the a_n calibration experiment.

Replication ``i`` always draws its sample from stream ``i`` of the master
seed, so results do not depend on how replications are split over worker
processes. Set ``EMTEST_THREADS`` to cap the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np

from .em import EmTestConfig, em_test
from .special import RngState

DEFAULT_A_GRID = tuple(round(1.6 + 0.2 * i, 1) for i in range(13))
DEFAULT_N_GRID = (500, 1000, 1500)
A_FLOOR = 1.4


@dataclass(frozen=True)
class GeneratorSpec:
    """Data-generating model: ``N(0, null_sigma**2)`` or the two-component mixture."""

    kind: str = "null"
    null_sigma: float = 1.0
    alpha: float = 0.0
    mu: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in ("null", "mixture"):
            raise ValueError("kind must be 'null' or 'mixture'")
        if self.kind == "null" and not self.null_sigma > 0:
            raise ValueError("null_sigma must be positive")
        if self.kind == "mixture":
            if not 0 <= self.alpha <= 1:
                raise ValueError("alpha must lie in [0, 1]")
            if not (self.sigma1 > 0 and self.sigma2 > 0):
                raise ValueError("component standard deviations must be positive")

    @classmethod
    def null(cls, sigma=1.0):
        return cls(kind="null", null_sigma=float(sigma))

    @classmethod
    def mixture(cls, alpha, mu, sigma1=1.0, sigma2=1.0):
        return cls(kind="mixture", alpha=float(alpha), mu=float(mu),
                   sigma1=float(sigma1), sigma2=float(sigma2))


@dataclass(frozen=True)
class SimulationResult:
    rejections: int
    reps: int
    rate: float
    mc_stderr: float
    seed: int
    elapsed: float = field(compare=False)
    level: float = 0.05
    statistics: np.ndarray | None = field(default=None, repr=False, compare=False)
    p_values: np.ndarray | None = field(default=None, repr=False, compare=False)


def generate_sample(spec: GeneratorSpec, n: int, state: RngState) -> np.ndarray:
    """Draw ``n`` i.i.d. points from ``spec`` using stream ``state``.

    Standard normals are drawn first and uniforms second, so a mixture with
    ``alpha = 0`` reproduces the null generator exactly.
    """
    rng = state.generator()
    z = rng.standard_normal(int(n))
    if spec.kind == "null":
        return spec.null_sigma * z
    pick = rng.random(int(n)) < spec.alpha
    return np.where(pick, spec.mu + spec.sigma2 * z, spec.sigma1 * z)


def worker_count(default=None):
    env = os.environ.get("EMTEST_THREADS")
    if env:
        return max(1, int(env))
    return default or os.cpu_count() or 1


def _run_block(args):
    spec, n, start, stop, cfg, seed = args
    stats = np.empty(stop - start)
    pvals = np.empty(stop - start)
    for i in range(start, stop):
        res = em_test(generate_sample(spec, n, RngState(seed, i)), cfg)
        stats[i - start] = res.statistic
        pvals[i - start] = res.p_value
    return stats, pvals


def simulate_statistics(spec, n, reps, cfg=None, seed=0, workers=None):
    """EM-test statistics and p-values for ``reps`` replications, in replication order."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    cfg = cfg or EmTestConfig()
    workers = min(worker_count(workers), reps)
    if workers == 1:
        return _run_block((spec, n, 0, reps, cfg, seed))
    edges = np.linspace(0, reps, workers + 1).astype(int)
    jobs = [(spec, n, int(a), int(b), cfg, seed) for a, b in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_run_block, jobs))
    return (np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]))


def simulate_rejection_rate(spec: GeneratorSpec, n: int, reps: int, level: float = 0.05,
                            cfg: EmTestConfig | None = None, seed: int = 0,
                            workers=None) -> SimulationResult:
    """Fraction of replications whose limiting p-value falls below ``level``."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    t0 = time.perf_counter()
    stats, pvals = simulate_statistics(spec, n, reps, cfg, seed, workers)
    rej = int(np.sum(pvals < level))
    rate = rej / reps
    return SimulationResult(
        rejections=rej, reps=reps, rate=rate,
        mc_stderr=math.sqrt(rate * (1 - rate) / reps), seed=seed,
        elapsed=time.perf_counter() - t0, level=level,
        statistics=stats, p_values=pvals)


def discrepancy_y(q_hat: float, q: float) -> float:
    """Log-odds difference between an observed and a nominal rejection rate."""
    for name, v in (("q_hat", q_hat), ("q", q)):
        if not 0 < v < 1:
            raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return math.log(q_hat / (1 - q_hat)) - math.log(q / (1 - q))


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares fit of ``y ~ 1 + 1/n + log(a_n - 1.4)``."""

    coef: tuple
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray = field(repr=False, compare=False)
    design: np.ndarray = field(repr=False, compare=False)

    @property
    def formula_intercept(self):
        """``c0`` in ``a_n = exp(c0 - c1/n) + 1.4``."""
        return -self.coef[0] / self.coef[2]

    @property
    def formula_slope(self):
        """``c1`` in ``a_n = exp(c0 - c1/n) + 1.4``."""
        return self.coef[1] / self.coef[2]

    def a_n(self, n):
        """Penalty strength solving ``y_hat = 0`` at sample size ``n``."""
        b0, b1, b2 = self.coef
        return math.exp((b0 + b1 / n) / (-b2)) + A_FLOOR


def fit_tuning_regression(a_values, n_values, y) -> RegressionFit:
    a = np.asarray(a_values, dtype=float)
    nv = np.asarray(n_values, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(a <= A_FLOOR):
        raise ValueError("a_n values must exceed 1.4")
    if np.unique(a).size < 2 or np.unique(nv).size < 2:
        raise ValueError("design needs at least two distinct a_n and two distinct n")
    X = np.column_stack([np.ones_like(a), 1.0 / nv, np.log(a - A_FLOOR)])
    q, r = np.linalg.qr(X)
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / sst
    m, p = X.shape
    adj = 1.0 - (1.0 - r2) * (m - 1) / (m - p)
    return RegressionFit(tuple(float(c) for c in coef), r2, adj, resid, X)


@dataclass(frozen=True)
class CalibrationTable:
    a_grid: tuple
    n_grid: tuple
    y: np.ndarray  # shape (len(n_grid), len(a_grid))
    q_hat: np.ndarray | None = None
    level: float = 0.05

    def long_form(self):
        a = np.tile(np.asarray(self.a_grid, dtype=float), len(self.n_grid))
        nv = np.repeat(np.asarray(self.n_grid, dtype=float), len(self.a_grid))
        return a, nv, self.y.ravel()

    def fit(self) -> RegressionFit:
        return fit_tuning_regression(*self.long_form())


def reference_table() -> CalibrationTable:
    """Bundled reference discrepancy table (q = 0.05, 5000 replications per cell)."""
    text = resources.files("emtest").joinpath("data/calibration_y.csv").read_text()
    rows = list(csv.reader(io.StringIO(text)))
    a_grid = tuple(float(v) for v in rows[0][1:])
    n_grid = tuple(int(r[0]) for r in rows[1:])
    y = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return CalibrationTable(a_grid, n_grid, y)


def calibration_experiment(a_grid=DEFAULT_A_GRID, n_grid=DEFAULT_N_GRID, reps=5000,
                           level=0.05, seed=0, cfg=None, workers=None, progress=None):
    """Simulate type-I error on the ``a_n`` x ``n`` grid and fit the tuning regression.

    Every cell of one ``n`` reuses the same null samples (replication ``i``
    reads stream ``i``), so differences between ``a_n`` columns are not
    blurred by independent sampling noise.

    Returns ``(CalibrationTable, RegressionFit)``.
    """
    a_grid = tuple(float(a) for a in a_grid)
    n_grid = tuple(int(n) for n in n_grid)
    if len(set(a_grid)) < 2 or len(set(n_grid)) < 2:
        raise ValueError("calibration needs at least two distinct a_n and two distinct n")
    if any(a <= A_FLOOR for a in a_grid):
        raise ValueError("a_n values must exceed 1.4")
    base = cfg or EmTestConfig()
    q_hat = np.empty((len(n_grid), len(a_grid)))
    y = np.empty_like(q_hat)
    for i, n in enumerate(n_grid):
        for j, a in enumerate(a_grid):
            res = simulate_rejection_rate(GeneratorSpec.null(), n, reps, level,
                                          replace(base, a_n_override=a), seed, workers)
            if res.rejections in (0, reps):
                raise ValueError(f"cell n={n}, a_n={a}: rejection rate {res.rate} has no "
                                 "finite log-odds; increase reps")
            q_hat[i, j] = res.rate
            y[i, j] = discrepancy_y(res.rate, level)
            if progress:
                progress(n, a, res)
    table = CalibrationTable(a_grid, n_grid, y, q_hat, level)
    return table, table.fit()


RESULT_COLUMNS = ("kind", "null_sigma", "alpha", "mu", "sigma1", "sigma2",
                  "n", "reps", "level", "rate", "mc_stderr", "seed")


def write_results_csv(rows, fh):
    """``rows`` is an iterable of ``(GeneratorSpec, n, SimulationResult)``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for spec, n, res in rows:
        d = asdict(spec)
        w.writerow([d["kind"], d["null_sigma"], d["alpha"], d["mu"], d["sigma1"],
                    d["sigma2"], n, res.reps, res.level, repr(res.rate),
                    repr(res.mc_stderr), res.seed])


def write_calibration_csv(table: CalibrationTable, fh, digits=3):
    """Calibration table layout: one row per n, one column per a_n."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n"] + [f"{a:.1f}" for a in table.a_grid])
    for n, row in zip(table.n_grid, table.y):
        w.writerow([n] + [f"{v:.{digits}f}" for v in row])
