"""Command-line front end.

Subcommands
-----------
test       run the EM-test on a file of z-scores (or t-statistics with --from-t)
simulate   Monte Carlo rejection rate under the null or a mixture alternative
calibrate  a_n tuning experiment and its regression fit

Exit codes: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings

from . import __version__
from .em import EmTestConfig, em_test
from .model import DegenerateDataError
from .scores import ScoreParseError, read_scores, t_to_z
from .simulation import (
    DEFAULT_A_GRID,
    DEFAULT_N_GRID,
    GeneratorSpec,
    calibration_experiment,
    reference_table,
    simulate_rejection_rate,
    write_calibration_csv,
    write_results_csv,
)

EXIT_USAGE = 2
EXIT_DATA = 3


class DataError(Exception):
    pass


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _level(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def build_report(result, cfg, levels, digest, extra=None):
    """JSON-ready dictionary for an :class:`EmTestResult`."""
    fit = result.best_params
    report = {
        "n": result.n,
        "statistic": result.statistic,
        "shift": result.shift,
        "p_value": result.p_value,
        "a_n": result.a_n_used,
        "sigma0_sq": result.null_sigma0_sq,
        "alpha_grid": list(cfg.alpha_grid),
        "K": cfg.K,
        "fit": {"alpha": fit.alpha, "mu": fit.mu, "sigma1": fit.sigma1, "sigma2": fit.sigma2},
        "traces": [
            {
                "alpha_init": t.alpha_init,
                "step1_iterations": t.step1_iterations,
                "step1_start": t.step1_start,
                "iterations": [
                    {"alpha": r.alpha, "mu": r.mu, "sigma1": r.sigma1,
                     "sigma2": r.sigma2, "pl": r.pl, "M": r.M}
                    for r in t.records
                ],
                "M_final": t.final_M,
            }
            for t in result.traces
        ],
        "best_index": result.best_index,
        "ties": list(result.ties),
        "decisions": {repr(lv): bool(result.p_value < lv) for lv in levels},
        "version": __version__,
        "input_digest": digest,
    }
    if extra:
        report.update(extra)
    return report


def format_text(report):
    f = report["fit"]
    lines = [
        f"n            {report['n']}",
        f"statistic    {report['statistic']:.4g}",
        f"shift        {report['shift']:.4g}",
        f"p-value      {report['p_value']:.4g}",
        f"a_n          {report['a_n']:.4g}",
        f"sigma0^2     {report['sigma0_sq']:.4g}",
        f"fitted       {1 - f['alpha']:.4g} N(0, {f['sigma1']:.4g}^2) + "
        f"{f['alpha']:.4g} N({f['mu']:.4g}, {f['sigma2']:.4g}^2)",
    ]
    for lv, rej in report["decisions"].items():
        lines.append(f"level {lv:<6} {'reject' if rej else 'do not reject'} homogeneity")
    if report.get("clamped_t"):
        lines.append(f"warning: {report['clamped_t']} t-values saturated the CDF and were clamped")
    return "\n".join(lines) + "\n"


def cmd_test(args, out):
    try:
        col = read_scores(args.input, args.input_format, args.column)
    except (OSError, ScoreParseError) as exc:
        raise DataError(str(exc)) from exc
    values = col.values
    extra = {}
    if args.from_t:
        values, clamped = t_to_z(values, args.df, return_clamped=True)
        extra["from_t_df"] = args.df
        extra["clamped_t"] = int(clamped.sum())
    cfg = EmTestConfig(alpha_grid=tuple(args.alpha_grid), K=args.iterations,
                       a_n_override=args.a_n)
    try:
        result = em_test(values, cfg)
    except (DegenerateDataError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    report = build_report(result, cfg, args.level or [0.05], col.digest, extra)
    if args.format == "json":
        out.write(json.dumps(report, indent=2) + "\n")
    else:
        out.write(format_text(report))
    return report


def _progress(quiet):
    def cb(n, a, res):
        if not quiet:
            print(f"n={n} a_n={a:.2f} rate={res.rate:.4f} ({res.elapsed:.1f}s)", file=sys.stderr)
    return cb


def cmd_simulate(args, out):
    if args.mixture:
        spec = GeneratorSpec.mixture(args.alpha, args.mu, args.sigma1, args.sigma2)
    else:
        spec = GeneratorSpec.null(args.null_sigma)
    cfg = EmTestConfig(alpha_grid=tuple(args.alpha_grid), K=args.iterations,
                       a_n_override=args.a_n)
    rows = []
    for n in args.n:
        res = simulate_rejection_rate(spec, n, args.reps, args.level, cfg, args.seed, args.workers)
        if not args.quiet:
            print(f"n={n} rate={res.rate:.4f} se={res.mc_stderr:.4f} ({res.elapsed:.1f}s)",
                  file=sys.stderr)
        rows.append((spec, n, res))
    if args.format == "json":
        payload = [dict(kind=s.kind, null_sigma=s.null_sigma, alpha=s.alpha, mu=s.mu,
                        sigma1=s.sigma1, sigma2=s.sigma2, n=n, reps=r.reps, level=r.level,
                        rate=r.rate, mc_stderr=r.mc_stderr, seed=r.seed)
                   for s, n, r in rows]
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        write_results_csv(rows, out)


def cmd_calibrate(args, out):
    if args.reference:
        table = reference_table()
        fit = table.fit()
    else:
        table, fit = calibration_experiment(args.a_grid, args.n_grid, args.reps, args.level,
                                            args.seed, workers=args.workers,
                                            progress=_progress(args.quiet))
    if args.format == "json":
        payload = {
            "a_grid": list(table.a_grid), "n_grid": list(table.n_grid),
            "y": table.y.tolist(),
            "q_hat": None if table.q_hat is None else table.q_hat.tolist(),
            "regression": {"coef": list(fit.coef), "r_squared": fit.r_squared,
                           "adj_r_squared": fit.adj_r_squared,
                           "a_n_formula": [fit.formula_intercept, fit.formula_slope]},
            "observations": int(table.y.size),
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        write_calibration_csv(table, out)
        b0, b1, b2 = fit.coef
        out.write("\n# regression y ~ 1 + 1/n + log(a_n - 1.4)\n")
        out.write(f"# observations,{table.y.size}\n")
        out.write(f"# coef,{b0:.6g},{b1:.6g},{b2:.6g}\n")
        out.write(f"# adj_r_squared,{fit.adj_r_squared:.4f}\n")
        out.write(f"# a_n(n) = exp({fit.formula_intercept:.4f} - {fit.formula_slope:.3f}/n) + 1.4\n")


def _add_em_options(p):
    p.add_argument("--alpha-grid", type=_float_list, default=[0.05, 0.15, 0.25],
                   help="initial mixing proportions (comma list)")
    p.add_argument("--iterations", "-K", type=int, default=3, help="EM iterations K")
    p.add_argument("--a-n", type=float, default=None, help="override the penalty strength a_n")


def build_parser():
    parser = argparse.ArgumentParser(prog="emtest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the EM-test on a file of scores")
    p.add_argument("input", nargs="?", default="-", help="input file, '-' for stdin")
    p.add_argument("--input-format", choices=["plain", "csv"], default="plain")
    p.add_argument("--column", default=None, help="csv column name or 0-based index")
    _add_em_options(p)
    p.add_argument("--level", type=_level, action="append", help="significance level (repeatable)")
    p.add_argument("--from-t", action="store_true", help="input holds t-statistics")
    p.add_argument("--df", type=int, default=100, help="degrees of freedom for --from-t")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--seed", type=int, default=0, help="accepted for pipeline symmetry; unused")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo rejection rate")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--null", action="store_true", help="sample N(0, null_sigma^2) (default)")
    g.add_argument("--mixture", action="store_true", help="sample the contaminated mixture")
    p.add_argument("--null-sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=int, action="append", required=True, help="sample size (repeatable)")
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--level", type=_level, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--quiet", action="store_true")
    _add_em_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="a_n tuning experiment")
    p.add_argument("--a-grid", type=_float_list, default=list(DEFAULT_A_GRID))
    p.add_argument("--n-grid", type=_int_list, default=list(DEFAULT_N_GRID))
    p.add_argument("--reps", type=int, default=5000)
    p.add_argument("--level", type=_level, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reference", action="store_true",
                   help="fit the bundled reference table instead of simulating")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None, stdout=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    stdout = stdout or sys.stdout
    buf = io.StringIO()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            args.func(args, buf)
    except DataError as exc:
        print(f"emtest: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, DegenerateDataError) as exc:
        print(f"emtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # emit only once the whole report is built
    stdout.write(buf.getvalue())
    stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
