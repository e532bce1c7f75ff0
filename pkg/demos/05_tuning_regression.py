"""
Where a_n = exp(1.747 - 843.681/n) + 1.4 comes from.

The variance penalty strength a_n was tuned by a computer experiment:
simulate the type-I error over a grid of (a_n, n), turn each rate into a
log-odds discrepancy y, regress y on 1/n and log(a_n - 1.4), and solve
y_hat = 0 for a_n. The reference y-values are bundled with the package.
"""
from emtest.model import a_n_default
from emtest.simulation import calibration_experiment, reference_table

table = reference_table()
fit = table.fit()
b0, b1, b2 = fit.coef
print(f"{table.y.size} cells")
print(f"y_hat = {b0:.4f} {b1:+.3f}/n {b2:+.4f} log(a_n - 1.4),  adjusted R^2 = {fit.adj_r_squared:.3f}")
print(f"solved: a_n = exp({fit.formula_intercept:.3f} - {fit.formula_slope:.2f}/n) + 1.4")
for n in (100, 500, 1000, 1500, 10000):
    print(f"  n={n:6d}  refit a_n = {fit.a_n(n):.4f}   default a_n = {a_n_default(n):.4f}")

# a tiny fresh experiment, only to show the moving parts (far too few reps to be precise)
small, small_fit = calibration_experiment(a_grid=(1.6, 2.6, 3.6), n_grid=(200, 400),
                                          reps=300, seed=5)
print("\nfresh q_hat:\n", small.q_hat)
print("fresh coefficients:", tuple(round(c, 4) for c in small_fit.coef))
