"""
Type-I error and power by simulation.

A desk-scale version of the size and power studies: a few hundred
replications per cell instead of ten thousand. Set EMTEST_THREADS to use
more worker processes.
"""
import math

from emtest.simulation import GeneratorSpec, simulate_rejection_rate

REPS = 400

#
for n in (100, 500):
    r = simulate_rejection_rate(GeneratorSpec.null(), n, REPS, 0.05, seed=1)
    print(f"null n={n}: rejection rate {100 * r.rate:.2f}% +/- {100 * r.mc_stderr:.2f} "
          f"({r.elapsed:.1f}s)")

# power at n = 500 for a few alternatives (sigma1 = 1)
for alpha, var2, mu in [(0.05, 2, 1.5), (0.10, 1, 1.0), (0.07, 2, 2.0)]:
    spec = GeneratorSpec.mixture(alpha, mu, 1.0, math.sqrt(var2))
    r = simulate_rejection_rate(spec, 500, REPS, 0.05, seed=2)
    print(f"alpha={alpha:.2f} var2={var2} mu={mu}: power {100 * r.rate:.1f}% "
          f"+/- {100 * r.mc_stderr:.1f}")
