"""
Tail probabilities, score transforms and random streams.

Everything the test needs from probability theory is a handful of
normal / t / chi-square functions. They live in emtest.special and
emtest.scores.
"""
import numpy as np

from emtest.em import limiting_pvalue
from emtest.scores import t_to_z, z_to_p
from emtest.special import RngState, chisq_survival, normal_cdf, normal_quantile

#
print("Phi(1.96)          =", normal_cdf(1.96))
print("Phi^-1(0.975)      =", normal_quantile(0.975))
print("P(chi2_1 > 3.8415) =", chisq_survival(3.841458820694124, 1))
print("P(chi2_2 > 5.9915) =", chisq_survival(5.991464547107979, 2))

# a t-statistic with 100 df becomes a z-score with the same lower-tail probability
for t in (0.0, 1.984, -1.984, 5.0):
    z = t_to_z(t, 100)
    print(f"t={t:+.3f} -> z={z:+.4f} -> two-sided p={z_to_p(z):.4g}")

# extreme t values saturate the t CDF; they are clamped and flagged, never inf
z, clamped = t_to_z(np.array([3.0, 1e300]), 5, return_clamped=True)
print("clamped:", z, clamped)

# the null law of the statistic is 0.5 chi2_1 + 0.5 chi2_2, shifted by 2 max log alpha_j
shift = 2 * np.log(0.25)
for stat in (shift, 0.0, 5.0, 41.042):
    print(f"statistic {stat:8.3f} -> limiting p-value {limiting_pvalue(stat, shift):.4g}")

# random streams: replication i of a study always reads stream i of the seed
a = RngState(7, 0).generator().standard_normal(3)
b = RngState(7, 1).generator().standard_normal(3)
print("stream 0:", a)
print("stream 1:", b)
print("stream 0 again equal:", np.array_equal(a, RngState(7, 0).generator().standard_normal(3)))
