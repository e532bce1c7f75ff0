"""
The statistic's leading-order form.

For large n the EM-test statistic is close to
(sum X)^2 / sum X^2 + ((sum V)^+)^2 / sum V^2 + shift,
with X = x and V the fourth Hermite term of the standardized data. We compare
the two on a few null samples and then check the limit law by Monte Carlo.
"""
import math

import numpy as np

from emtest import em_test, limiting_pvalue
from emtest.oracle import asymptotic_em_statistic, hermite_stats, mc_limiting_sample
from emtest.simulation import GeneratorSpec, generate_sample
from emtest.special import RngState

shift = 2 * math.log(0.25)

#
for i in range(5):
    x = generate_sample(GeneratorSpec.null(), 10000, RngState(11, i))
    em = em_test(x).statistic
    orc = asymptotic_em_statistic(x, shift)
    st = hermite_stats(x / math.sqrt(np.mean(x ** 2)))
    print(f"rep {i}: EM {em:7.4f}  oracle {orc:7.4f}  gap {abs(em - orc):.4f}  "
          f"sum V = {st.sum_v:+8.2f}")

# the limit law 0.5 chi2_1 + 0.5 chi2_2
draws = mc_limiting_sample(200000, RngState(3))
for s in (0.5, 2.0, 5.0, 10.0):
    print(f"P(T > {s:4.1f}): Monte Carlo {np.mean(draws > s):.4f}  exact {limiting_pvalue(s, 0.0):.4f}")
