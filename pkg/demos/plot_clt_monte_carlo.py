"""
Watching the normal limit appear
================================

For the standard bivariate normal and ell = 0, the median is the origin,
``H = sqrt(pi/2)/2 I`` and ``V = I/2``, so ``Sigma = (4/pi) I``. The
Monte-Carlo harness compares the spread of ``sqrt(n) alpha_hat`` with this
matrix. It also tracks the distance between ``sqrt(n) alpha_hat`` and its
one-step linearisation ``beta_hat``.
"""

import numpy as np

from geoquantile.montecarlo import ExperimentConfig, run_bahadur

cfg = ExperimentConfig.from_dict({
    "distribution": {"kind": "gaussian", "mean": [0.0, 0.0]},
    "n_grid": [250, 1000, 4000],
    "replications": 200,
    "seed": 0,
})
rep = run_bahadur(cfg)

print("population Sigma\n", rep.sigma_population, "\n4/pi =", 4 / np.pi)
for e in rep.per_n:
    print(f"n = {e['n']:5d}: rel. Frobenius error {e['relative_frobenius_error']:.3f}, "
          f"KS {max(e['ks_statistics']):.3f}, median remainder {e['median_remainder']:.4f}")

###############################################################################
# Halving the remainder takes four times the data:

print(f"log-log slope of the remainder: {rep.remainder_slope:.3f}")
print(f"log-log slope of the error:     {rep.consistency_slope:.3f}")
