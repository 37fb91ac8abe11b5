"""
How tight are the norm expansions?
==================================

Away from the origin the Euclidean norm is smooth, and its expansion errors obey

* second order: ``1/2 min(|h|^2/|a|, |h|^3/|a|^2)``
* gradient, first order: ``2 min(|h|/|a|, |h|^2/|a|^2)``

Random pairs never exceed these bounds, and steps along the line through
``a`` attain them.
"""

import numpy as np

from geoquantile.taylor import collinear_sweep, gradnorm_taylor1_remainders, norm_taylor2_remainders, random_pairs

rng = np.random.default_rng(0)
for d in (1, 2, 5, 50):
    a, h = random_pairs(rng, 20_000, d)
    l2, b2 = norm_taylor2_remainders(a, h)
    l1, b1 = gradnorm_taylor1_remainders(a, h)
    print(f"d = {d:2d}: max ratio {np.max(l2 / np.where(b2 > 0, b2, 1)):.4f} (norm), "
          f"{np.max(l1 / np.where(b1 > 0, b1, 1)):.4f} (gradient)")

###############################################################################
# Along ``h = lambda a`` the second-order ratio peaks at exactly 1 when
# lambda = -2, and the gradient ratio ``1/|lambda|`` tends to 1 as lambda
# approaches -1 from below.

lam = np.array([-4.0, -3.0, -2.5, -2.0, -1.5, -1.1, -1.01, -1.0001])
r2, r1 = collinear_sweep(lam)
for x, p, q in zip(lam, r2, r1):
    print(f"lambda = {x:+8.4f}   norm ratio {p:.4f}   gradient ratio {q:.4f}")
