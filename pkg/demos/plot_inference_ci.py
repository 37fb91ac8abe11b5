"""
Confidence intervals from the sandwich
======================================

The estimator's fluctuations are approximately Gaussian with covariance
``H^{-1} V H^{-1} / n``. ``H`` is the curvature of ``phi`` and ``V`` is the
covariance of the unit scores. Both have plug-in versions at the estimate.
"""

import numpy as np

from geoquantile import ObjectiveContext, SolverConfig, confint_functional, infer, solve

rng = np.random.default_rng(1)
X = rng.standard_normal((400, 2)) @ np.array([[1.0, 0.0], [0.6, 0.8]]) + [2.0, -1.0]
ctx = ObjectiveContext.create(X, ell=[0.3, 0.0])

sol = solve(ctx, SolverConfig(grad_tol=1e-12))
rep = infer(ctx, sol.alpha_hat)
print("alpha_hat", sol.alpha_hat)
print("H\n", rep.H)
print("V\n", rep.V)
print("Sigma\n", rep.Sigma)
print(f"kappa = {rep.kappa:.4f}, mean inverse distance = {rep.moment1:.4f}")

for f in ([1.0, 0.0], [0.0, 1.0], [1.0, 1.0]):
    lo, hi = confint_functional(rep, sol.alpha_hat, f, n=len(X), level=0.95)
    print(f"95% interval for <{f}, alpha*>: [{lo:.4f}, {hi:.4f}]")

###############################################################################
# A quick coverage check. Data are standard normal and ell = 0, so the target
# is the origin.

hits, reps = 0, 300
for k in range(reps):
    Y = np.random.default_rng(100 + k).standard_normal((300, 2))
    c = ObjectiveContext.create(Y)
    s = solve(c, SolverConfig(grad_tol=1e-12, keep_trace=False))
    lo, hi = confint_functional(infer(c, s.alpha_hat), s.alpha_hat, [1.0, 0.0], 300)
    hits += lo <= 0.0 <= hi
print(f"empirical coverage {hits / reps:.3f} over {reps} samples")
