"""
A quantile you can check by hand
================================

Two atoms at (-1, 0) and (1, 0), each with mass one half, and the direction
ell = (0, 1/2). Symmetry puts the quantile on the vertical axis, and
stationarity of ``phi`` along that axis gives alpha = (0, 1/sqrt(3)) with
minimum value sqrt(3)/2 - 1.
"""

import numpy as np

from geoquantile import ObjectiveContext, SolverConfig, solve

ctx = ObjectiveContext.create([[-1.0, 0.0], [1.0, 0.0]], ell=[0.0, 0.5])
sol = solve(ctx, SolverConfig(grad_tol=1e-13))

print("alpha_hat      ", sol.alpha_hat)
print("expected       ", np.array([0.0, 1 / np.sqrt(3)]))
print("phi(alpha_hat) ", sol.value, " vs ", np.sqrt(3) / 2 - 1)
print("certified gap  ", sol.epsilon_certified)

###############################################################################
# The certificate is ``||g|| (||alpha|| + R)``, where ``R`` bounds every
# minimiser. Watching it fall along the iterations:

for it, value, gnorm in sol.trace[::3]:
    print(f"{it:3d}  phi = {value:+.15f}   |g| = {gnorm:.2e}")

###############################################################################
# Sweeping the vertical component of ell traces the quantile curve
# ``alpha_2 = t / sqrt(1 - t^2)``.

for t in (-0.9, -0.5, 0.0, 0.5, 0.9):
    a = solve(ObjectiveContext.create([[-1.0, 0.0], [1.0, 0.0]], ell=[0.0, t]),
              SolverConfig(grad_tol=1e-13)).alpha_hat
    print(f"t = {t:+.1f}: alpha_2 = {a[1]:+.10f}, closed form {t / np.sqrt(1 - t * t):+.10f}")
