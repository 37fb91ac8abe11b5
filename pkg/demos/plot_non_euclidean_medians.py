"""
Median sets under the max-norm
==============================

In the Euclidean plane a measure not carried by one line has exactly one
median. Under the max-norm the objective has flat pieces, and the median set
can be a whole polygon. A brute-force grid search shows this.
"""

import numpy as np

from geoquantile import ObjectiveContext, grid_minimize_2d

fixtures = {
    "uniform on (+-1, 0), (0, +-1)": [[-1, 0], [1, 0], [0, 1], [0, -1]],
    "half mass at (-1, 0) and (1, 0)": [[-1, 0], [1, 0]],
}

for name, atoms in fixtures.items():
    ctx = ObjectiveContext.create(atoms, norm_kind="linf")
    argmin, value = grid_minimize_2d(ctx, ([-2, -2], [2, 2]), 201)
    l1 = np.abs(argmin).sum(axis=1)
    print(name)
    print(f"  minimum value {value:.3f} at {len(argmin)} grid points")
    print(f"  largest |x| + |y| over the argmin set: {l1.max():.3f}")

###############################################################################
# Both sets are the diamond ``|x| + |y| <= 1``: for four points it is their
# convex hull, for two points it is the square standing on its corners. A
# coarse picture of the second one:

ctx = ObjectiveContext.create([[-1, 0], [1, 0]], norm_kind="linf")
argmin, _ = grid_minimize_2d(ctx, ([-1.5, -1.5], [1.5, 1.5]), 13)
hits = {tuple(np.round(p, 6)) for p in argmin}
axis = np.linspace(-1.5, 1.5, 13)
for y in axis[::-1]:
    print("".join("#" if (round(x, 6), round(y, 6)) in hits else "." for x in axis))

###############################################################################
# Under the Euclidean norm the same two points give the whole segment between
# them, and the four-point measure has the single median (0, 0).

for name, atoms in fixtures.items():
    argmin, _ = grid_minimize_2d(ObjectiveContext.create(atoms), ([-2, -2], [2, 2]), 201)
    print(f"{name}: {len(argmin)} Euclidean grid minimisers, "
          f"y-range [{argmin[:, 1].min():.2f}, {argmin[:, 1].max():.2f}]")
