"""The quantile objective, its subgradients and related diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import InvalidDirection, UnsupportedNorm
from .measure import AtomicMeasure, NormKind, QuantileDirection, norm


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """A measure, a quantile direction and the norm used to evaluate phi."""

    measure: AtomicMeasure
    ell: QuantileDirection
    norm_kind: NormKind = NormKind.EUCLIDEAN

    def __post_init__(self):
        ell = self.ell
        if not isinstance(ell, QuantileDirection):
            ell = QuantileDirection(np.atleast_1d(np.asarray(ell, dtype=float)))
            object.__setattr__(self, "ell", ell)
        if ell.dim != self.measure.dim:
            raise InvalidDirection(
                f"direction has dim {ell.dim}, measure has dim {self.measure.dim}")
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))

    @classmethod
    def create(cls, atoms, ell=None, weights=None, norm_kind="euclidean") -> ObjectiveContext:
        mu = atoms if isinstance(atoms, AtomicMeasure) else AtomicMeasure(atoms, weights)
        if ell is None:
            ell = np.zeros(mu.dim)
        return cls(mu, ell, norm_kind)

    @property
    def dim(self) -> int:
        return self.measure.dim

    def require_euclidean(self):
        if self.norm_kind is not NormKind.EUCLIDEAN:
            raise UnsupportedNorm(f"{self.norm_kind.value} norm is only usable by the grid oracle")


@dataclass(frozen=True, eq=False)
class SubgradientResult:
    value: float
    subgradient: np.ndarray
    at_atom: tuple[int, float] | None = None


def phi(ctx: ObjectiveContext, alpha) -> float:
    """``sum_i w_i (||alpha - x_i|| - ||x_i||) - <ell, alpha>``."""
    return float(phi_many(ctx, np.asarray(alpha, dtype=float)[None, :])[0])


def phi_many(ctx: ObjectiveContext, alphas, chunk: int = 4096) -> np.ndarray:
    """Evaluate phi at each row of ``alphas``."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    X, w = ctx.measure.atoms, ctx.measure.weights
    base = norm(X, ctx.norm_kind)
    out = np.empty(alphas.shape[0])
    # keep the (chunk, m, d) temporary bounded
    step = max(1, min(chunk, 2**24 // max(1, X.size)))
    for start in range(0, alphas.shape[0], step):
        a = alphas[start:start + step]
        dist = norm(a[:, None, :] - X[None, :, :], ctx.norm_kind)
        out[start:start + step] = (dist - base) @ w
    out -= alphas @ ctx.ell.vector
    return out


def subgradient(ctx: ObjectiveContext, alpha) -> SubgradientResult:
    """Subgradient ``sum_{x_i != alpha} w_i u_i - ell`` with ``u_i`` the unit offset.

    Atoms equal to ``alpha`` contribute nothing, which is valid because the
    unit ball is the subdifferential of the norm at the origin.
    """
    ctx.require_euclidean()
    alpha = np.asarray(alpha, dtype=float)
    X, w = ctx.measure.atoms, ctx.measure.weights
    diff = alpha - X
    r = np.linalg.norm(diff, axis=1)
    hit = r == 0.0
    keep = ~hit
    g = (w[keep] / r[keep]) @ diff[keep] - ctx.ell.vector
    value = float(w @ (r - np.linalg.norm(X, axis=1)) - alpha @ ctx.ell.vector)
    at_atom = None
    if hit.any():
        at_atom = (int(np.flatnonzero(hit)[0]), float(w[hit].sum()))
    return SubgradientResult(value, g, at_atom)


def h_function(ctx: ObjectiveContext, r) -> np.ndarray:
    """Empirical h-function ``(1/r) sum w_i s_i 1{s_i <= r} + sum w_i 1{s_i > r}``.

    ``s_i = ||x_i||``. Nonincreasing in ``r``; vectorised over ``r``.
    """
    s = np.linalg.norm(ctx.measure.atoms, axis=1)
    order = np.argsort(s)
    s, w = s[order], ctx.measure.weights[order]
    cum_ws = np.concatenate(([0.0], np.cumsum(w * s)))
    cum_w = np.concatenate(([0.0], np.cumsum(w)))
    r = np.asarray(r, dtype=float)
    k = np.searchsorted(s, r, side="right")
    return cum_ws[k] / r + (cum_w[-1] - cum_w[k])


def radius_bound(ctx: ObjectiveContext) -> float:
    """Radius ``R`` of a ball around the origin holding every minimiser of phi.

    Searches the sorted atom norms, then doubles past the largest, for the
    first ``r`` with ``h(r) < (1 - ||ell||) / 2``. Beyond such ``r`` the
    lower bound ``phi(a) >= ||a|| (1 - ||ell|| - 2 h(||a||))`` is strictly
    positive while ``phi(0) = 0``.
    """
    ctx.require_euclidean()
    target = 0.5 * (1.0 - ctx.ell.size)
    s = np.unique(np.linalg.norm(ctx.measure.atoms, axis=1))
    s = s[s > 0]
    if s.size:
        h = h_function(ctx, s)
        ok = np.flatnonzero(h < target)
        if ok.size:
            return float(s[ok[0]])
        r = float(s[-1])
    else:
        # all mass at the origin: h vanishes for every r > 0
        return 1.0
    while True:
        r *= 2.0
        if h_function(ctx, r) < target:
            return r


def _ball_probes(dim: int, radius: float, grid_points: int, seed: int) -> np.ndarray:
    if dim <= 3:
        axis = np.linspace(-radius, radius, grid_points)
        mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
        return mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]
    # Sobol points pushed into the ball: direction from a Gaussian transform,
    # radius from the last coordinate
    m = int(np.ceil(np.log2(max(grid_points, 2))))
    u = qmc.Sobol(dim + 1, scramble=True, seed=seed).random_base2(m)
    z = ndtri(np.clip(u[:, :dim], 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    rad = radius * u[:, dim] ** (1.0 / dim)
    return np.vstack([np.zeros(dim), z * rad[:, None]])


def uniform_convergence_gap(population: ObjectiveContext, sample: ObjectiveContext,
                            ball_radius: float, grid_points: int, seed: int = 0) -> float:
    """Max of ``|phi_sample - phi_population|`` over probe points in a ball.

    A regular grid (``grid_points`` per axis) is used when ``d <= 3``; in
    higher dimension ``grid_points`` scrambled Sobol points are drawn with a
    fixed ``seed``.
    """
    if population.dim != sample.dim:
        raise ValueError("contexts differ in dimension")
    if not np.array_equal(population.ell.vector, sample.ell.vector):
        raise ValueError("contexts differ in direction")
    probes = _ball_probes(population.dim, ball_radius, grid_points, seed)
    gap = np.abs(phi_many(sample, probes) - phi_many(population, probes))
    return float(gap.max())
