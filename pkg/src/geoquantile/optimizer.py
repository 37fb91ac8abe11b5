"""Certified approximate geometric quantiles of atomic measures.

The solver runs the Weiszfeld-type fixed point

    alpha <- (sum_i w_i x_i / r_i + ell) / (sum_i w_i / r_i),   r_i = ||alpha - x_i||,

which minimises a quadratic majoriser of phi at each step, hence never
increases phi. When an iterate sits on an atom the update is undefined; the
atom is then either certified optimal (the rest-of-sample subgradient has norm
at most the atom's weight) or left along a damped descent direction.

Every returned point carries an optimality gap certificate from convexity:
``phi(alpha) - inf phi <= ||g|| (||alpha|| + R)`` where every minimiser lies in
the ball of radius ``R`` around the origin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDirection
from .measure import NormKind
from .objective import ObjectiveContext, phi_many, radius_bound

logger = logging.getLogger(__name__)

# distances below NEAR_ATOM * (1 + ||alpha||) count as coincidence with an atom
NEAR_ATOM = 1e-14
# nearest atom is tested for optimality once it is this close (relative)
SNAP_CHECK = 1e-3
SNAP_ATOMS = 4
ARMIJO_C = 1e-4
# phi may rise by rounding noise near the minimum
DESCENT_SLACK = 1e-14
STALL_STEP = 1e-16


@dataclass
class SolverConfig:
    """Stopping rules and initialisation for :func:`solve`.

    ``init`` is ``"weighted_mean"``, ``"coordinatewise_median"`` or an
    explicit starting point. The solver stops once the subgradient norm is
    at most ``grad_tol`` or, when ``target_epsilon`` is set, once the
    certified gap falls to ``target_epsilon``.
    """

    max_iters: int = 100_000
    grad_tol: float = 1e-10
    step_shrink: float = 0.5
    init: str | np.ndarray = "weighted_mean"
    target_epsilon: float | None = None
    keep_trace: bool = True

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.target_epsilon is not None and self.target_epsilon < 0:
            raise ValueError("target_epsilon must be nonnegative")


@dataclass
class QuantileSolution:
    alpha_hat: np.ndarray
    epsilon_certified: float
    subgrad_norm: float
    iterations: int
    at_atom: bool
    converged: bool
    value: float
    radius: float
    trace: list[tuple[int, float, float]] = field(default_factory=list)

    def to_dict(self, with_trace: bool = False) -> dict:
        out = {
            "alpha_hat": self.alpha_hat.tolist(),
            "epsilon_certified": self.epsilon_certified,
            "subgrad_norm": self.subgrad_norm,
            "iterations": self.iterations,
            "at_atom": self.at_atom,
            "converged": self.converged,
            "value": self.value,
            "radius": self.radius,
        }
        if with_trace:
            out["trace"] = [list(t) for t in self.trace]
        return out


def _weighted_median_1d(x, w):
    order = np.argsort(x)
    cw = np.cumsum(w[order])
    return x[order][np.searchsorted(cw, 0.5 * cw[-1])]


def _initial_point(ctx: ObjectiveContext, init) -> np.ndarray:
    X, w = ctx.measure.atoms, ctx.measure.weights
    if isinstance(init, str):
        if init == "weighted_mean":
            return w @ X
        if init == "coordinatewise_median":
            return np.array([_weighted_median_1d(X[:, k], w) for k in range(X.shape[1])])
        raise ValueError(f"unknown init {init!r}")
    start = np.asarray(init, dtype=float).reshape(-1)
    if start.shape != (ctx.dim,):
        raise ValueError(f"initial point has shape {start.shape}, expected ({ctx.dim},)")
    return start.copy()


def _distinct(X, idx):
    seen = []
    for k in idx:
        if not any(np.array_equal(X[k], X[q]) for q in seen):
            seen.append(int(k))
    return seen


def _atom_optimal(X, w, ell, k) -> bool:
    """Exact test ``||sum_{x_i != x_k} w_i u_i - ell|| <= mass at x_k``."""
    d = X[k] - X
    scale = np.abs(d).max(axis=1)
    rest = scale > 0
    # rescale first: squared subnormal offsets underflow to zero
    d = d[rest] / scale[rest, None]
    g = w[rest] @ (d / np.linalg.norm(d, axis=1, keepdims=True)) - ell
    return bool(np.linalg.norm(g) <= w[~rest].sum())


def _phi(ctx, alpha) -> float:
    return float(phi_many(ctx, alpha[None, :])[0])


def solve(ctx: ObjectiveContext, cfg: SolverConfig | None = None) -> QuantileSolution:
    """Approximate geometric quantile of ``ctx.measure`` in direction ``ctx.ell``.

    Parameters
    ----------
    ctx : ObjectiveContext
        Euclidean context.
    cfg : SolverConfig, optional

    Returns
    -------
    QuantileSolution
        ``converged`` is False when ``max_iters`` ran out or the iteration
        stalled; the best iterate and its certificate are still returned.
    """
    cfg = cfg or SolverConfig()
    ctx.require_euclidean()
    if ctx.ell.size >= 1.0:
        raise InvalidDirection("||ell|| must be < 1")

    X, w, ell = ctx.measure.atoms, ctx.measure.weights, ctx.ell.vector
    R = radius_bound(ctx)
    alpha = _initial_point(ctx, cfg.init)
    value = _phi(ctx, alpha)
    trace: list[tuple[int, float, float]] = []

    def finish(alpha, value, gnorm, eps, it, at_atom, converged):
        return QuantileSolution(alpha, float(eps), float(gnorm), it, at_atom, converged,
                                float(value), R, trace)

    gnorm = np.inf
    for it in range(cfg.max_iters):
        diff = alpha - X
        r = np.linalg.norm(diff, axis=1)
        hit = r <= NEAR_ATOM * (1.0 + np.linalg.norm(alpha))

        if hit.any():
            # distinct atoms can sit closer together than the coincidence
            # threshold, so each one is tested exactly
            for k in _distinct(X, np.flatnonzero(hit)):
                if _atom_optimal(X, w, ell, k):
                    atom = X[k].copy()
                    if cfg.keep_trace:
                        trace.append((it, value, 0.0))
                    return finish(atom, _phi(ctx, atom), 0.0, 0.0, it, True, True)
            rest = ~hit
            g = (w[rest] / r[rest]) @ diff[rest] - ell
            gnorm = float(np.linalg.norm(g))
            w_atom = float(w[hit].sum())
            if cfg.keep_trace:
                trace.append((it, value, max(gnorm - w_atom, 0.0)))
            if gnorm <= w_atom:
                # ||b - x|| >= <v, b - alpha> - 2 ||alpha - x|| for ||v|| <= 1
                eps = 2.0 * float(w[hit] @ r[hit])
                return finish(alpha, value, 0.0, eps, it, True, True)
            if not rest.any():  # pragma: no cover - a lone cluster always passes
                break
            direction = -g / gnorm
            slope = gnorm - w_atom
            t = 0.5 * float(r[rest].min())
            while t > 0:
                cand = alpha + t * direction
                cand_value = _phi(ctx, cand)
                if cand_value <= value - ARMIJO_C * t * slope:
                    break
                t *= cfg.step_shrink
                if t < 1e-300:
                    t = 0.0
            if t == 0.0:
                logger.warning("atom escape failed to find descent at iteration %d", it)
                eps = (gnorm - w_atom) * (np.linalg.norm(alpha) + R)
                return finish(alpha, value, gnorm - w_atom, eps, it, True, False)
            alpha, value = cand, cand_value
            continue

        inv = w / r
        g = inv @ diff - ell
        gnorm = float(np.linalg.norm(g))
        eps = gnorm * (np.linalg.norm(alpha) + R)
        if cfg.keep_trace:
            trace.append((it, value, gnorm))
        if gnorm <= cfg.grad_tol or (cfg.target_epsilon is not None and eps <= cfg.target_epsilon):
            return finish(alpha, value, gnorm, eps, it, False, True)

        j = int(np.argmin(r))
        if r[j] <= SNAP_CHECK * (float(w @ r) + 1e-300):
            # closing in on an atom: test the nearest few directly, since
            # Weiszfeld only approaches an optimal atom sublinearly
            near = np.argpartition(r, min(SNAP_ATOMS, r.size) - 1)[:SNAP_ATOMS]
            for k in _distinct(X, near[np.argsort(r[near])]):
                if _atom_optimal(X, w, ell, k):
                    atom = X[k].copy()
                    v_k = _phi(ctx, atom)
                    if cfg.keep_trace:
                        trace.append((it + 1, v_k, 0.0))
                    return finish(atom, v_k, 0.0, 0.0, it + 1, True, True)

        new_alpha = (inv @ X + ell) / inv.sum()
        new_value = _phi(ctx, new_alpha)
        step = float(np.linalg.norm(new_alpha - alpha))
        if new_value > value + DESCENT_SLACK * (1.0 + abs(value)):
            logger.warning("Weiszfeld step increased phi at iteration %d", it)
            return finish(alpha, value, gnorm, eps, it, False, False)
        if step <= STALL_STEP * (1.0 + np.linalg.norm(alpha)):
            # fixed point reached in floating point
            return finish(alpha, value, gnorm, eps, it, False, False)
        alpha, value = new_alpha, new_value

    diff = alpha - X
    r = np.linalg.norm(diff, axis=1)
    keep = r > 0
    g = (w[keep] / r[keep]) @ diff[keep] - ell
    gnorm = float(np.linalg.norm(g))
    eps = gnorm * (np.linalg.norm(alpha) + R)
    logger.info("max_iters=%d reached with subgradient norm %.3g", cfg.max_iters, gnorm)
    return finish(alpha, value, gnorm, eps, cfg.max_iters, bool((~keep).any()), False)


def grid_minimize_2d(ctx: ObjectiveContext, box, resolution: int, tol: float = 1e-9):
    """Brute-force minimisation of phi over a regular grid in a 2-D box.

    Works for any :class:`NormKind`.

    Returns
    -------
    argmin : ndarray, shape (k, 2)
        Grid points whose value is within ``tol`` of the grid minimum.
    value : float
        Grid minimum.
    """
    if ctx.dim != 2:
        raise ValueError("grid_minimize_2d needs a 2-D measure")
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != (2,) or hi.shape != (2,) or np.any(hi <= lo):
        raise ValueError(f"degenerate box {lo} .. {hi}")
    if not 2 <= resolution <= 4001:
        raise ValueError("resolution must lie in [2, 4001]")
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    values = phi_many(ctx, pts)
    best = float(values.min())
    return pts[values <= best + tol], best


def grid_membership(points, argmin, spacing: float) -> np.ndarray:
    """Classify ``points`` as inside the grid argmin set (nearest grid point test)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.abs(points[:, None, :] - argmin[None, :, :]).max(axis=-1).min(axis=1)
    return d <= 0.5 * spacing * (1 + 1e-9)


__all__ = [
    "NormKind",
    "QuantileSolution",
    "SolverConfig",
    "grid_membership",
    "grid_minimize_2d",
    "solve",
]
