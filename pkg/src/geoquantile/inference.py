"""Plug-in asymptotic inference for geometric quantiles.

At a point ``alpha`` write ``r_i = ||alpha - x_i||`` and ``u_i = (alpha - x_i)/r_i``.
Atoms equal to ``alpha`` are dropped from every sum below.

* curvature   ``H = sum_i w_i (I - u_i u_i^T) / r_i``
* score cov.  ``V = sum_i w_i (u_i - ell)(u_i - ell)^T``
* sandwich    ``Sigma = H^{-1} V H^{-1}``, the limiting covariance of
  ``sqrt(n) (alpha_hat - alpha_star)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateError, SingularHessian
from .objective import ObjectiveContext, phi_many, subgradient

# H counts as singular when lambda_min <= SINGULAR_RTOL * lambda_max
SINGULAR_RTOL = 1e-12


def _offsets(ctx: ObjectiveContext, alpha):
    ctx.require_euclidean()
    alpha = np.asarray(alpha, dtype=float)
    diff = alpha - ctx.measure.atoms
    r = np.linalg.norm(diff, axis=1)
    keep = r > 0
    if not keep.any():
        raise DegenerateError("every atom coincides with the evaluation point")
    return diff[keep] / r[keep, None], r[keep], ctx.measure.weights[keep], int((~keep).sum())


def estimate_H(ctx: ObjectiveContext, alpha) -> np.ndarray:
    """Curvature matrix of phi at ``alpha`` (atoms at ``alpha`` excluded)."""
    u, r, w, _ = _offsets(ctx, alpha)
    c = w / r
    H = np.eye(ctx.dim) * c.sum() - (u * c[:, None]).T @ u
    return 0.5 * (H + H.T)


def estimate_V(ctx: ObjectiveContext, alpha) -> np.ndarray:
    """Covariance-type matrix of the scores ``u_i - ell``."""
    u, _, w, _ = _offsets(ctx, alpha)
    s = u - ctx.ell.vector
    V = (s * w[:, None]).T @ s
    return 0.5 * (V + V.T)


def _checked_eigh(H, allow_pinv: bool):
    H = 0.5 * (np.asarray(H, dtype=float) + np.asarray(H, dtype=float).T)
    lam, Q = np.linalg.eigh(H)
    scale = max(abs(lam[-1]), 0.0)
    small = lam <= SINGULAR_RTOL * scale
    if scale == 0.0:
        small[:] = True
    if small.any() and not allow_pinv:
        raise SingularHessian(
            f"lambda_min = {lam[0]:.3g} vs lambda_max = {lam[-1]:.3g}")
    inv = np.where(small, 0.0, 1.0 / np.where(small, 1.0, lam))
    return inv, Q, bool(small.any())


def sandwich_sigma(H, V, allow_pinv: bool = False) -> np.ndarray:
    """``H^{-1} V H^{-1}`` through an eigendecomposition of ``H``.

    With ``allow_pinv`` the pseudo-inverse is used along null directions
    of ``H`` instead of raising :class:`SingularHessian`.
    """
    inv, Q, _ = _checked_eigh(H, allow_pinv)
    Vq = Q.T @ np.asarray(V, dtype=float) @ Q
    S = Q @ (Vq * np.outer(inv, inv)) @ Q.T
    return 0.5 * (S + S.T)


@dataclass
class InferenceReport:
    H: np.ndarray
    V: np.ndarray
    Sigma: np.ndarray | None
    kappa: float
    n_excluded: int
    moment1: float
    moment2: float
    pinv_fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "H": self.H.tolist(),
            "V": self.V.tolist(),
            "Sigma": None if self.Sigma is None else self.Sigma.tolist(),
            "kappa": self.kappa,
            "n_excluded": self.n_excluded,
            "moment1": self.moment1,
            "moment2": self.moment2,
            "pinv_fallback": self.pinv_fallback,
        }


def infer(ctx: ObjectiveContext, alpha, allow_pinv: bool = False) -> InferenceReport:
    """Plug-in ``H``, ``V``, ``Sigma`` and moment diagnostics at ``alpha``.

    Inverse-distance moments are reported, never enforced: the caller
    decides whether they look finite enough for the normal approximation.
    When ``H`` is singular and ``allow_pinv`` is False, ``Sigma`` is None.
    """
    _, r, w, n_excl = _offsets(ctx, alpha)
    H = estimate_H(ctx, alpha)
    V = estimate_V(ctx, alpha)
    kappa = float(np.linalg.eigvalsh(H)[0])
    wn = w / w.sum()
    try:
        _, _, fallback = _checked_eigh(H, allow_pinv)
        Sigma = sandwich_sigma(H, V, allow_pinv=allow_pinv)
    except SingularHessian:
        Sigma, fallback = None, False
    return InferenceReport(H, V, Sigma, kappa, n_excl,
                           float(wn @ (1.0 / r)), float(wn @ (1.0 / r**2)), fallback)


@dataclass(frozen=True)
class BetaEstimate:
    beta: np.ndarray
    hessian_source: str  # "population" or "plug-in"


def beta_hat(ctx: ObjectiveContext, alpha_star, H=None, n: int | None = None) -> BetaEstimate:
    """Minimiser ``-sqrt(n) H^{-1} grad`` of the quadratic surrogate at ``alpha_star``.

    ``H`` should be the population curvature at ``alpha_star``; without it
    the plug-in curvature of ``ctx.measure`` is used instead.
    """
    n = ctx.measure.size if n is None else n
    source = "population"
    if H is None:
        H, source = estimate_H(ctx, alpha_star), "plug-in"
    grad = subgradient(ctx, alpha_star).subgradient
    inv, Q, _ = _checked_eigh(H, allow_pinv=False)
    beta = -np.sqrt(n) * (Q @ (inv * (Q.T @ grad)))
    return BetaEstimate(beta, source)


@dataclass(frozen=True, eq=False)
class QuadraticSurrogate:
    """``Psi(beta) = value0 + <grad, beta/sqrt n> + 1/2 <H beta/sqrt n, beta/sqrt n>``."""

    anchor: np.ndarray
    value0: float
    grad: np.ndarray
    H: np.ndarray
    n: int

    @classmethod
    def at(cls, ctx: ObjectiveContext, anchor, H=None, n: int | None = None) -> QuadraticSurrogate:
        anchor = np.asarray(anchor, dtype=float)
        sg = subgradient(ctx, anchor)
        H = estimate_H(ctx, anchor) if H is None else np.asarray(H, dtype=float)
        return cls(anchor, sg.value, sg.subgradient, H, ctx.measure.size if n is None else n)

    def __call__(self, beta) -> float | np.ndarray:
        return surrogate_eval(self, beta)

    def minimizer(self) -> np.ndarray:
        inv, Q, _ = _checked_eigh(self.H, allow_pinv=False)
        return -np.sqrt(self.n) * (Q @ (inv * (Q.T @ self.grad)))


def surrogate_eval(s: QuadraticSurrogate, beta):
    """Evaluate the quadratic surrogate; ``beta`` may be one point or a stack."""
    beta = np.asarray(beta, dtype=float)
    b = beta / np.sqrt(s.n)
    lin = b @ s.grad
    quad = np.einsum("...i,ij,...j->...", b, s.H, b)
    out = s.value0 + lin + 0.5 * quad
    return float(out) if out.ndim == 0 else out


def rescaled_objective(ctx: ObjectiveContext, anchor, beta, n: int | None = None):
    """``beta -> phi_n(anchor + beta/sqrt n)`` for one point or a stack."""
    n = ctx.measure.size if n is None else n
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    return phi_many(ctx, np.asarray(anchor, dtype=float) + beta / np.sqrt(n))


def surrogate_gap(ctx: ObjectiveContext, s: QuadraticSurrogate, radius: float,
                  n_probes: int = 512, seed: int = 0) -> float:
    """Max ``|phi_n(anchor + beta/sqrt n) - Psi(beta)|`` over probes with ``||beta|| <= radius``."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_probes, ctx.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= radius * rng.uniform(size=(n_probes, 1)) ** (1.0 / ctx.dim)
    z = np.vstack([np.zeros(ctx.dim), z])
    return float(np.max(np.abs(rescaled_objective(ctx, s.anchor, z, s.n) - surrogate_eval(s, z))))


def confint_functional(report: InferenceReport, alpha_hat, f, n: int, level: float = 0.95):
    """Normal-approximation interval for ``<f, alpha_star>``.

    Returns
    -------
    lo, hi : float
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if report.Sigma is None:
        raise SingularHessian("no sandwich covariance: curvature matrix is singular")
    f = np.asarray(f, dtype=float)
    centre = float(f @ np.asarray(alpha_hat, dtype=float))
    z = float(ndtri(0.5 * (1.0 + level)))
    half = z * np.sqrt(max(float(f @ report.Sigma @ f), 0.0) / n)
    return centre - half, centre + half
