"""Taylor remainders of the Euclidean norm and of its gradient.

For ``alpha != 0``::

    | ||a+h|| - ||a|| - <a/||a||, h> - 1/2 <D2(a) h, h> |  <=  1/2 min(|h|^2/|a|, |h|^3/|a|^2)
    || (a+h)/||a+h|| - a/||a|| - D2(a) h ||                 <=  2   min(|h|/|a|,   |h|^2/|a|^2)

with ``D2(a) h = (h - a <a, h>/||a||^2) / ||a||``. Both constants are attained
along ``h = lambda * a`` with ``lambda -> -1`` (second bound) or
``lambda <= -2`` (first bound).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TaylorCheck:
    lhs: float
    bound: float

    @property
    def ratio(self) -> float:
        if self.bound == 0.0:
            return 0.0 if self.lhs == 0.0 else np.inf
        return self.lhs / self.bound

    @property
    def holds(self) -> bool:
        return self.lhs <= self.bound + 1e-12


def _hessian_apply(alpha, h, na):
    # rows are independent (alpha_i, h_i) pairs
    proj = np.sum(alpha * h, axis=-1, keepdims=True) / na**2
    return (h - alpha * proj) / na


def norm_taylor2_remainders(alpha, h):
    """Vectorised second-order remainder and its bound, one pair per row."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    na = np.linalg.norm(alpha, axis=-1, keepdims=True)
    if np.any(na == 0):
        raise DomainError("alpha must be nonzero")
    nh = np.linalg.norm(h, axis=-1)
    nah = np.linalg.norm(alpha + h, axis=-1)
    na1 = na[..., 0]
    ah = np.sum(alpha * h, axis=-1)
    # ||a+h|| - ||a|| without cancellation
    delta = (2.0 * ah + nh**2) / (nah + na1)
    quad = np.sum(_hessian_apply(alpha, h, na) * h, axis=-1)
    lhs = np.abs(delta - ah / na1 - 0.5 * quad)
    bound = 0.5 * np.minimum(nh**2 / na1, nh**3 / na1**2)
    return lhs, bound


def gradnorm_taylor1_remainders(alpha, h):
    """Vectorised first-order gradient remainder and its bound."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    na = np.linalg.norm(alpha, axis=-1, keepdims=True)
    if np.any(na == 0):
        raise DomainError("alpha must be nonzero")
    nah = np.linalg.norm(alpha + h, axis=-1, keepdims=True)
    if np.any(nah == 0):
        raise DomainError("alpha + h must be nonzero")
    nh = np.linalg.norm(h, axis=-1)
    resid = (alpha + h) / nah - alpha / na - _hessian_apply(alpha, h, na)
    lhs = np.linalg.norm(resid, axis=-1)
    na1 = na[..., 0]
    bound = 2.0 * np.minimum(nh / na1, nh**2 / na1**2)
    return lhs, bound


def norm_taylor2_check(alpha, h) -> TaylorCheck:
    """Second-order Taylor remainder of the norm at ``alpha`` in direction ``h``."""
    lhs, bound = norm_taylor2_remainders(np.ravel(alpha), np.ravel(h))
    return TaylorCheck(float(lhs[0]), float(bound[0]))


def gradnorm_taylor1_check(alpha, h) -> TaylorCheck:
    """First-order Taylor remainder of the normalised vector ``a/||a||``."""
    lhs, bound = gradnorm_taylor1_remainders(np.ravel(alpha), np.ravel(h))
    return TaylorCheck(float(lhs[0]), float(bound[0]))


def random_pairs(rng: np.random.Generator, n: int, dim: int,
                 log_ratio_range=(-6.0, 3.0)):
    """Random ``(alpha, h)`` with ``||h||/||alpha||`` log-uniform over the range.

    ``||alpha||`` is drawn log-uniformly in ``[1/2, 2]`` so the absolute
    rounding noise of the remainders stays far below 1e-12.
    """
    a = rng.standard_normal((n, dim))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    a *= 2.0 ** rng.uniform(-1, 1, size=(n, 1))
    h = rng.standard_normal((n, dim))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    ratio = 10.0 ** rng.uniform(*log_ratio_range, size=(n, 1))
    h *= ratio * np.linalg.norm(a, axis=1, keepdims=True)
    return a, h


def collinear_sweep(lambdas, dim: int = 1):
    """Ratios lhs/bound for ``h = lambda * alpha`` with ``alpha = e_1`` in ``R^dim``.

    Returns
    -------
    ratio2, ratio1 : ndarray
        Ratios for the norm remainder and the gradient remainder. The
        gradient ratio is NaN at ``lambda = -1``, where ``alpha + h = 0``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    alpha = np.zeros((lambdas.size, dim))
    alpha[:, 0] = 1.0
    h = lambdas[:, None] * alpha
    lhs2, b2 = norm_taylor2_remainders(alpha, h)
    ok = lambdas != -1.0
    lhs1 = np.full(lambdas.size, np.nan)
    b1 = np.full(lambdas.size, np.nan)
    if ok.any():
        lhs1[ok], b1[ok] = gradnorm_taylor1_remainders(alpha[ok], h[ok])
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(b2 > 0, lhs2 / b2, 0.0)
        r1 = np.where(b1 > 0, lhs1 / b1, np.where(ok, 0.0, np.nan))
    return r2, r1
