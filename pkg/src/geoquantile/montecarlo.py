"""Seeded Monte-Carlo experiments for empirical geometric quantiles.

Three experiments share one replication loop:

* consistency  -- median ``||alpha_hat - alpha_star||`` per sample size;
* normality    -- empirical covariance of ``sqrt(n)(alpha_hat - alpha_star)``
  against the sandwich covariance of a dense population approximation;
* Bahadur      -- median ``||sqrt(n)(alpha_hat - alpha_star) - beta_hat||``
  per sample size and its log-log slope.

Every replication draws from its own ``SeedSequence((seed, n_index, rep))``,
so results do not depend on how replications are spread over workers.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import ndtri
from scipy.stats import qmc

from . import __version__
from .errors import ConfigError, GeoQuantileError
from .inference import beta_hat, estimate_H, estimate_V, sandwich_sigma
from .measure import AtomicMeasure, QuantileDirection
from .objective import ObjectiveContext
from .optimizer import SolverConfig, solve

logger = logging.getLogger(__name__)

DENSE_SIZE = 2**17
THREADS_ENV = "GEOQUANTILE_THREADS"

# epsilon_n = c * n**(-power); "exact" means solving to a 1e-12 subgradient
EPSILON_SCHEDULES = {"exact": None, "o(1/n)": 1.5, "o(n^-3/2)": 2.0, "o(n^-2)": 2.5}
EXACT_GRAD_TOL = 1e-12


# -- distributions ---------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    mean: tuple
    cov: tuple  # row-major d x d

    kind = "gaussian"

    @classmethod
    def create(cls, mean, cov=None):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        d = mean.size
        if cov is None:
            cov = np.eye(d)
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(d)
        elif cov.ndim == 1:
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise ConfigError(f"covariance shape {cov.shape} does not match mean of size {d}")
        if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov)[0] < -1e-12:
            raise ConfigError("covariance must be symmetric positive semidefinite")
        return cls(tuple(mean), tuple(map(tuple, cov)))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def factor(self) -> np.ndarray:
        lam, Q = np.linalg.eigh(np.array(self.cov))
        return Q * np.sqrt(np.clip(lam, 0.0, None))

    def transform(self, z):
        return np.array(self.mean) + z @ self.factor().T

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mean": list(self.mean), "cov": [list(r) for r in self.cov]}


@dataclass(frozen=True)
class GaussianMixture:
    weights: tuple
    components: tuple  # of Gaussian

    kind = "mixture"

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def to_dict(self) -> dict:
        return {"kind": self.kind, "weights": list(self.weights),
                "components": [c.to_dict() for c in self.components]}


@dataclass(frozen=True)
class UniformAtoms:
    atoms: tuple
    weights: tuple

    kind = "atoms"

    @property
    def dim(self) -> int:
        return len(self.atoms[0])

    def measure(self) -> AtomicMeasure:
        return AtomicMeasure.from_unnormalized(np.array(self.atoms), np.array(self.weights))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "atoms": [list(a) for a in self.atoms],
                "weights": list(self.weights)}


@dataclass(frozen=True)
class TruncatedKL:
    """Basis coefficients ``z_k ~ N(0, k^(-2 decay))``, ``k = 1..dim``.

    A finite-dimensional stand-in for a Gaussian process observed through
    its first ``dim`` Karhunen-Loeve coordinates.
    """

    decay: float
    basis_dim: int

    kind = "truncated_kl"

    @property
    def dim(self) -> int:
        return self.basis_dim

    @property
    def scales(self) -> np.ndarray:
        return np.arange(1, self.basis_dim + 1, dtype=float) ** (-self.decay)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "decay": self.decay, "dim": self.basis_dim}


Distribution = Gaussian | GaussianMixture | UniformAtoms | TruncatedKL


def distribution_from_dict(spec: dict) -> Distribution:
    """Build a distribution from its JSON description.

    Kinds: ``gaussian`` (``mean``, optional ``cov`` as matrix, diagonal list
    or scalar), ``mixture`` (``weights``, ``components``), ``atoms``
    (``atoms``, optional ``weights``), ``truncated_kl`` (``decay``, ``dim``).
    """
    try:
        kind = spec["kind"]
        if kind == "gaussian":
            return Gaussian.create(spec["mean"], spec.get("cov"))
        if kind == "mixture":
            comps = tuple(distribution_from_dict({**c, "kind": "gaussian"})
                          for c in spec["components"])
            w = np.asarray(spec["weights"], dtype=float)
            if w.size != len(comps) or np.any(w < 0) or not w.sum() > 0:
                raise ConfigError("mixture weights must be nonnegative, one per component")
            if len({c.dim for c in comps}) != 1:
                raise ConfigError("mixture components differ in dimension")
            return GaussianMixture(tuple(w / w.sum()), comps)
        if kind == "atoms":
            atoms = np.atleast_2d(np.asarray(spec["atoms"], dtype=float))
            w = np.asarray(spec.get("weights", np.ones(len(atoms))), dtype=float)
            if w.size != atoms.shape[0] or np.any(w < 0) or not w.sum() > 0:
                raise ConfigError("atom weights must be nonnegative, one per atom")
            return UniformAtoms(tuple(map(tuple, atoms)), tuple(w / w.sum()))
        if kind == "truncated_kl":
            decay, dim = float(spec["decay"]), int(spec["dim"])
            if dim < 1 or decay <= 0:
                raise ConfigError("truncated_kl needs dim >= 1 and decay > 0")
            return TruncatedKL(decay, dim)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid distribution spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown distribution kind {spec.get('kind')!r}")


def _draw(dist: Distribution, n: int, normals) -> np.ndarray:
    """Map a source of standard normals (callable shape -> array) to draws."""
    if isinstance(dist, Gaussian):
        return dist.transform(normals((n, dist.dim)))
    if isinstance(dist, TruncatedKL):
        return normals((n, dist.dim)) * dist.scales
    raise TypeError(type(dist).__name__)  # pragma: no cover


def sample(dist: Distribution, n: int, rng: np.random.Generator) -> AtomicMeasure:
    """``n`` i.i.d. draws from ``dist`` as a uniform-weight empirical measure."""
    if n < 1:
        raise ConfigError("sample size must be positive")
    if isinstance(dist, (Gaussian, TruncatedKL)):
        return AtomicMeasure(_draw(dist, n, rng.standard_normal))
    if isinstance(dist, GaussianMixture):
        labels = rng.choice(len(dist.weights), size=n, p=np.array(dist.weights))
        z = rng.standard_normal((n, dist.dim))
        out = np.empty((n, dist.dim))
        for k, comp in enumerate(dist.components):
            mask = labels == k
            out[mask] = comp.transform(z[mask])
        return AtomicMeasure(out)
    if isinstance(dist, UniformAtoms):
        idx = rng.choice(len(dist.atoms), size=n, p=np.array(dist.weights))
        return AtomicMeasure(np.array(dist.atoms)[idx])
    raise ConfigError(f"cannot sample from {dist!r}")


def _sobol_normals(dim: int, size: int, seed: int) -> np.ndarray:
    m = int(np.ceil(np.log2(size)))
    u = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:size]
    return ndtri(u)


def dense_approximation(dist: Distribution, size: int = DENSE_SIZE, seed: int = 0) -> AtomicMeasure:
    """Many-atom stand-in for the population measure.

    Gaussian-type distributions use scrambled Sobol points pushed through the
    normal quantile function; atomic distributions are returned exactly.
    """
    if isinstance(dist, UniformAtoms):
        return dist.measure()
    if isinstance(dist, (Gaussian, TruncatedKL)):
        z = _sobol_normals(dist.dim, size, seed)
        return AtomicMeasure(_draw(dist, size, lambda shape: z))
    if isinstance(dist, GaussianMixture):
        counts = np.floor(np.array(dist.weights) * size).astype(int)
        parts, wts = [], []
        for k, (comp, c) in enumerate(zip(dist.components, counts)):
            if c == 0:
                continue
            parts.append(comp.transform(_sobol_normals(comp.dim, c, seed + k)))
            wts.append(np.full(c, dist.weights[k] / c))
        return AtomicMeasure.from_unnormalized(np.vstack(parts), np.concatenate(wts))
    raise ConfigError(f"no dense approximation for {dist!r}")


def _mixture_parts(dist: Distribution):
    if isinstance(dist, Gaussian):
        return [(1.0, dist)]
    if isinstance(dist, GaussianMixture):
        return list(zip(dist.weights, dist.components))
    return None


def polar_quadrature(dist: Distribution, center, n_radial: int = 256,
                     n_angular: int = 512) -> AtomicMeasure | None:
    """Weighted polar grid around ``center`` for 2-D Gaussians and mixtures.

    The area element ``rho drho dtheta`` cancels the ``1/r`` singularity of
    the curvature integrand at ``center``, so Gauss-Legendre in the radius
    and the trapezoid rule in the angle integrate it to high accuracy.
    Returns None when the distribution is not a nondegenerate 2-D Gaussian
    (mixture).
    """
    parts = _mixture_parts(dist)
    if parts is None or dist.dim != 2:
        return None
    center = np.asarray(center, dtype=float)
    reach = 0.0
    for _, comp in parts:
        lam = np.linalg.eigvalsh(np.array(comp.cov))
        if lam[0] <= 0:
            return None
        reach = max(reach, np.linalg.norm(np.array(comp.mean) - center) + 12.0 * np.sqrt(lam[-1]))
    nodes, gl_w = np.polynomial.legendre.leggauss(n_radial)
    rho = 0.5 * reach * (nodes + 1.0)
    w_rho = 0.5 * reach * gl_w
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    pts = center + (rho[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
    dens = np.zeros(pts.shape[0])
    for weight, comp in parts:
        dens += weight * stats.multivariate_normal(np.array(comp.mean), np.array(comp.cov)).pdf(pts)
    area = (w_rho * rho)[:, None] * np.full(n_angular, 2.0 * np.pi / n_angular)[None, :]
    return AtomicMeasure.from_unnormalized(pts, dens * area.reshape(-1))


def symmetry_center(dist: Distribution):
    """Center of central symmetry when it is known in closed form, else None."""
    if isinstance(dist, Gaussian):
        return np.array(dist.mean)
    if isinstance(dist, TruncatedKL):
        return np.zeros(dist.dim)
    return None


@dataclass
class TrueQuantile:
    alpha: np.ndarray
    epsilon_certified: float
    source: str  # "symmetry", "exact-atoms" or "dense-approximation"


def true_quantile(dist: Distribution, ell, approximation: AtomicMeasure | None = None) -> TrueQuantile:
    """Population quantile ``alpha_star`` of ``dist`` in direction ``ell``.

    Symmetric distributions with ``ell = 0`` return their center. Atomic
    distributions are solved exactly. Anything else needs a dense
    ``approximation`` (see :func:`dense_approximation`), solved to 1e-12.
    """
    ell = QuantileDirection(np.asarray(getattr(ell, "vector", ell), dtype=float))
    if ell.dim != dist.dim:
        raise ConfigError("direction and distribution differ in dimension")
    center = symmetry_center(dist)
    if center is not None and not np.any(ell.vector):
        return TrueQuantile(center, 0.0, "symmetry")
    if isinstance(dist, UniformAtoms):
        measure, source = dist.measure(), "exact-atoms"
    elif approximation is not None:
        measure, source = approximation, "dense-approximation"
    else:
        raise ConfigError("asymmetric case needs a dense approximation of the distribution")
    sol = solve(ObjectiveContext(measure, ell),
                SolverConfig(grad_tol=EXACT_GRAD_TOL, keep_trace=False))
    return TrueQuantile(sol.alpha_hat, sol.epsilon_certified, source)


# -- experiments -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    distribution: Distribution
    ell: np.ndarray
    n_grid: list[int]
    replications: int
    seed: int = 0
    epsilon_schedule: str = "exact"
    epsilon_constant: float = 1.0
    dense_size: int = DENSE_SIZE
    threads: int | None = None
    keep_rows: bool = False

    def __post_init__(self):
        self.ell = np.atleast_1d(np.asarray(self.ell, dtype=float))
        QuantileDirection(self.ell)
        if self.ell.size != self.distribution.dim:
            raise ConfigError("ell and distribution differ in dimension")
        self.n_grid = [int(n) for n in self.n_grid]
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must hold positive sample sizes")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.epsilon_schedule not in EPSILON_SCHEDULES:
            raise ConfigError(f"epsilon_schedule must be one of {sorted(EPSILON_SCHEDULES)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        try:
            dist = distribution_from_dict(data.pop("distribution"))
            ell = data.pop("ell", None)
            ell = np.zeros(dist.dim) if ell is None else ell
            return cls(distribution=dist, ell=ell, **data)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "ell": self.ell.tolist(),
            "n_grid": list(self.n_grid),
            "replications": self.replications,
            "seed": self.seed,
            "epsilon_schedule": self.epsilon_schedule,
            "epsilon_constant": self.epsilon_constant,
            "dense_size": self.dense_size,
        }

    def target_epsilon(self, n: int) -> float | None:
        power = EPSILON_SCHEDULES[self.epsilon_schedule]
        return None if power is None else self.epsilon_constant * n ** (-power)

    def solver_config(self, n: int) -> SolverConfig:
        target = self.target_epsilon(n)
        if target is None:
            return SolverConfig(grad_tol=EXACT_GRAD_TOL, keep_trace=False)
        return SolverConfig(grad_tol=EXACT_GRAD_TOL, target_epsilon=target, keep_trace=False)


@dataclass
class Population:
    alpha_star: np.ndarray
    H: np.ndarray | None
    V: np.ndarray | None
    Sigma: np.ndarray | None
    source: str


def population_summary(cfg: ExperimentConfig, need_hessian: bool = True) -> Population:
    """``alpha_star`` and the population ``H``, ``V``, ``Sigma`` at it.

    2-D Gaussian populations are integrated on a polar grid centred at
    ``alpha_star`` (re-centred twice when ``alpha_star`` is itself estimated);
    everything else uses the scrambled-Sobol approximation.
    """
    dist = cfg.distribution
    known = symmetry_center(dist) is not None and not np.any(cfg.ell)
    qmc_dense = None
    if not known and not isinstance(dist, UniformAtoms):
        qmc_dense = dense_approximation(dist, cfg.dense_size, seed=cfg.seed % 2**32)
    tq = true_quantile(dist, cfg.ell, qmc_dense)
    dense = qmc_dense
    polar = polar_quadrature(dist, tq.alpha)
    if polar is not None:
        dense = polar
        if not known:
            for _ in range(2):
                sol = solve(ObjectiveContext(polar, cfg.ell),
                            SolverConfig(grad_tol=EXACT_GRAD_TOL, init=tq.alpha, keep_trace=False))
                tq = TrueQuantile(sol.alpha_hat, sol.epsilon_certified, "polar-quadrature")
                polar = polar_quadrature(dist, tq.alpha)
            dense = polar
    H = V = Sigma = None
    if need_hessian:
        if dense is None:
            dense = dense_approximation(dist, cfg.dense_size, seed=cfg.seed % 2**32)
        ctx = ObjectiveContext(dense, cfg.ell)
        try:
            H = estimate_H(ctx, tq.alpha)
            V = estimate_V(ctx, tq.alpha)
            Sigma = sandwich_sigma(H, V)
        except GeoQuantileError as exc:
            logger.warning("population curvature unavailable: %s", exc)
            H = V = Sigma = None
    return Population(tq.alpha, H, V, Sigma, tq.source)


def _replicate(cfg: ExperimentConfig, pop: Population, n_index: int, n: int, rep: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, n_index, rep)))
    row = {"n": n, "rep": rep, "failed": False}
    try:
        mu = sample(cfg.distribution, n, rng)
        ctx = ObjectiveContext(mu, cfg.ell)
        sol = solve(ctx, cfg.solver_config(n))
        target = cfg.target_epsilon(n)
        scaled = np.sqrt(n) * (sol.alpha_hat - pop.alpha_star)
        row.update(
            alpha_hat=sol.alpha_hat,
            epsilon_certified=sol.epsilon_certified,
            subgrad_norm=sol.subgrad_norm,
            iterations=sol.iterations,
            converged=sol.converged,
            schedule_ok=bool(sol.at_atom or sol.subgrad_norm <= EXACT_GRAD_TOL
                             if target is None else sol.epsilon_certified <= target),
            error=float(np.linalg.norm(sol.alpha_hat - pop.alpha_star)),
            scaled=scaled,
        )
        if pop.H is not None:
            beta = beta_hat(ctx, pop.alpha_star, H=pop.H).beta
            row.update(beta=beta, remainder=float(np.linalg.norm(scaled - beta)))
    except GeoQuantileError as exc:
        row.update(failed=True, reason=f"{type(exc).__name__}: {exc}")
    return row


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _loglog_slope(ns, values):
    ns, values = np.asarray(ns, dtype=float), np.asarray(values, dtype=float)
    ok = np.isfinite(values) & (values > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[ok]), np.log(values[ok]), 1)[0])


@dataclass
class ExperimentReport:
    config: dict
    alpha_star: np.ndarray
    population_source: str
    sigma_population: np.ndarray | None
    per_n: list[dict]
    remainder_slope: float | None
    consistency_slope: float | None
    consistency_violations: int
    rows: list[dict] = field(default_factory=list)

    @property
    def consistency_decreasing(self) -> bool:
        return self.consistency_violations == 0

    def to_dict(self) -> dict:
        out = {
            "version": __version__,
            "seed": self.config["seed"],
            "config": self.config,
            "alpha_star": self.alpha_star,
            "population_source": self.population_source,
            "sigma_population": self.sigma_population,
            "per_n": self.per_n,
            "remainder_slope": self.remainder_slope,
            "consistency_slope": self.consistency_slope,
            "consistency_violations": self.consistency_violations,
        }
        if self.rows:
            out["rows"] = self.rows
        return out


def _summarise(n: int, rows: list[dict], pop: Population) -> dict:
    good = [r for r in rows if not r["failed"]]
    entry = {
        "n": n,
        "replications": len(rows),
        "failures": len(rows) - len(good),
        "schedule_ok_fraction": float(np.mean([r["schedule_ok"] for r in good])) if good else None,
        "median_error": float(np.median([r["error"] for r in good])) if good else None,
        "empirical_covariance": None,
        "relative_frobenius_error": None,
        "ks_statistics": None,
        "median_remainder": None,
        "insufficient_replications": len(good) < 2,
    }
    if len(good) >= 2:
        Z = np.array([r["scaled"] for r in good])
        C = np.atleast_2d(np.cov(Z, rowvar=False))
        C = 0.5 * (C + C.T)
        entry["empirical_covariance"] = C
        if pop.Sigma is not None:
            entry["relative_frobenius_error"] = float(
                np.linalg.norm(C - pop.Sigma) / np.linalg.norm(pop.Sigma))
            sd = np.sqrt(np.diag(pop.Sigma))
            entry["ks_statistics"] = [float(stats.kstest(Z[:, k] / sd[k], "norm").statistic)
                                      for k in range(Z.shape[1])]
    rem = [r["remainder"] for r in good if "remainder" in r]
    if rem:
        entry["median_remainder"] = float(np.median(rem))
    return entry


def _row_for_output(row: dict) -> dict:
    return {k: v for k, v in row.items() if k not in ("scaled",)}


def run_experiment(cfg: ExperimentConfig, need_hessian: bool = True) -> ExperimentReport:
    """Run every replication for every ``n`` and aggregate the results."""
    pop = population_summary(cfg, need_hessian)
    tasks = [(i, n, rep) for i, n in enumerate(cfg.n_grid) for rep in range(cfg.replications)]
    workers = _thread_count(cfg.threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda t: _replicate(cfg, pop, *t), tasks))
    else:
        rows = [_replicate(cfg, pop, *t) for t in tasks]

    per_n = []
    for n in cfg.n_grid:
        per_n.append(_summarise(n, [r for r in rows if r["n"] == n], pop))
    failures = sum(e["failures"] for e in per_n)
    if failures:
        logger.warning("%d replications failed", failures)

    errs = [e["median_error"] for e in per_n]
    violations = sum(1 for a, b in zip(errs, errs[1:])
                     if a is None or b is None or b > a or (b == a and a > 0))
    return ExperimentReport(
        config=cfg.to_dict(),
        alpha_star=pop.alpha_star,
        population_source=pop.source,
        sigma_population=pop.Sigma,
        per_n=per_n,
        remainder_slope=_loglog_slope(cfg.n_grid, [e["median_remainder"] or np.nan for e in per_n]),
        consistency_slope=_loglog_slope(cfg.n_grid, [e["median_error"] or np.nan for e in per_n]),
        consistency_violations=violations,
        rows=[_row_for_output(r) for r in rows] if cfg.keep_rows else [],
    )


def run_normality(cfg: ExperimentConfig) -> ExperimentReport:
    """Compare the spread of ``sqrt(n)(alpha_hat - alpha_star)`` with the sandwich covariance."""
    return run_experiment(cfg, need_hessian=True)


def run_bahadur(cfg: ExperimentConfig) -> ExperimentReport:
    """Median linearisation remainders per ``n`` and their log-log slope."""
    return run_experiment(cfg, need_hessian=True)


def run_consistency(cfg: ExperimentConfig) -> ExperimentReport:
    """Median estimation error per ``n``; no curvature needed."""
    return run_experiment(cfg, need_hessian=False)
