import numpy as np
import pytest

from geoquantile import AtomicMeasure, univariate_quantile
from geoquantile._json import dumps
from geoquantile.errors import ConfigError
from geoquantile.montecarlo import (
    ExperimentConfig,
    Gaussian,
    TruncatedKL,
    dense_approximation,
    distribution_from_dict,
    polar_quadrature,
    run_bahadur,
    run_consistency,
    run_normality,
    sample,
    true_quantile,
)


def cfg(**kw):
    base = dict(distribution={"kind": "gaussian", "mean": [0, 0]}, n_grid=[50, 200], replications=20)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


class TestSampling:
    def test_seeded(self):
        d = Gaussian.create([0.0, 0.0])
        a = sample(d, 3, np.random.default_rng(11)).atoms
        b = sample(d, 3, np.random.default_rng(11)).atoms
        np.testing.assert_array_equal(a, b)
        assert a.shape == (3, 2)

    def test_atoms_only(self):
        d = distribution_from_dict({"kind": "atoms", "atoms": [[-1, 0], [1, 0]]})
        X = sample(d, 200, np.random.default_rng(0)).atoms
        assert set(map(tuple, X)) <= {(-1.0, 0.0), (1.0, 0.0)}

    def test_kl_variances(self):
        d = TruncatedKL(1.0, 20)
        X = sample(d, 100, np.random.default_rng(5)).atoms
        k = np.arange(1, 21)
        var = X.var(axis=0, ddof=1)
        # chi-square sampling error: sd of s^2 is sigma^2 sqrt(2/(n-1))
        se = k ** -2.0 * np.sqrt(2 / 99)
        assert np.all(np.abs(var - k ** -2.0) <= 3 * se)

    def test_mixture_and_covariances(self):
        d = distribution_from_dict({"kind": "mixture", "weights": [1, 3], "components": [
            {"mean": [0, 0]}, {"mean": [5, 5], "cov": [2, 0.5]}]})
        assert d.weights == (0.25, 0.75)
        X = sample(d, 4000, np.random.default_rng(0)).atoms
        assert np.mean(X[:, 0] > 2.5) == pytest.approx(0.75, abs=0.03)

    @pytest.mark.parametrize("spec", [
        {"kind": "nope"},
        {"kind": "gaussian"},
        {"kind": "gaussian", "mean": [0, 0], "cov": [[1, 2], [2, 1]]},
        {"kind": "truncated_kl", "decay": 1, "dim": 0},
    ])
    def test_bad_specs(self, spec):
        with pytest.raises(ConfigError):
            distribution_from_dict(spec)


class TestTrueQuantile:
    def test_symmetric(self):
        assert np.array_equal(true_quantile(Gaussian.create(np.zeros(3)), np.zeros(3)).alpha, np.zeros(3))
        tq = true_quantile(Gaussian.create([1.0, 2.0]), [0.0, 0.0])
        assert tq.alpha.tolist() == [1.0, 2.0] and tq.source == "symmetry"

    def test_asymmetric_needs_approximation(self):
        dist = Gaussian.create([0.0, 0.0], [1.0, 4.0])
        with pytest.raises(ConfigError):
            true_quantile(dist, [0.3, 0.0])
        tq = true_quantile(dist, [0.3, 0.0], dense_approximation(dist, 2**14))
        assert tq.source == "dense-approximation"
        assert tq.alpha[0] > 0 and abs(tq.alpha[1]) < 0.05
        # the polar grid is far more accurate; the two agree to QMC accuracy
        polar = polar_quadrature(dist, tq.alpha)
        ref = true_quantile(distribution_from_dict({"kind": "atoms", "atoms": polar.atoms.tolist(),
                                                    "weights": polar.weights.tolist()}), [0.3, 0.0])
        assert np.linalg.norm(ref.alpha - tq.alpha) < 0.02

    def test_polar_masses(self):
        dist = Gaussian.create([0.5, -0.2], [[1.0, 0.3], [0.3, 2.0]])
        grid = polar_quadrature(dist, [0.1, 0.1])
        # weights are renormalised: compare the first two moments instead
        np.testing.assert_allclose(grid.weights @ grid.atoms, [0.5, -0.2], atol=1e-10)
        c = grid.atoms - [0.5, -0.2]
        np.testing.assert_allclose((c * grid.weights[:, None]).T @ c, [[1.0, 0.3], [0.3, 2.0]], atol=1e-10)
        assert polar_quadrature(TruncatedKL(1.0, 2), [0, 0]) is None


class TestExperiments:
    def test_deterministic_bytes(self):
        a = dumps(run_normality(cfg(seed=3)).to_dict())
        b = dumps(run_normality(cfg(seed=3)).to_dict())
        assert a == b
        assert a != dumps(run_normality(cfg(seed=4)).to_dict())

    def test_thread_split_invariant(self):
        one = dumps(run_bahadur(cfg(threads=1)).to_dict())
        many = dumps(run_bahadur(cfg(threads=4)).to_dict())
        assert one == many

    def test_insufficient_replications(self):
        rep = run_normality(cfg(replications=1))
        assert all(e["insufficient_replications"] for e in rep.per_n)
        assert all(e["empirical_covariance"] is None for e in rep.per_n)

    def test_single_atom_zero_error(self):
        rep = run_consistency(cfg(distribution={"kind": "atoms", "atoms": [[1.0, 2.0]]}))
        assert all(e["median_error"] == 0.0 for e in rep.per_n)
        assert rep.consistency_violations == 0

    def test_collinear_line_median(self):
        atoms = [[-2, -1], [0, 0], [2, 1], [4, 2], [6, 3]]
        c = cfg(distribution={"kind": "atoms", "atoms": atoms, "weights": [1, 2, 3, 2, 1]},
                n_grid=[11, 101, 1001], replications=30)
        rep = run_consistency(c)
        # unique univariate median along the line is the middle atom
        line = AtomicMeasure(np.array(atoms)[:, :1] * np.sqrt(1.25), [1 / 9, 2 / 9, 3 / 9, 2 / 9, 1 / 9])
        iv = univariate_quantile(line, 0.0)
        assert iv.unique
        np.testing.assert_allclose(rep.alpha_star, [2.0, 1.0], atol=1e-12)
        errs = [e["median_error"] for e in rep.per_n]
        assert errs[-1] == 0.0 and errs[0] >= errs[-1]

    def test_gaussian_3d_consistency(self):
        rep = run_consistency(cfg(distribution={"kind": "gaussian", "mean": [0, 0, 0]},
                                  n_grid=[100, 400, 1600], replications=30))
        errs = [e["median_error"] for e in rep.per_n]
        assert errs[0] > errs[1] > errs[2]

    def test_beta_zero_remainder(self):
        rep = run_bahadur(cfg(distribution={"kind": "atoms", "atoms": [[1, 0], [-1, 0], [0, 1], [0, -1]]},
                              n_grid=[40], replications=10, keep_rows=True))
        for row in rep.rows:
            np.testing.assert_allclose(row["remainder"],
                                       np.linalg.norm(np.sqrt(40) * row["alpha_hat"] - row["beta"]))

    def test_epsilon_schedule(self):
        c = cfg(epsilon_schedule="o(n^-2)", epsilon_constant=0.5, keep_rows=True)
        assert c.target_epsilon(100) == pytest.approx(0.5 * 100 ** -2.5)
        rep = run_normality(c)
        assert all(r["epsilon_certified"] <= c.target_epsilon(r["n"]) for r in rep.rows)
        assert all(e["schedule_ok_fraction"] == 1.0 for e in rep.per_n)

    def test_asymmetric_population(self):
        rep = run_normality(cfg(ell=[0.2, 0.1], replications=5))
        assert rep.population_source == "polar-quadrature"
        assert rep.sigma_population is not None

    @pytest.mark.parametrize("bad", [
        dict(n_grid=[]), dict(n_grid=[100, 50]), dict(replications=0),
        dict(epsilon_schedule="fast"), dict(ell=[0.9, 0.9]), dict(ell=[0.1]),
        dict(unknown_key=1),
    ])
    def test_config_validation(self, bad):
        with pytest.raises(Exception) as info:
            cfg(**bad)
        assert isinstance(info.value, (ConfigError, ValueError))
