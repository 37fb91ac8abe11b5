import json

import numpy as np
import pytest

from geoquantile.errors import EmptyError, FormatError, InvalidDirection
from geoquantile.measure import (
    AtomicMeasure,
    NormKind,
    QuantileDirection,
    in_line_family,
    line_mass_sup,
    load_measure,
    measure_from_json,
    measure_to_json,
    norm,
    save_measure,
)

from .oracles import line_mass_bruteforce


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadMeasure:
    def test_uniform_default(self, tmp_path):
        mu = load_measure(write(tmp_path, "1,0\n-1,0\n"))
        assert mu.dim == 2
        np.testing.assert_array_equal(mu.atoms, [[1, 0], [-1, 0]])
        np.testing.assert_array_equal(mu.weights, [0.5, 0.5])

    def test_weight_column_renormalised(self, tmp_path):
        mu = load_measure(write(tmp_path, "x,y,weight\n0,0,3\n1,1,1\n"))
        assert mu.dim == 2
        np.testing.assert_allclose(mu.weights, [0.75, 0.25])

    def test_header_without_weight(self, tmp_path):
        mu = load_measure(write(tmp_path, "x,y\n0,0\n2,2\n"))
        assert mu.dim == 2 and mu.size == 2

    def test_ragged(self, tmp_path):
        with pytest.raises(FormatError):
            load_measure(write(tmp_path, "1,0\n1,0,5\n"))

    def test_non_finite(self, tmp_path):
        with pytest.raises(ValueError):
            load_measure(write(tmp_path, "1,0\nnan,2\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(EmptyError):
            load_measure(write(tmp_path, ""))
        with pytest.raises(EmptyError):
            load_measure(write(tmp_path, "x,weight\n", "h.csv"))

    def test_roundtrip(self, tmp_path, rng):
        mu = AtomicMeasure.from_unnormalized(rng.standard_normal((7, 3)), rng.uniform(size=7))
        path = tmp_path / "m.csv"
        save_measure(mu, path)
        back = load_measure(path)
        np.testing.assert_array_equal(back.atoms, mu.atoms)
        np.testing.assert_allclose(back.weights, mu.weights, rtol=1e-15)

    def test_json_roundtrip(self, rng):
        mu = AtomicMeasure(rng.standard_normal((5, 2)))
        data = json.loads(measure_to_json(mu))
        assert set(data) == {"dim", "atoms", "weights"}
        back = measure_from_json(measure_to_json(mu))
        np.testing.assert_array_equal(back.atoms, mu.atoms)
        np.testing.assert_array_equal(back.weights, mu.weights)


class TestInvariants:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            AtomicMeasure([[0.0], [1.0]], [0.5, 0.6])

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            AtomicMeasure([[0.0], [1.0]], [1.5, -0.5])

    def test_no_atoms(self):
        with pytest.raises(EmptyError):
            AtomicMeasure(np.zeros((0, 2)))

    def test_immutable(self, diamond):
        with pytest.raises(ValueError):
            diamond.atoms[0, 0] = 5.0

    def test_direction_norm(self):
        QuantileDirection([0.6, 0.79])
        with pytest.raises(InvalidDirection):
            QuantileDirection([0.6, 0.8])


@pytest.mark.parametrize("v, kind, expected", [
    ((3, 4), "euclidean", 5.0),
    ((1, -2), "linf", 2.0),
    ((1, -2), "l1", 3.0),
])
def test_norm(v, kind, expected):
    assert norm(v, kind) == expected
    assert norm(v, NormKind(kind)) == expected


class TestLineMass:
    def test_diamond(self, diamond):
        mass, witness = line_mass_sup(diamond)
        assert mass == 0.5
        assert mass == line_mass_bruteforce(diamond.atoms, diamond.weights)
        assert witness.direction is not None

    def test_single_atom(self):
        mass, witness = line_mass_sup(AtomicMeasure.dirac([1.0, 2.0]))
        assert mass == 1.0
        np.testing.assert_array_equal(witness.point, [1.0, 2.0])

    def test_two_atoms(self, two_points):
        assert line_mass_sup(two_points)[0] == 1.0
        assert in_line_family(two_points)

    def test_duplicates_count(self):
        mu = AtomicMeasure([[0, 0], [0, 0], [0, 0], [1, 0], [0, 1]])
        assert line_mass_sup(mu)[0] == pytest.approx(0.8)

    def test_three_d_collinear(self):
        mu = AtomicMeasure([[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 0, 1]])
        assert line_mass_sup(mu)[0] == pytest.approx(0.75)

    def test_against_bruteforce(self, rng):
        for _ in range(20):
            m = int(rng.integers(2, 12))
            d = int(rng.integers(2, 4))
            pts = rng.integers(-2, 3, size=(m, d)).astype(float)
            w = rng.uniform(0.1, 1.0, size=m)
            mu = AtomicMeasure.from_unnormalized(pts, w)
            mass, _ = line_mass_sup(mu)
            assert mass == pytest.approx(line_mass_bruteforce(mu.atoms, mu.weights), abs=1e-12)
            assert mu.weights.max() - 1e-12 <= mass <= 1.0
            assert (mass == pytest.approx(1.0)) == in_line_family(mu)
