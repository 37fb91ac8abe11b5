"""Randomised properties of the objective, solver and plug-in matrices."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoquantile import ObjectiveContext, SolverConfig, estimate_H, estimate_V, phi, solve, subgradient
from geoquantile.measure import AtomicMeasure
from geoquantile.objective import phi_many

finite = st.floats(-10, 10, allow_nan=False, width=64)


@st.composite
def contexts(draw, max_dim=4, max_atoms=12):
    d = draw(st.integers(1, max_dim))
    m = draw(st.integers(1, max_atoms))
    X = draw(arrays(float, (m, d), elements=finite))
    w = draw(arrays(float, m, elements=st.floats(0.05, 1.0)))
    ell = draw(arrays(float, d, elements=st.floats(-1, 1)))
    scale = draw(st.floats(0.0, 0.95))
    n = np.linalg.norm(ell)
    ell = ell * (scale / n) if n > 0 else ell
    return ObjectiveContext(AtomicMeasure.from_unnormalized(X, w), ell)


def points(ctx, draw, k):
    return draw(arrays(float, (k, ctx.dim), elements=finite))


SETTINGS = settings(max_examples=150, deadline=None, derandomize=True)


@SETTINGS
@given(contexts(), st.data())
def test_zero_at_origin(ctx, data):
    assert phi(ctx, np.zeros(ctx.dim)) == 0.0


@SETTINGS
@given(contexts(), st.data())
def test_lipschitz(ctx, data):
    a, b = points(ctx, data.draw, 2)
    L = 1 + np.linalg.norm(ctx.ell.vector)
    assert abs(phi(ctx, a) - phi(ctx, b)) <= L * np.linalg.norm(a - b) + 1e-12


@SETTINGS
@given(contexts(), st.data())
def test_convex_midpoint(ctx, data):
    a, b = points(ctx, data.draw, 2)
    mid = phi(ctx, 0.5 * (a + b))
    assert mid <= 0.5 * (phi(ctx, a) + phi(ctx, b)) + 1e-12


@SETTINGS
@given(contexts(), st.data())
def test_subgradient_inequality(ctx, data):
    a, b = points(ctx, data.draw, 2)
    g = subgradient(ctx, a).subgradient
    assert phi(ctx, b) >= phi(ctx, a) + g @ (b - a) - 1e-10


@SETTINGS
@given(contexts(), st.data())
def test_subgradient_at_atom(ctx, data):
    k = data.draw(st.integers(0, ctx.measure.size - 1))
    a = ctx.measure.atoms[k]
    res = subgradient(ctx, a)
    assert res.at_atom is not None
    b = points(ctx, data.draw, 1)[0]
    assert phi(ctx, b) >= phi(ctx, a) + res.subgradient @ (b - a) - 1e-10


@SETTINGS
@given(contexts(), st.data())
def test_plugin_matrices_psd(ctx, data):
    a = points(ctx, data.draw, 1)[0]
    if np.all(np.linalg.norm(ctx.measure.atoms - a, axis=1) == 0):
        return
    for M in (estimate_H(ctx, a), estimate_V(ctx, a)):
        np.testing.assert_array_equal(M, M.T)
        assert np.linalg.eigvalsh(M)[0] >= -1e-12 * max(1.0, np.abs(M).max())


@settings(max_examples=60, deadline=None, derandomize=True)
@given(contexts(max_dim=3), st.floats(0.1, 10), arrays(float, 3, elements=finite))
def test_equivariance(ctx, c, shift):
    shift = shift[:ctx.dim]
    cfg = SolverConfig(grad_tol=1e-11, keep_trace=False)
    base = solve(ctx, cfg)
    moved = solve(ObjectiveContext(ctx.measure.scaled(c).shifted(shift), ctx.ell), cfg)
    # compare objective values; minimisers need not be unique
    lifted = ObjectiveContext(ctx.measure.scaled(c).shifted(shift), ctx.ell)
    target = phi(lifted, c * base.alpha_hat + shift)
    tol = moved.epsilon_certified + c * base.epsilon_certified + 1e-9 * (1 + abs(target))
    assert abs(moved.value - target) <= tol


@settings(max_examples=60, deadline=None, derandomize=True)
@given(contexts(max_dim=3))
def test_certificate_and_determinism(ctx):
    a = solve(ctx, SolverConfig(keep_trace=True))
    b = solve(ctx, SolverConfig(keep_trace=True))
    np.testing.assert_array_equal(a.alpha_hat, b.alpha_hat)
    vals = np.array([t[1] for t in a.trace])
    assert np.all(np.diff(vals) <= 1e-12 * (1 + np.abs(vals[:-1])))
    # the certificate bounds the gap to any point of a random probe cloud
    rng = np.random.default_rng(0)
    probes = rng.uniform(-a.radius, a.radius, size=(2000, ctx.dim))
    assert a.value - phi_many(ctx, probes).min() <= a.epsilon_certified + 1e-12 * (1 + abs(a.value))
