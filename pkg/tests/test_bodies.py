"""Gauge evaluators: closed forms, derivatives, convexity, spec roundtrips."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systola import (
    ball,
    body_from_spec,
    ellipsoid,
    gauge_eval,
    perturbed_ellipsoid,
    regularized,
    smoothed_polydisk,
)

RNG = np.random.default_rng(20240811)


def fd_gradient(f, z, h=1e-6):
    g = np.zeros_like(z)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2 * h)
    return g


def fd_hessian(f, z, h=1e-4):
    d = z.size
    H = np.zeros((d, d))
    e = np.eye(d)
    for i in range(d):
        for j in range(d):
            H[i, j] = (
                f(z + h * e[i] + h * e[j])
                - f(z + h * e[i] - h * e[j])
                - f(z - h * e[i] + h * e[j])
                + f(z - h * e[i] - h * e[j])
            ) / (4 * h * h)
    return H


ALL_BODIES = [
    ellipsoid([1.0, np.sqrt(2.0)]),
    ellipsoid([0.8, 1.3, 2.1]),
    ball(1.5),
    smoothed_polydisk(1.0, 1.5, epsilon=0.05),
    perturbed_ellipsoid([1.0, 1.3], delta=0.04, bump_width=0.5),
    regularized(smoothed_polydisk(1.0, 1.2, epsilon=0.03), 1e-3),
]


def test_ellipsoid_gauge_closed_form():
    a = np.array([1.0, np.sqrt(2.0)])
    body = ellipsoid(a)
    z = RNG.normal(size=(7, 4))
    val, grad, hess = body.gauge(z)
    x = z.reshape(7, 2, 2)
    expected = np.pi * np.sum(np.sum(x * x, axis=-1) / a, axis=-1)
    assert np.allclose(val, expected, rtol=1e-14, atol=0)
    D = np.diag(2 * np.pi / np.repeat(a, 2))
    assert np.allclose(grad, z @ D, rtol=1e-14, atol=0)
    assert np.allclose(hess, D, rtol=1e-14, atol=0)


def test_ball_is_round_ellipsoid():
    z = RNG.normal(size=(5, 4))
    vb = ball(1.5, n=2).gauge(z)[0]
    ve = ellipsoid([1.5, 1.5]).gauge(z)[0]
    assert np.allclose(vb, ve, rtol=1e-15, atol=0)


@pytest.mark.parametrize("body", ALL_BODIES, ids=lambda b: b.name)
def test_gauge_derivatives_match_finite_differences(body):
    d = 2 * body.dim_n
    z = RNG.normal(size=d)
    z /= np.linalg.norm(z) * 0.7

    def f(p):
        return float(body.gauge(p[None, :])[0][0])

    val, grad, hess = body.gauge(z[None, :])
    assert np.allclose(grad[0], fd_gradient(f, z), rtol=1e-5, atol=1e-7)
    assert np.allclose(hess[0], fd_hessian(f, z), rtol=1e-3, atol=1e-4)
    assert np.allclose(hess[0], hess[0].T, atol=1e-12)


@pytest.mark.parametrize("body", ALL_BODIES, ids=lambda b: b.name)
def test_gauge_quadratic_homogeneity(body):
    d = 2 * body.dim_n
    z = RNG.normal(size=(6, d))
    for t in (0.3, 2.5):
        v1 = body.gauge(t * z)[0]
        v0 = body.gauge(z)[0]
        assert np.allclose(v1, t * t * v0, rtol=1e-12)
    # Euler identities for degree-2 homogeneity.
    val, grad, hess = body.gauge(z)
    assert np.allclose(np.sum(z * grad, axis=-1), 2 * val, rtol=1e-10)
    assert np.allclose(np.einsum("...ij,...j->...i", hess, z), grad, rtol=1e-8, atol=1e-10)


def test_polydisk_gauge_between_factor_bounds():
    # The smoothed gauge is sandwiched between max of the factor gauges and
    # their sum (soft-max smoothing of the polydisk).
    body = smoothed_polydisk(1.0, 1.5, epsilon=0.02)
    z = RNG.normal(size=(64, 4))
    g1 = np.pi * np.sum(z[:, :2] ** 2, axis=-1) / 1.0
    g2 = np.pi * np.sum(z[:, 2:] ** 2, axis=-1) / 1.5
    val = body.gauge(z)[0]
    assert np.all(val >= np.maximum(g1, g2) - 1e-12)
    assert np.all(val <= g1 + g2 + 1e-12)
    assert not body.uniformly_convex


def test_perturbed_ellipsoid_zero_delta_matches_ellipsoid():
    pe = perturbed_ellipsoid([1.0, 1.3], delta=0.0, bump_width=0.5)
    el = ellipsoid([1.0, 1.3])
    z = RNG.normal(size=(16, 4))
    assert np.allclose(pe.gauge(z)[0], el.gauge(z)[0], rtol=1e-12)


def test_regularized_blends_toward_round_gauge():
    base = smoothed_polydisk(1.0, 1.5, epsilon=0.02)
    reg = regularized(base, 1e-2)
    assert reg.uniformly_convex
    z = RNG.normal(size=(32, 4))
    v_base = base.gauge(z)[0]
    v_reg = reg.gauge(z)[0]
    # O(rho) change, nonzero but small.
    assert np.all(np.abs(v_reg - v_base) <= 0.2 * np.abs(v_base))
    assert np.max(np.abs(v_reg - v_base)) > 0
    # Hessian gains a strict lower bound.
    H = reg.gauge(z)[2]
    assert np.min(np.linalg.eigvalsh(H)) > 0


@pytest.mark.parametrize("body", ALL_BODIES, ids=lambda b: b.name)
def test_spec_roundtrip(body):
    clone = body_from_spec(body.spec)
    z = RNG.normal(size=(8, 2 * body.dim_n))
    assert clone.dim_n == body.dim_n
    assert np.allclose(clone.gauge(z)[0], body.gauge(z)[0], rtol=1e-14)


def test_gauge_eval_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        gauge_eval(ellipsoid([1.0, 2.0]), np.zeros(6))


def test_body_from_spec_rejects_unknown_type():
    with pytest.raises((KeyError, ValueError)):
        body_from_spec({"type": "dodecahedron"})


@settings(max_examples=25, deadline=None)
@given(
    t=st.floats(min_value=0.05, max_value=0.95),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_gauge_convex_along_segments(t, seed):
    body = smoothed_polydisk(1.0, 1.5, epsilon=0.05)
    rng = np.random.default_rng(seed)
    z0, z1 = rng.normal(size=(2, 4))
    vt = body.gauge((1 - t) * z0 + t * z1)[0]
    bound = (1 - t) * body.gauge(z0)[0] + t * body.gauge(z1)[0]
    assert vt <= bound + 1e-10 * (1 + abs(bound))
