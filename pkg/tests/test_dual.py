"""Clarke-dual pipeline: critical points, reconstruction, systole results."""

from __future__ import annotations

import numpy as np
import pytest

from systola import (
    FourierLoop,
    InconsistencyError,
    build_hamiltonian,
    check_dual_inequality,
    dual_action_eval,
    ellipsoid,
    find_critical_points,
    reconstruct_orbit,
    reduced_eval,
    systole,
    tail_minimizer,
)

SQRT2 = np.sqrt(2.0)


@pytest.fixture(scope="module")
def e12_ham():
    return build_hamiltonian(ellipsoid([1.0, SQRT2]), 1.2, {"type": "core"})


@pytest.fixture(scope="module")
def e12_crits(e12_ham):
    return sorted(
        find_critical_points(e12_ham, K_tail=16, head_n=4, n_sobol=6, seed=0),
        key=lambda c: c.value,
    )


def test_critical_points_of_core_hamiltonian(e12_ham, e12_crits):
    # Below the slope 1.2 the only critical loops are the constant at the
    # profile core and the (phase-degenerate) short circle family.
    assert len(e12_crits) == 2
    z0, gamma = e12_crits
    assert z0.constant and z0.index == 0
    assert z0.value == pytest.approx(0.027198435, abs=1e-6)
    assert not gamma.constant
    assert (gamma.index, gamma.nullity) == (1, 1)
    assert gamma.value == pytest.approx(1.037206967, abs=1e-6)


def test_critical_value_is_profile_legendre_transform(e12_ham, e12_crits):
    # At a circle critical point on the level s with Reeb action A the dual
    # action equals s k'(s) - k(s) with k'(s) = A.
    gamma = e12_crits[-1]
    rec = reconstruct_orbit(e12_ham, gamma.loop)
    s, A = rec["level"], rec["reeb_action"]
    assert e12_ham.profile.dk(s) == pytest.approx(A, abs=1e-8)
    assert gamma.value == pytest.approx(s * A - e12_ham.profile.k(s), abs=1e-8)


def test_reconstruct_orbit_reproduces_short_circle(e12_ham, e12_crits):
    rec = reconstruct_orbit(e12_ham, e12_crits[-1].loop)
    assert rec["reeb_action"] == pytest.approx(1.0, abs=1e-8)
    assert rec["multiplicity"] == 1
    assert rec["residual"] < 1e-6
    assert rec["level_spread"] < 1e-8
    pts = rec["points"]
    g = e12_ham.body.gauge(pts)[0]
    assert np.allclose(g, rec["level"], rtol=1e-7)
    # The orbit lives in the first coordinate plane.
    assert np.max(np.abs(pts[:, 2:])) < 1e-6


def test_split_hamiltonian_breaks_circle_into_two(e12_ham):
    tt = np.arange(256) / 256.0
    r = 1.0 / np.sqrt(np.pi)
    circle = np.zeros((256, 4))
    circle[:, 0] = r * np.cos(2 * np.pi * tt)
    circle[:, 1] = r * np.sin(2 * np.pi * tt)
    ham = build_hamiltonian(
        ellipsoid([1.0, SQRT2]),
        1.2,
        {"type": "orbit-splitting", "points": circle, "eps": 1e-3},
    )
    crits = sorted(
        find_critical_points(ham, K_tail=16, head_n=4, n_sobol=6, seed=0),
        key=lambda c: c.value,
    )
    assert [c.index for c in crits] == [0, 1, 2]
    assert all(c.nullity == 0 for c in crits)
    values = [c.value for c in crits]
    assert values[0] == pytest.approx(0.027198435, abs=1e-6)
    assert values[1] == pytest.approx(1.036502451, abs=1e-6)
    assert values[2] == pytest.approx(1.037911545, abs=1e-6)
    # The splitting moves the two survivors O(eps) to both sides of the
    # unperturbed circle value.
    assert values[1] < 1.037206967 < values[2]


def test_tail_minimizer_zeroes_tail_gradient(e12_ham):
    rng = np.random.default_rng(2)
    loop = FourierLoop.zeros(12, 2)
    head = 0.4 * rng.normal(size=(2, 4))
    loop.coef[loop.K + 1 : loop.K + 3] = head[:, ::2] + 1j * head[:, 1::2]
    out, ev = tail_minimizer(e12_ham, loop, head_n=2)
    ev0 = dual_action_eval(e12_ham, loop, M=8 * loop.K)
    assert ev.value <= ev0.value + 1e-12
    # Head modes are untouched by the fiber minimization.
    assert np.allclose(out.coef[out.K + 1 : out.K + 3], loop.coef[loop.K + 1 : loop.K + 3])


def test_reduced_gradient_matches_finite_differences(e12_ham):
    rng = np.random.default_rng(7)
    head_n, K_tail = 2, 12
    x = 0.3 * rng.normal(size=head_n * 4)
    val, grad, info = reduced_eval(e12_ham, x, head_n, K_tail)
    h = 1e-5
    for i in (0, 3, 5):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        vp = reduced_eval(e12_ham, xp, head_n, K_tail)[0]
        vm = reduced_eval(e12_ham, xm, head_n, K_tail)[0]
        assert (vp - vm) / (2 * h) == pytest.approx(grad[i], rel=1e-4, abs=1e-7)


def test_dual_inequality_random_loops(e12_ham, e12_crits):
    rng = np.random.default_rng(13)
    for _ in range(20):
        beta = FourierLoop.zeros(6, 2)
        beta.coef += 0.3 * (rng.normal(size=beta.coef.shape) + 1j * rng.normal(size=beta.coef.shape))
        beta.coef[beta.K] = 0.0
        out = check_dual_inequality(e12_ham, beta)
        assert out["slack"] >= -1e-9
    # Equality at a critical loop with its reconstructed mean.
    gamma = e12_crits[-1]
    rec = reconstruct_orbit(e12_ham, gamma.loop)
    out = check_dual_inequality(e12_ham, gamma.loop, beta_mean=rec["mean"])
    assert abs(out["slack"]) < 1e-6


def test_systole_of_ellipsoid_cross_validates():
    res = systole(ellipsoid([1.0, SQRT2]), seed=0)
    assert res["systole"] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(res["shooting_spectrum"][:3], [1.0, SQRT2, 2.0], atol=1e-8)
    assert res["worst_delta"] < 1e-7
    assert res["degenerate_orbits"] == []
    for key in ("dual_spectrum", "time_total", "regularized_rho"):
        assert key in res
    # Dual values match shooting actions one for one.
    for a in res["dual_spectrum"]:
        assert np.min(np.abs(np.asarray(res["shooting_spectrum"]) - a)) < 1e-7


def test_inconsistency_error_is_runtime_error():
    assert issubclass(InconsistencyError, RuntimeError)
