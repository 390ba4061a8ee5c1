"""Profiles, profiled Hamiltonians, and the batched Legendre transform."""

from __future__ import annotations

import numpy as np
import pytest

from systola import (
    ConvexProfile,
    CorePatchedProfile,
    LinearProfile,
    TimeHamiltonian,
    build_hamiltonian,
    direct_action,
    ellipsoid,
    fenchel_eval,
    hamiltonian_field,
    smoothed_polydisk,
)

RNG = np.random.default_rng(20240812)


def test_ramp_profile_shape():
    prof = ConvexProfile(eta=1.2, r0=0.3, r1=2.0)
    assert prof.k(0.0) == 0.0
    assert prof.k(0.29) == 0.0
    assert prof.dk(0.3) == 0.0
    assert prof.dk(2.0) == pytest.approx(1.2, abs=1e-15)
    assert prof.dk(5.0) == pytest.approx(1.2, abs=1e-15)
    # C^1 match of the affine continuation at r1.
    h = 1e-7
    assert prof.k(2.0 + h) - prof.k(2.0 - h) == pytest.approx(2 * h * 1.2, rel=1e-6)
    s = np.linspace(0.0, 3.0, 301)
    assert np.all(prof.d2k(s) >= 0)
    assert np.all(np.diff(prof.dk(s)) >= -1e-15)


def test_ramp_profile_level_inverts_slope():
    prof = ConvexProfile(eta=1.2)
    for action in (0.1, 0.7, 1.1):
        s = prof.level_for_action(action)
        assert prof.dk(s) == pytest.approx(action, abs=1e-12)
    with pytest.raises(ValueError):
        prof.level_for_action(1.2)


def test_ramp_profile_derivatives_consistent():
    prof = ConvexProfile(eta=0.9, r0=0.2, r1=1.7)
    s = np.linspace(0.01, 2.5, 37)
    h = 1e-6
    fd1 = (prof.k(s + h) - prof.k(s - h)) / (2 * h)
    fd2 = (prof.dk(s + h) - prof.dk(s - h)) / (2 * h)
    assert np.allclose(fd1, prof.dk(s), atol=1e-9)
    assert np.allclose(fd2, prof.d2k(s), atol=1e-5)


def test_core_patch_is_convex_and_matches_ramp_beyond_patch():
    base = ConvexProfile(eta=1.2)
    prof = CorePatchedProfile(base=base)
    s = np.linspace(0.0, 3.0, 601)
    dk = prof.dk(s)
    assert dk[0] > 0  # strictly increasing from the origin
    assert np.all(np.diff(dk) >= -1e-12)
    # Untouched beyond the patch: same slope and curvature at large levels.
    far = np.array([2.0, 2.5, 3.0])
    assert np.allclose(prof.dk(far), base.dk(far), atol=1e-12)
    assert np.allclose(prof.d2k(far), base.d2k(far), atol=1e-12)
    h = 1e-6
    fd1 = (prof.k(s[1:-1] + h) - prof.k(s[1:-1] - h)) / (2 * h)
    assert np.allclose(fd1, prof.dk(s[1:-1]), atol=1e-8)


def test_linear_profile_fenchel_closed_form():
    # H = slope * G on an ellipsoid is the quadratic z' Q z with
    # Q = pi * slope * diag(1/a), so H*(w) = w' inv(Q) w / 4.
    a = np.array([1.0, 1.7])
    slope = 0.8
    ham = TimeHamiltonian(body=ellipsoid(a), profile=LinearProfile(slope=slope))
    q = np.pi * slope / np.repeat(a, 2)
    w = RNG.normal(size=(32, 4))
    val, zstar, hess = fenchel_eval(ham, np.zeros(32), w)
    assert np.allclose(val, np.sum(w * w / q, axis=-1) / 4, rtol=1e-9)
    assert np.allclose(zstar, w / (2 * q), rtol=1e-8)
    assert np.allclose(hess, np.diag(2 * q), rtol=1e-9)


def test_fenchel_young_equality_and_gradient():
    ham = build_hamiltonian(ellipsoid([1.0, np.sqrt(2.0)]), 1.2, {"type": "core"})
    w = RNG.normal(size=(24, 4)) * 1.5
    t = RNG.uniform(size=24)
    val, zstar, hess = fenchel_eval(ham, t, w)
    hval, hgrad, hhess = ham.eval(t, zstar)
    # grad H(z*) = w and H*(w) = <z*, w> - H(z*).
    assert np.allclose(hgrad, w, atol=1e-9)
    assert np.allclose(val, np.sum(zstar * w, axis=-1) - hval, atol=1e-12)
    assert np.allclose(hess, hhess, atol=1e-12)
    # Envelope identity dH*/dw = z*, by central differences in w.
    k, h = 7, 1e-6
    for i in range(4):
        wp, wm = w[k].copy(), w[k].copy()
        wp[i] += h
        wm[i] -= h
        vp = fenchel_eval(ham, t[k], wp)[0]
        vm = fenchel_eval(ham, t[k], wm)[0]
        assert (vp - vm) / (2 * h) == pytest.approx(zstar[k, i], abs=1e-6)


def test_fenchel_warm_start_agrees_with_cold():
    ham = build_hamiltonian(smoothed_polydisk(1.0, 1.5, epsilon=0.05), 2.0, {"type": "core"})
    w = RNG.normal(size=(16, 4)) * 2.0
    t = np.zeros(16)
    val_c, z_c, _ = fenchel_eval(ham, t, w)
    val_w, z_w, _ = fenchel_eval(ham, t, w, z0=z_c + 0.05 * RNG.normal(size=z_c.shape))
    assert np.allclose(val_w, val_c, rtol=1e-8)
    assert np.allclose(z_w, z_c, atol=1e-6)


def test_direct_action_of_circular_orbit():
    # On the level {G = s} of E(a), the first coordinate circle traversed
    # once has loop action s * a1, so A_H = s a1 - k(s).
    a = [1.0, np.sqrt(2.0)]
    ham = build_hamiltonian(ellipsoid(a), 1.2, {"type": "core"})
    s = ham.profile.level_for_action(0.9)
    r = np.sqrt(s * a[0] / np.pi)
    tt = np.arange(256) / 256.0
    pts = np.zeros((256, 4))
    pts[:, 0] = r * np.cos(2 * np.pi * tt)
    pts[:, 1] = r * np.sin(2 * np.pi * tt)
    expected = s * a[0] - ham.profile.k(s)
    assert direct_action(ham, pts) == pytest.approx(expected, abs=1e-12)


def test_hamiltonian_field_rotates_circles():
    # X_H = J0 grad H; for H = slope * G on an ellipsoid each factor plane
    # rotates at rate 2 pi slope / a_j.
    a = np.array([1.0, 1.7])
    slope = 0.8
    ham = TimeHamiltonian(body=ellipsoid(a), profile=LinearProfile(slope=slope))
    z = RNG.normal(size=(8, 4))
    X = hamiltonian_field(ham, np.zeros(8), z)
    rate = 2 * np.pi * slope / np.repeat(a, 2)
    expected = np.stack(
        [-rate[0] * z[:, 1], rate[0] * z[:, 0], -rate[2] * z[:, 3], rate[2] * z[:, 2]],
        axis=-1,
    )
    assert np.allclose(X, expected, rtol=1e-12)


def test_split_perturbation_is_local_and_time_dependent():
    body = ellipsoid([1.0, np.sqrt(2.0)])
    tt = np.arange(256) / 256.0
    r = 1.0 / np.sqrt(np.pi)
    circle = np.zeros((256, 4))
    circle[:, 0] = r * np.cos(2 * np.pi * tt)
    circle[:, 1] = r * np.sin(2 * np.pi * tt)
    ham = build_hamiltonian(
        body, 1.2, {"type": "orbit-splitting", "points": circle, "eps": 1e-3}
    )
    assert ham.time_dependent
    # Far from the splitting tube the perturbation vanishes identically.
    far = RNG.normal(size=(16, 4)) * 3.0
    assert np.allclose(ham.value(0.0, far), ham.value(0.37, far), atol=1e-15)
    # On the tube circle itself the Hamiltonian genuinely depends on t.
    p = ham.perturbation
    th = 2 * np.pi * tt
    tube = p.center + p.radius * (
        np.cos(th)[:, None] * p.u1 + np.sin(th)[:, None] * p.u2
    )
    v0 = ham.value(np.zeros(256), tube)
    v1 = ham.value(np.full(256, 0.25), tube)
    assert np.max(np.abs(v0 - v1)) > 1e-6 * p.eps


def test_autonomous_hamiltonian_ignores_time():
    ham = build_hamiltonian(ellipsoid([1.0, 1.3]), 1.1, {"type": "core"})
    z = RNG.normal(size=(8, 4))
    assert np.allclose(ham.value(0.0, z), ham.value(0.9, z), atol=0)
    assert not ham.time_dependent
