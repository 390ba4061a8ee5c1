"""Conley-Zehnder indices: winding and rotation methods against closed forms."""

from __future__ import annotations

import numpy as np
import pytest

from systola import (
    AsymptoticOperator,
    conley_zehnder,
    conley_zehnder_rotation,
    ellipsoid,
    find_closed_orbits,
    fredholm_indices,
    hamiltonian_linearization,
    build_hamiltonian,
    operator_spectrum,
    transverse_linearization,
)

SQRT2 = np.sqrt(2.0)


def constant_op(c: float, M: int = 64) -> AsymptoticOperator:
    return AsymptoticOperator(S_grid=np.tile(2 * np.pi * c * np.eye(2), (M, 1, 1)))


@pytest.mark.parametrize("c, expected", [(0.3, 1), (1.4, 3), (2.7, 5)])
def test_constant_potential_index_closed_form(c, expected):
    # For S = 2 pi c Id on rank one, solutions rotate by angle 2 pi c over
    # one period and cz = 2 floor(c) + 1.
    op = constant_op(c)
    cz, kernel = conley_zehnder(op)
    assert (cz, kernel) == (expected, 0)
    assert conley_zehnder_rotation(op) == expected


def test_constant_potential_spectrum_is_shifted_lattice():
    # Eigenvalues of -J0 d/dt - 2 pi c are 2 pi (k - c), doubly degenerate,
    # and the eigenfunction with eigenvalue 2 pi (k - c) winds k times.
    c = 1.4
    spec = operator_spectrum(constant_op(c), K=8)
    ev = spec.eigenvalues
    near = ev[np.abs(ev) < 4 * np.pi]
    ks = near / (2 * np.pi) + c
    assert np.allclose(ks, np.round(ks), atol=1e-9)
    assert np.allclose(np.sort(ks), [0, 0, 1, 1, 2, 2, 3, 3], atol=1e-9)
    for e, w in zip(spec.eigenvalues, spec.windings):
        if abs(e) < 4 * np.pi:
            assert w == round(e / (2 * np.pi) + c)


def test_integer_potential_is_degenerate():
    cz, kernel = conley_zehnder(constant_op(1.0))
    assert kernel == 2
    assert cz == 2


def test_winding_index_requires_rank_one():
    S = np.tile(np.eye(4), (32, 1, 1))
    op = AsymptoticOperator(S_grid=S)
    with pytest.raises(ValueError):
        conley_zehnder(op)


def test_asymmetric_potential_rejected():
    S = np.tile(np.array([[0.0, 1.0], [0.0, 0.0]]), (16, 1, 1))
    with pytest.raises(ValueError):
        AsymptoticOperator(S_grid=S)


def test_ellipsoid_orbit_indices():
    # E(1, sqrt2): the short circle, the long circle and the double cover
    # of the short one carry cz = 3, 5, 7 (2(k + floor(k a/b)) + 1).
    body = ellipsoid([1.0, SQRT2])
    orbits = sorted(
        find_closed_orbits(body, action_max=2.2, n_seeds=24, seed=0),
        key=lambda o: o.action,
    )
    expected = [3, 5, 7]
    for o, e in zip(orbits, expected):
        op = transverse_linearization(body, o)
        cz, kernel = conley_zehnder(op)
        assert (cz, kernel) == (e, 0)
        assert conley_zehnder_rotation(op) == e


def test_rotation_and_winding_agree_on_random_rank_one():
    rng = np.random.default_rng(11)
    M = 48
    t = np.arange(M) / M
    agree = 0
    for _ in range(12):
        a0 = rng.uniform(0.5, 6.0)
        a1 = rng.normal(scale=0.8, size=3)
        f = a0 + a1[0] * np.cos(2 * np.pi * t) + a1[1] * np.sin(2 * np.pi * t)
        g = a1[2] * np.sin(4 * np.pi * t)
        S = np.zeros((M, 2, 2))
        S[:, 0, 0] = f + g
        S[:, 1, 1] = f - g
        op = AsymptoticOperator(S_grid=S)
        spec = operator_spectrum(op, K=20)
        if np.min(np.abs(spec.eigenvalues)) < 1e-6:
            continue  # skip accidental degeneracies
        if conley_zehnder(spec)[0] == conley_zehnder_rotation(op):
            agree += 1
        else:
            raise AssertionError("winding and rotation methods disagree")
    assert agree >= 8


def test_index_parity_matches_monodromy_sign():
    # sign det(I - M) = (-1)^(cz - n) for nondegenerate orbits; here the
    # transverse rank is 1.
    body = ellipsoid([1.0, SQRT2])
    for o in find_closed_orbits(body, action_max=2.2, n_seeds=24, seed=0):
        mult = o.transverse_multipliers
        det = float(np.real((1 - mult[0]) * (1 - mult[1])))
        cz, _ = conley_zehnder(transverse_linearization(body, o))
        assert np.sign(det) == (-1) ** (cz - 1)


def test_hamiltonian_linearization_matches_hessian():
    ham = build_hamiltonian(ellipsoid([1.0, SQRT2]), 1.2, {"type": "core"})
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(32, 4))
    op = hamiltonian_linearization(ham, pts)
    assert op.rank == 2
    tgrid = np.arange(32) / 32
    assert np.allclose(op.S_grid, ham.hess(tgrid, pts), atol=1e-12)


def test_fredholm_index_arithmetic():
    # Punctured-curve index (n - 3) chi + 2 c1 + sum cz+ - sum cz-.
    assert fredholm_indices("curve", {"n": 2, "chi": 1, "cz_positive": [3]}) == 2
    assert (
        fredholm_indices("curve", {"n": 2, "chi": 0, "cz_positive": [3], "cz_negative": [3]})
        == 0
    )
    assert fredholm_indices("curve", {"n": 2, "chi": 2, "c1": 2}) == 2
    assert (
        fredholm_indices(
            "weighted-operator", {"n": 1, "chi": 0, "cz_positive": [2], "cz_negative": [1]}
        )
        == 1
    )
    with pytest.raises(ValueError):
        fredholm_indices("donut", {"n": 2, "chi": 0})


def test_resampling_is_trigonometric():
    # Upsampled S agrees with the closed form of its band-limited samples.
    M = 16
    t = np.arange(M) / M
    S = np.zeros((M, 2, 2))
    S[:, 0, 0] = 1.0 + np.cos(2 * np.pi * t)
    S[:, 1, 1] = 1.0 - np.sin(4 * np.pi * t)
    op = AsymptoticOperator(S_grid=S)
    up = op.resampled(64)
    tf = np.arange(64) / 64
    assert np.allclose(up[:, 0, 0], 1.0 + np.cos(2 * np.pi * tf), atol=1e-12)
    assert np.allclose(up[:, 1, 1], 1.0 - np.sin(4 * np.pi * tf), atol=1e-12)
