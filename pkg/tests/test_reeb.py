"""Shooting oracle: closed orbits, Floquet data, flow invariants."""

from __future__ import annotations

import numpy as np
import pytest

from systola import (
    ball,
    ellipsoid,
    find_closed_orbits,
    flow_with_variations,
    orbit_data,
)
from systola.reeb import reeb_field
from systola.symplectic import apply_j

SQRT2 = np.sqrt(2.0)


@pytest.fixture(scope="module")
def e12_orbits():
    return find_closed_orbits(ellipsoid([1.0, SQRT2]), action_max=2.2, n_seeds=24, seed=0)


def test_ellipsoid_action_spectrum(e12_orbits):
    # E(1, sqrt2) has exactly the actions {1, sqrt2, 2} below 2.2: the two
    # coordinate circles and the double cover of the short one.
    actions = sorted(o.action for o in e12_orbits)
    assert np.allclose(actions, [1.0, SQRT2, 2.0], atol=1e-9)
    mults = {round(o.action, 6): o.multiplicity for o in e12_orbits}
    assert mults[1.0] == 1
    assert mults[2.0] == 2
    assert not any(o.degenerate for o in e12_orbits)
    assert all(o.closure_error < 1e-8 for o in e12_orbits)


def test_ellipsoid_floquet_multipliers(e12_orbits):
    # The transverse multipliers of a circle orbit of E(a1, a2) are
    # exp(+-2 pi i a_self / a_other), doubled for the double cover.
    by_action = {round(o.action, 6): o for o in e12_orbits}
    cases = [
        (1.0, 2 * np.pi / SQRT2),
        (round(SQRT2, 6), 2 * np.pi * SQRT2),
        (2.0, 2 * np.pi * 2.0 / SQRT2),
    ]
    for action, angle in cases:
        tm = by_action[action].transverse_multipliers
        expected = np.exp(1j * angle)
        assert np.allclose(np.abs(tm), 1.0, atol=1e-7)
        assert np.allclose(sorted(tm.real), [expected.real] * 2, atol=1e-7)
        assert np.allclose(sorted(np.abs(tm.imag)), [abs(expected.imag)] * 2, atol=1e-7)


def test_orbit_period_equals_action_line_integral(e12_orbits):
    body = ellipsoid([1.0, SQRT2])
    for o in e12_orbits:
        d = orbit_data(body, o)
        assert d["action_defect"] < 1e-7
        assert d["monodromy_symplecticity"] < 1e-8
        assert d["period"] == pytest.approx(d["action"], abs=1e-10)


def test_ball_family_is_degenerate():
    orbs = find_closed_orbits(ball(1.0), action_max=1.6, n_seeds=12, seed=1)
    assert len(orbs) > 0
    assert all(o.degenerate for o in orbs)
    assert np.allclose([o.action for o in orbs], 1.0, atol=1e-9)


def test_reeb_field_is_rotational_on_ellipsoid():
    body = ellipsoid([1.0, SQRT2])
    rng = np.random.default_rng(3)
    z = rng.normal(size=(6, 4))
    R = reeb_field(body, z)
    assert np.allclose(R, apply_j(body.gauge(z)[1]), atol=0)
    # R is omega-dual to dG: <R, grad G> = 0, so the flow preserves levels.
    assert np.allclose(np.sum(R * body.gauge(z)[1], axis=-1), 0.0, atol=1e-12)


def test_flow_preserves_gauge_and_monodromy_is_symplectic():
    body = ellipsoid([1.0, SQRT2])
    z0 = np.array([1.0 / np.sqrt(np.pi), 0.0, 0.0, 0.0])
    fr = flow_with_variations(body, z0, 1.0)
    tau = np.linspace(0.0, 1.0, 97)
    pts = fr.sample(tau)
    assert np.allclose(body.gauge(pts)[0], 1.0, atol=1e-9)
    # Period of the first coordinate circle is a1 = 1: the flow closes up.
    assert np.allclose(pts[-1], z0, atol=1e-9)
    M = fr.monodromy
    J = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    assert np.linalg.norm(M.T @ J @ M - J) < 1e-9
