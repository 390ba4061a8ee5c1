"""Shooting oracle for closed characteristics on a convex boundary.

The Reeb field of the restriction of lambda0 = (1/2)(x dy - y dx) to the
boundary {G = 1} of a convex body is R = J0 grad G, normalized so that the
period of a closed orbit equals its action integral of lambda0.  The flow is
integrated with an embedded Dormand-Prince 5(4) pair with a PI step-size
controller; accepted states are projected radially back onto the level set,
while the variational factor is propagated without projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .bodies import ConvexBody
from .symplectic import apply_j, liouville

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def reeb_field(body: ConvexBody, z: np.ndarray) -> np.ndarray:
    """Reeb field R = J0 grad G at points of shape (..., 2n)."""
    _, grad, _ = body.gauge(np.asarray(z, dtype=float))
    return apply_j(grad)


def _dopri5(f, y0, t_end, rtol, atol, err_dim=None, project=None, record=False):
    """Integrate y' = f(t, y) for batched states y of shape (B, D).

    The step is accepted when the RMS of the embedded error estimate over
    the first ``err_dim`` components (scaled by atol + rtol max(|y|, |y1|))
    is below one for every batch row; the PI controller then adjusts h.
    ``project`` is applied to accepted states.  With ``record`` the full
    step history (times, states, derivatives) is returned for dense output.
    """
    y = np.array(y0, dtype=float)
    if err_dim is None:
        err_dim = y.shape[-1]
    t = 0.0
    h = min(1e-2, 0.1 * t_end) if t_end > 0 else 0.0
    k1 = f(t, y)
    ts, ys, fs = [0.0], [y.copy()], [k1.copy()]
    err_prev = 1.0
    nsteps = 0
    while t < t_end:
        h = min(h, t_end - t)
        k = [k1]
        for i in range(1, 7):
            yi = y + h * np.tensordot(_A[i], np.array(k), axes=(0, 0))
            k.append(f(t + _C[i] * h, yi))
        karr = np.array(k)
        y1 = y + h * np.tensordot(_B5, karr, axes=(0, 0))
        err = h * np.tensordot(_B5 - _B4, karr, axes=(0, 0))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
        e = err[..., :err_dim] / scale[..., :err_dim]
        err_norm = float(np.max(np.sqrt(np.mean(e * e, axis=-1))))
        nsteps += 1
        if nsteps > 1_000_000:
            raise RuntimeError("step limit exceeded in flow integration")
        if err_norm <= 1.0:
            t += h
            y = y1 if project is None else project(y1)
            k1 = f(t, y)
            if record:
                ts.append(t)
                ys.append(y.copy())
                fs.append(k1.copy())
            fac = 0.9 * max(err_norm, 1e-10) ** -0.14 * err_prev**0.08
            err_prev = max(err_norm, 1e-10)
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err_norm**-0.2)
            if h < 1e-14 * max(1.0, t_end):
                raise RuntimeError("step size underflow in flow integration")
    if record:
        return np.array(ts), np.array(ys), np.array(fs)
    return t, y


def _hermite_eval(t, t0, t1, y0, y1, f0, f1):
    """Cubic Hermite interpolation on [t0, t1]; t may broadcast over y0."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h01 * y1 + h * (h10 * f0 + h11 * f1)


@dataclass
class FlowResult:
    """Dense flow history of a single trajectory with its variational factor."""

    times: np.ndarray
    points: np.ndarray
    derivs: np.ndarray
    monodromy: np.ndarray

    @property
    def end_point(self) -> np.ndarray:
        return self.points[-1]

    def sample(self, tau: np.ndarray) -> np.ndarray:
        """Interpolate the trajectory at times tau in [0, T]."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        idx = np.clip(np.searchsorted(self.times, tau, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[idx], self.times[idx + 1]
        out = _hermite_eval(
            tau[:, None],
            t0[:, None],
            t1[:, None],
            self.points[idx],
            self.points[idx + 1],
            self.derivs[idx],
            self.derivs[idx + 1],
        )
        return out


def flow_with_variations(
    body: ConvexBody,
    z0: np.ndarray,
    T: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> FlowResult:
    """Flow z' = J0 grad G(z) together with Phi' = J0 hess G(z) Phi.

    The state is projected onto {G = 1} after each accepted step; the
    variational factor is propagated unprojected.  Error control acts on
    the point components.
    """
    z0 = np.asarray(z0, dtype=float)
    d = z0.size
    y0 = np.concatenate([z0, np.eye(d).ravel()])[None, :]

    def f(t, y):
        z = y[:, :d]
        Phi = y[:, d:].reshape(-1, d, d)
        _, grad, hess = body.gauge(z)
        dz = apply_j(grad)
        HP = np.einsum("bij,bjk->bik", hess, Phi)
        dPhi = np.empty_like(HP)
        dPhi[:, 0::2, :] = -HP[:, 1::2, :]
        dPhi[:, 1::2, :] = HP[:, 0::2, :]
        return np.concatenate([dz, dPhi.reshape(-1, d * d)], axis=1)

    def project(y):
        z = y[:, :d]
        val, _, _ = body.gauge(z)
        out = y.copy()
        out[:, :d] = z / np.sqrt(val)[:, None]
        return out

    ts, ys, fs = _dopri5(f, y0, T, rtol, atol, err_dim=d, project=project, record=True)
    return FlowResult(
        times=ts,
        points=ys[:, 0, :d],
        derivs=fs[:, 0, :d],
        monodromy=ys[-1, 0, d:].reshape(d, d),
    )


def _flow_points_batch(body, Z0, T, rtol=1e-10, atol=1e-12):
    """Dense batched point-only flow used for seeding; no variations."""

    def f(t, y):
        _, grad, _ = body.gauge(y)
        return apply_j(grad)

    def project(y):
        val, _, _ = body.gauge(y)
        return y / np.sqrt(val)[:, None]

    return _dopri5(f, Z0, T, rtol, atol, project=project, record=True)


@dataclass
class ClosedOrbit:
    """A closed Reeb orbit found by shooting.

    ``action`` equals the period in Reeb time; ``action_integral`` is the
    independent line integral of lambda0 over the resampled orbit and should
    match to integrator accuracy.
    """

    points: np.ndarray
    period: float
    action: float
    action_integral: float
    multiplicity: int
    monodromy: np.ndarray
    transverse_multipliers: np.ndarray
    degenerate: bool
    closure_error: float
    extras: dict = field(default_factory=dict)

    def resampled(self, M: int) -> np.ndarray:
        if self.points.shape[0] == M:
            return self.points
        idx = np.linspace(0, self.points.shape[0], M, endpoint=False)
        base = idx.astype(int)
        return self.points[base % self.points.shape[0]]


def _transverse_multipliers(body: ConvexBody, z0: np.ndarray, mono: np.ndarray):
    """Floquet multipliers of the monodromy transverse to the orbit cylinder.

    The flow direction and the radial direction are both fixed vectors of
    the monodromy (autonomy and homogeneity), so in any basis completing
    them the matrix is block triangular and the complementary eigenvalues
    are well defined.
    """
    d = z0.size
    X = reeb_field(body, z0)
    cols = [X / np.linalg.norm(X), z0 / np.linalg.norm(z0)]
    basis = list(cols)
    for e in np.eye(d):
        v = e.copy()
        for b in basis:
            v -= np.dot(v, b) * b
        if np.linalg.norm(v) > 1e-6:
            basis.append(v / np.linalg.norm(v))
        if len(basis) == d:
            break
    B = np.array(basis).T
    C = np.linalg.solve(B, mono @ B)
    return np.linalg.eigvals(C[2:, 2:])


def _refine_orbit(body, z_init, T_init, z_anchor, v_anchor, tol, t_floor, t_ceil):
    """Damped least-squares Newton on (z, T) for phi_T(z) = z.

    The system is augmented with the section condition <z - z_anchor,
    v_anchor> = 0 and the level condition G(z) = 1; least squares with a
    relative rcond absorbs the degenerate directions of orbit families.
    """
    d = z_init.size
    z, T = np.array(z_init, dtype=float), float(T_init)

    def residual(z, T):
        fr = flow_with_variations(body, z, T)
        gap = fr.end_point - z
        val, grad, _ = body.gauge(z)
        r = np.concatenate([gap, [np.dot(z - z_anchor, v_anchor)], [val - 1.0]])
        return r, fr, grad

    r, fr, grad = residual(z, T)
    for _ in range(30):
        gap_norm = np.linalg.norm(r[:d])
        if gap_norm < tol:
            return z, T, fr, gap_norm
        Xend = reeb_field(body, fr.end_point)
        J = np.zeros((d + 2, d + 1))
        J[:d, :d] = fr.monodromy - np.eye(d)
        J[:d, d] = Xend
        J[d, :d] = v_anchor
        J[d + 1, :d] = grad
        step, *_ = np.linalg.lstsq(J, -r, rcond=1e-10)
        base = np.linalg.norm(r)
        alpha = 1.0
        for _ in range(8):
            z_try = z + alpha * step[:d]
            T_try = float(np.clip(T + alpha * step[d], t_floor, t_ceil))
            r_try, fr_try, grad_try = residual(z_try, T_try)
            if np.linalg.norm(r_try) < (1.0 - 1e-4 * alpha) * base:
                break
            alpha *= 0.5
        else:
            return None
        z, T, r, fr, grad = z_try, T_try, r_try, fr_try, grad_try
    return None


def _hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=-1)
    return max(float(D.min(axis=1).max()), float(D.min(axis=0).max()))


def find_closed_orbits(
    body: ConvexBody,
    action_max: float,
    n_seeds: int = 24,
    seed: int = 0,
    tol: float = 1e-9,
    capture: float = 0.35,
    n_samples: int = 256,
    degeneracy_tol: float = 1e-4,
) -> list[ClosedOrbit]:
    """Search for closed Reeb orbits with action (= period) up to action_max.

    Seeds are scrambled Sobol directions projected to the boundary.  Each
    seed trajectory is scanned for positively oriented returns to the
    hyperplane section through the seed; returns landing within ``capture``
    of the seed (relative to the circumradius) start a Newton solve for an
    exact closed orbit.  Orbits are deduplicated by action and Hausdorff
    distance, so distinct members of a degenerate family are kept.
    """
    d = 2 * body.dim_n
    sob = qmc.Sobol(d=d, scramble=True, seed=seed)
    # Draw a power-of-two block (Sobol balance) and keep the first n_seeds.
    raw = sob.random(1 << max(0, (n_seeds - 1).bit_length()))[:n_seeds]
    from scipy.special import ndtri

    dirs = ndtri(np.clip(raw, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(dirs, axis=1)
    dirs = dirs / np.where(norms > 0, norms, 1.0)[:, None]
    gval, _, _ = body.gauge(dirs)
    seeds = dirs / np.sqrt(gval)[:, None]

    horizon = 1.05 * action_max
    ts, ys, fs = _flow_points_batch(body, seeds, horizon)
    r_capture = capture * body.circumradius_bound

    candidates = []
    for b in range(n_seeds):
        z0 = seeds[b]
        v0 = reeb_field(body, z0)
        v0 = v0 / np.linalg.norm(v0)
        g = (ys[:, b, :] - z0) @ v0
        dg = fs[:, b, :] @ v0
        for i in range(1, len(ts) - 1):
            if not (g[i] < 0.0 <= g[i + 1]):
                continue
            # Positive crossing of the section inside step [t_i, t_{i+1}].
            lo, hi = ts[i], ts[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                gm = (
                    _hermite_eval(mid, ts[i], ts[i + 1], ys[i, b], ys[i + 1, b], fs[i, b], fs[i + 1, b])
                    - z0
                ) @ v0
                if gm < 0:
                    lo = mid
                else:
                    hi = mid
            t_c = 0.5 * (lo + hi)
            z_c = _hermite_eval(t_c, ts[i], ts[i + 1], ys[i, b], ys[i + 1, b], fs[i, b], fs[i + 1, b])
            if dg[i + 1] <= 0 or np.linalg.norm(z_c - z0) > r_capture or t_c > horizon:
                continue
            gv, _, _ = body.gauge(z_c)
            candidates.append((z_c / np.sqrt(gv), t_c, z0, v0))

    orbits: list[ClosedOrbit] = []
    for z_c, t_c, z0, v0 in candidates:
        got = _refine_orbit(
            body, z_c, t_c, z0, v0, tol, t_floor=0.2 * t_c, t_ceil=1.3 * horizon
        )
        if got is None:
            continue
        z, T, fr, gap = got
        if T > horizon:
            continue

        multiplicity = 1
        for m in range(min(8, int(T / 0.05)), 1, -1):
            sub = flow_with_variations(body, z, T / m)
            if np.linalg.norm(sub.end_point - z) < 100 * tol:
                multiplicity = m
                break

        tau = np.linspace(0.0, T, n_samples, endpoint=False)
        pts = fr.sample(tau)
        vel = apply_j(body.gauge(pts)[1])
        a_int = float(np.mean(liouville(pts, vel)) * T)
        trans = _transverse_multipliers(body, z, fr.monodromy)
        orbit = ClosedOrbit(
            points=pts,
            period=T,
            action=T,
            action_integral=a_int,
            multiplicity=multiplicity,
            monodromy=fr.monodromy,
            transverse_multipliers=trans,
            degenerate=bool(np.any(np.abs(trans - 1.0) < degeneracy_tol)),
            closure_error=float(gap),
        )

        duplicate = False
        for other in orbits:
            if abs(other.action - orbit.action) < 1e-6 and _hausdorff(
                other.points, orbit.points
            ) < 1e-4 * max(1.0, body.circumradius_bound):
                duplicate = True
                break
        if not duplicate:
            orbits.append(orbit)

    orbits.sort(key=lambda o: o.action)
    return orbits


def orbit_data(body: ConvexBody, orbit: ClosedOrbit) -> dict:
    """Summary dictionary for a closed orbit, cross-checking its action.

    The period (Reeb time) and the line integral of lambda0 over a fine
    resampling must agree; their difference is reported alongside the
    transverse Floquet data.
    """
    fr = flow_with_variations(body, orbit.points[0], orbit.period)
    tau = np.linspace(0.0, orbit.period, 2048, endpoint=False)
    pts = fr.sample(tau)
    vel = apply_j(body.gauge(pts)[1])
    a_int = float(np.mean(liouville(pts, vel)) * orbit.period)
    trans = _transverse_multipliers(body, orbit.points[0], fr.monodromy)
    return {
        "action": orbit.action,
        "action_integral": a_int,
        "action_defect": abs(orbit.action - a_int),
        "period": orbit.period,
        "multiplicity": orbit.multiplicity,
        "closure_error": orbit.closure_error,
        "transverse_multipliers": trans,
        "degenerate": orbit.degenerate,
        "monodromy_symplecticity": float(
            np.linalg.norm(
                fr.monodromy.T @ _j_dense(body.dim_n) @ fr.monodromy - _j_dense(body.dim_n)
            )
        ),
    }


def _j_dense(n: int) -> np.ndarray:
    from .symplectic import j_matrix

    return j_matrix(n)
