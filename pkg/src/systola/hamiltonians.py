"""Hamiltonians built from convex gauges, and their Legendre transforms.

A body X with gauge G produces autonomous Hamiltonians H = k(G) for a convex
profile k.  Closed 1-periodic orbits of X_H sit on levels {G = s} where the
slope k'(s) equals an action m A_j of a closed characteristic of X, and the
value s k'(s) - k(s) of the Legendre transform of k at that slope is the
critical value of the dual action functional, strictly increasing in the
action.  Optional perturbations: a strictly convex patch near the origin
(leaves the relevant levels untouched) and a time-dependent term that splits
a degenerate circle family of orbits into two nondegenerate ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bodies import ConvexBody
from .symplectic import apply_j, to_complex


def _smoothstep(x: np.ndarray):
    """Cubic smoothstep S with S(0)=0, S(1)=1, S'(0)=S'(1)=0; returns (S, S')."""
    x = np.clip(x, 0.0, 1.0)
    return 3.0 * x**2 - 2.0 * x**3, 6.0 * x * (1.0 - x)


@dataclass
class ConvexProfile:
    """C^2 convex ramp profile k on [0, inf).

    k vanishes on [0, r0], its slope climbs smoothly from 0 to eta over
    [r0, r1] (smoothstep derivative), and k is affine with slope eta beyond.
    Orbits of X_{k(G)} with Reeb action A < eta live on the unique level s
    with k'(s) = A.
    """

    eta: float
    r0: float = 0.3
    r1: float = 2.0

    def __post_init__(self):
        if self.eta <= 0 or not 0 < self.r0 < self.r1:
            raise ValueError("need eta > 0 and 0 < r0 < r1")
        self._L = self.r1 - self.r0
        # k(r1) = eta * L * integral of S = eta * L * T(1) with T below.
        self._k1 = self.eta * self._L * 0.5

    def _x(self, s: np.ndarray) -> np.ndarray:
        return np.clip((np.asarray(s, dtype=float) - self.r0) / self._L, 0.0, 1.0)

    def k(self, s):
        s = np.asarray(s, dtype=float)
        x = self._x(s)
        T = x**3 - 0.5 * x**4
        ramp = self.eta * self._L * T
        out = np.where(s <= self.r1, ramp, self._k1 + self.eta * (s - self.r1))
        return out if out.ndim else float(out)

    def dk(self, s):
        S, _ = _smoothstep(self._x(s))
        out = self.eta * S
        return out if out.ndim else float(out)

    def d2k(self, s):
        _, dS = _smoothstep(self._x(s))
        out = self.eta * dS / self._L
        return out if out.ndim else float(out)

    def level_for_action(self, action: float) -> float:
        """The level s with k'(s) = action, for 0 < action < eta."""
        if not 0.0 < action < self.eta:
            raise ValueError(f"action must lie in (0, eta={self.eta})")
        return float(brentq(lambda s: self.dk(s) - action, self.r0, self.r1, xtol=1e-14))


@dataclass
class LinearProfile:
    """Homogeneous profile k(s) = slope * s, i.e. H = slope * G.

    Every closed characteristic on every level is a critical point with the
    same Reeb action slope, so this profile is only useful for identities
    and closed-form oracles, not for spectrum searches.
    """

    slope: float

    def __post_init__(self):
        if self.slope <= 0:
            raise ValueError("need slope > 0")

    def k(self, s):
        out = self.slope * np.asarray(s, dtype=float)
        return out if out.ndim else float(out)

    def dk(self, s):
        out = np.full_like(np.asarray(s, dtype=float), self.slope)
        return out if out.ndim else float(out)

    def d2k(self, s):
        out = np.zeros_like(np.asarray(s, dtype=float))
        return out if out.ndim else float(out)


@dataclass
class CorePatchedProfile:
    """Ramp profile made strictly convex near the origin.

    Replaces the flat piece of a ConvexProfile by three zones:
    [0, c0] affine with small slope s0 (shifted down by d0 so the patched
    profile is C^0), [c0, c2] with derivative given by a monotone cubic
    Hermite interpolant from (s0, slope 0) to (k'(c2), k''(c2)), and pure k
    beyond c2.  The interval end c2 grows geometrically until the
    Fritsch-Carlson condition guarantees the interpolated derivative is
    monotone, so the patch is C^2 and convex, with derivative below k'(c2);
    levels carrying actions above k'(c2) are untouched.
    """

    base: ConvexProfile
    s0: float = 0.05
    c0: float = 0.25

    def __post_init__(self):
        k = self.base
        if self.c0 >= k.r0:
            raise ValueError("patch zone must end inside the flat piece of the ramp")
        if self.s0 >= k.eta:
            raise ValueError("core slope must be below the asymptotic slope")
        c2 = k.level_for_action(self.s0)
        while k.d2k(c2) * (c2 - self.c0) > 3.0 * (k.dk(c2) - self.s0):
            c2 = self.c0 + 1.4 * (c2 - self.c0)
            if c2 >= k.r1:
                raise ValueError("could not fit a monotone core patch inside the ramp")
        self.c2 = float(c2)
        self._width = self.c2 - self.c0
        self._p1 = float(k.dk(self.c2))
        self._m1 = float(k.d2k(self.c2)) * self._width
        # d0 makes the patch continuous at c2; positivity is a sanity check
        # that the patched profile really dips below zero at the origin.
        trans = self._hermite_integral(1.0) * self._width
        self.d0 = float(self.s0 * self.c0 + trans - k.k(self.c2))
        if self.d0 <= 0:
            raise ValueError("core patch failed to produce a negative minimum")

    def _hermite(self, x: np.ndarray):
        """Cubic Hermite for the derivative: value and d/dx on [0, 1]."""
        p0, p1, m1 = self.s0, self._p1, self._m1
        h = (
            p0 * (2 * x**3 - 3 * x**2 + 1)
            + p1 * (-2 * x**3 + 3 * x**2)
            + m1 * (x**3 - x**2)
        )
        dh = 6.0 * (x**2 - x) * (p0 - p1) + m1 * (3 * x**2 - 2 * x)
        return h, dh

    def _hermite_integral(self, x: np.ndarray):
        """Integral of the Hermite derivative from 0 to x (in x units)."""
        p0, p1, m1 = self.s0, self._p1, self._m1
        return (
            p0 * (0.5 * x**4 - x**3 + x)
            + p1 * (-0.5 * x**4 + x**3)
            + m1 * (0.25 * x**4 - x**3 / 3.0)
        )

    def k(self, s):
        s = np.asarray(s, dtype=float)
        x = np.clip((s - self.c0) / self._width, 0.0, 1.0)
        zone1 = self.s0 * s - self.d0
        zone2 = (
            self.s0 * self.c0
            - self.d0
            + self._hermite_integral(x) * self._width
        )
        out = np.where(s <= self.c0, zone1, np.where(s <= self.c2, zone2, self.base.k(s)))
        return out if out.ndim else float(out)

    def dk(self, s):
        s = np.asarray(s, dtype=float)
        x = np.clip((s - self.c0) / self._width, 0.0, 1.0)
        h, _ = self._hermite(x)
        out = np.where(s <= self.c0, self.s0, np.where(s <= self.c2, h, self.base.dk(s)))
        return out if out.ndim else float(out)

    def d2k(self, s):
        s = np.asarray(s, dtype=float)
        x = np.clip((s - self.c0) / self._width, 0.0, 1.0)
        _, dh = self._hermite(x)
        out = np.where(
            s <= self.c0, 0.0, np.where(s <= self.c2, dh / self._width, self.base.d2k(s))
        )
        return out if out.ndim else float(out)

    @property
    def eta(self) -> float:
        return self.base.eta

    def level_for_action(self, action: float) -> float:
        if action <= self._p1:
            raise ValueError("action lies in the patched zone; increase it or shrink s0")
        return self.base.level_for_action(action)


@dataclass
class SplitPerturbation:
    """Time-dependent potential that breaks a circle family of orbits.

    p(t, z) = eps * chi(q(z)) * <z - c, u1 cos 2 pi t + u2 sin 2 pi t>, where
    q is a smooth squared tube distance to the circle c + R(u1 cos, u2 sin)
    and chi is a C^2 cutoff supported in {q <= q0}.  Averaged over the
    family phase theta the perturbation is proportional to cos(2 pi theta),
    so exactly two orbits survive: one at each critical phase.
    """

    center: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    radius: float
    eps: float
    tube_frac: float = 0.3

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.u1 = np.asarray(self.u1, dtype=float)
        self.u2 = np.asarray(self.u2, dtype=float)
        self.q0 = (self.tube_frac * self.radius) ** 2
        P = np.outer(self.u1, self.u1) + np.outer(self.u2, self.u2)
        self._p_pl = P
        self._p_perp = np.eye(self.center.size) - P

    @classmethod
    def from_circle(cls, points: np.ndarray, eps: float) -> "SplitPerturbation":
        """Fit center, radius and rotation frame from a sampled circular orbit."""
        pts = np.asarray(points, dtype=float)
        c = pts.mean(axis=0)
        M = pts.shape[0]
        phase = np.exp(-2j * np.pi * np.arange(M) / M)
        coef = (pts * phase[:, None]).mean(axis=0)
        u1, u2 = 2.0 * coef.real, -2.0 * coef.imag
        R = 0.5 * (np.linalg.norm(u1) + np.linalg.norm(u2))
        return cls(center=c, u1=u1 / np.linalg.norm(u1), u2=u2 / np.linalg.norm(u2),
                   radius=float(R), eps=float(eps))

    def _tube(self, z: np.ndarray):
        """q, grad q, hess q for the squared tube coordinate."""
        v = z - self.center
        v_pl = v @ self._p_pl.T
        v_perp = v - v_pl
        r2 = np.sum(v_pl * v_pl, axis=-1)
        excess = r2 - self.radius**2
        q = np.sum(v_perp * v_perp, axis=-1) + excess**2 / (2.0 * self.radius) ** 2
        gq = 2.0 * v_perp + (excess / self.radius**2)[..., None] * v_pl
        hq = (
            2.0 * self._p_perp
            + (excess / self.radius**2)[..., None, None] * self._p_pl
            + (2.0 / self.radius**2) * (v_pl[..., :, None] * v_pl[..., None, :])
        )
        return q, gq, hq

    def _cutoff(self, q: np.ndarray):
        y = np.maximum(1.0 - q / self.q0, 0.0)
        return y**3, -3.0 * y**2 / self.q0, 6.0 * y / self.q0**2

    def eval(self, t: np.ndarray, z: np.ndarray):
        z = np.asarray(z, dtype=float)
        t = np.asarray(t, dtype=float)
        U = np.multiply.outer(np.cos(2 * np.pi * t), self.u1) + np.multiply.outer(
            np.sin(2 * np.pi * t), self.u2
        )
        q, gq, hq = self._tube(z)
        chi, dchi, d2chi = self._cutoff(q)
        lin = np.sum((z - self.center) * U, axis=-1)
        val = self.eps * chi * lin
        grad = self.eps * ((dchi * lin)[..., None] * gq + chi[..., None] * U)
        hess = self.eps * (
            (d2chi * lin)[..., None, None] * (gq[..., :, None] * gq[..., None, :])
            + (dchi * lin)[..., None, None] * hq
            + dchi[..., None, None]
            * (gq[..., :, None] * U[..., None, :] + U[..., :, None] * gq[..., None, :])
        )
        return val, grad, hess

    def spec(self) -> dict:
        return {
            "type": "orbit-splitting",
            "eps": float(self.eps),
            "center": [float(x) for x in self.center],
            "u1": [float(x) for x in self.u1],
            "u2": [float(x) for x in self.u2],
            "radius": float(self.radius),
            "tube_frac": float(self.tube_frac),
        }


@dataclass
class TimeHamiltonian:
    """Hamiltonian H(t, z) = profile(G(z)) + optional perturbation.

    All evaluators are batched: t of shape (...), z of shape (..., 2n).
    Autonomous Hamiltonians ignore t.
    """

    body: ConvexBody
    profile: ConvexProfile | CorePatchedProfile | LinearProfile
    perturbation: SplitPerturbation | None = None
    spec: dict = field(default_factory=dict)

    @property
    def dim_n(self) -> int:
        return self.body.dim_n

    @property
    def time_dependent(self) -> bool:
        return self.perturbation is not None

    def eval(self, t, z):
        """Value, gradient and Hessian of H at (t, z) in one pass."""
        z = np.asarray(z, dtype=float)
        g, gg, hg = self.body.gauge(z)
        k1, k2 = self.profile.dk(g), self.profile.d2k(g)
        val = self.profile.k(g)
        grad = np.asarray(k1)[..., None] * gg
        hess = np.asarray(k1)[..., None, None] * hg + np.asarray(k2)[..., None, None] * (
            gg[..., :, None] * gg[..., None, :]
        )
        if self.perturbation is not None:
            pv, pg, ph = self.perturbation.eval(t, z)
            val, grad, hess = val + pv, grad + pg, hess + ph
        return val, grad, hess

    def value(self, t, z):
        return self.eval(t, z)[0]

    def grad(self, t, z):
        return self.eval(t, z)[1]

    def hess(self, t, z):
        return self.eval(t, z)[2]


def build_hamiltonian(body: ConvexBody, eta: float, perturbation_spec=None) -> TimeHamiltonian:
    """Assemble the profiled Hamiltonian for a body.

    Parameters
    ----------
    body : ConvexBody
    eta : float
        Asymptotic slope of the profile; actions up to eta are visible.
    perturbation_spec : None | dict | SplitPerturbation
        None for the plain ramp profile, {"type": "core"} for the strictly
        convex patched profile, {"type": "orbit-splitting", "eps": float,
        "points": (M, 2n) samples of a circular orbit} (or a ready
        SplitPerturbation) for the patched profile plus the splitting term.
    """
    profile: ConvexProfile | CorePatchedProfile = ConvexProfile(eta=eta)
    perturbation = None
    pspec: dict = {"type": "none"}
    if isinstance(perturbation_spec, SplitPerturbation):
        profile = CorePatchedProfile(base=profile)
        perturbation = perturbation_spec
        pspec = perturbation.spec()
    elif perturbation_spec is not None:
        kind = perturbation_spec.get("type", "none")
        if kind == "core":
            profile = CorePatchedProfile(base=profile)
            pspec = {"type": "core"}
        elif kind == "orbit-splitting":
            profile = CorePatchedProfile(base=profile)
            pts = np.asarray(perturbation_spec["points"], dtype=float)
            # The sampled orbit lives on some gauge level, but the critical
            # loops of k(G) with the same Reeb action sit on the level where
            # k' equals that action; center the tube there or the cutoff
            # starves the splitting.
            gval = float(np.mean(body.gauge(pts)[0]))
            action = _loop_action(pts) / gval
            s_star = profile.level_for_action(action)
            perturbation = SplitPerturbation.from_circle(
                math.sqrt(s_star / gval) * pts,
                eps=float(perturbation_spec.get("eps", 1e-3)),
            )
            pspec = perturbation.spec()
        elif kind != "none":
            raise ValueError(f"unknown perturbation type: {kind!r}")
    return TimeHamiltonian(
        body=body,
        profile=profile,
        perturbation=perturbation,
        spec={"body": body.spec, "eta": float(eta), "perturbation": pspec},
    )


def fenchel_eval(ham: TimeHamiltonian, t, w, z0=None, tol: float = 1e-10, max_iter: int = 100):
    """Legendre transform H*(t, w) = sup_z <z, w> - H(t, z), batched.

    Solves grad H(t, z) = w by damped Newton ascent on the strictly concave
    objective.  Returns (value, zstar, hess) where hess is the Hessian of H
    at zstar, so inv(hess) is the Hessian of H*.

    Parameters
    ----------
    z0 : ndarray, optional
        Warm start with the same shape as w; defaults to w radially
        projected near the unit gauge level.
    """
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    if z0 is None:
        g0, _, _ = ham.body.gauge(w)
        scale = np.sqrt(np.maximum(g0, 1e-300))
        z = np.where((g0 > 0)[..., None], w / np.maximum(scale, 1e-150)[..., None], w)
    else:
        z = np.array(z0, dtype=float)

    wnorm = np.linalg.norm(w, axis=-1)
    val, grad, hess = ham.eval(t, z)
    obj = np.sum(z * w, axis=-1) - val
    best = np.inf
    stale = 0
    for it in range(max_iter):
        res = w - grad
        resnorm = np.linalg.norm(res, axis=-1)
        rel = resnorm / (1.0 + wnorm)
        active = rel > tol
        if not np.any(active):
            break
        # On smoothed corners the attainable residual floors a few decades
        # above tol instead of dropping below it; once the worst entry has
        # stopped improving, accept anything within 1e3 tol of the target
        # rather than grinding out the remaining iterations.
        worst = float(np.max(rel))
        if worst < 0.7 * best:
            best, stale = worst, 0
        else:
            stale += 1
            if stale >= 8 and worst <= 1e3 * tol:
                break
        # Tiny ridge keeps the step finite if an iterate visits a flat zone
        # of the profile; it vanishes relative to any nondegenerate Hessian.
        ridge = 1e-12 * (1.0 + np.abs(hess).max()) * np.eye(hess.shape[-1])
        step = np.linalg.solve(hess + ridge, res[..., None])[..., 0]
        alpha = np.ones(res.shape[:-1])
        decrease = np.sum(res * step, axis=-1)
        for _ in range(40):
            z_try = z + (alpha * active)[..., None] * step
            val_t, grad_t, hess_t = ham.eval(t, z_try)
            obj_t = np.sum(z_try * w, axis=-1) - val_t
            # Armijo on the concave objective, or a residual decrease that
            # does not measurably lower the objective: near the optimum the
            # objective increment underflows while the Newton step still
            # cuts the gradient residual.  The non-worsening guard matters;
            # accepting any residual decrease lets a full overshooting step
            # pair up with the Armijo step that undoes it into a 2-cycle.
            res_t = np.linalg.norm(w - grad_t, axis=-1)
            ok = (obj_t >= obj + 1e-4 * alpha * decrease) | (
                (res_t <= 0.9 * resnorm) & (obj_t >= obj - 1e-12 * (1.0 + np.abs(obj)))
            )
            done = ok | ~active
            if np.all(done):
                break
            alpha = np.where(done, alpha, 0.5 * alpha)
        z = np.where(active[..., None], z_try, z)
        obj = np.where(active, obj_t, obj)
        grad = np.where(active[..., None], grad_t, grad)
        hess = np.where(active[..., None, None], hess_t, hess)
    else:
        res = w - grad
        rel = np.linalg.norm(res, axis=-1) / (1.0 + wnorm)
        if np.any(rel > 1e3 * tol):
            worst = float(np.max(rel))
            raise RuntimeError(f"fenchel solve did not converge, residual {worst:.3e}")
    return obj, z, hess


def hamiltonian_field(ham: TimeHamiltonian, t, z) -> np.ndarray:
    """Hamiltonian vector field X_H = J0 grad H, batched."""
    return apply_j(ham.grad(t, z))


def _loop_action(points: np.ndarray) -> float:
    """Symplectic loop area pi sum k |coef_k|^2 from uniform samples."""
    pts = np.asarray(points, dtype=float)
    M = pts.shape[0]
    coef = np.fft.fft(to_complex(pts), axis=0) / M
    k = np.fft.fftfreq(M, d=1.0 / M)
    return float(np.pi * np.sum(k * np.sum(np.abs(coef) ** 2, axis=-1)))


def direct_action(ham: TimeHamiltonian, points: np.ndarray) -> float:
    """Hamiltonian action of a 1-periodic trajectory sampled on a uniform grid.

    A_H = integral of lambda0(x') dt - integral of H(t, x) dt, with the loop
    term computed spectrally from the samples (M, 2n).
    """
    pts = np.asarray(points, dtype=float)
    M = pts.shape[0]
    tgrid = np.arange(M) / M
    return _loop_action(pts) - float(np.mean(ham.value(tgrid, pts)))


def hessian_range(ham: TimeHamiltonian, s_max: float, samples: int = 64, seed: int = 0):
    """Crude (min, max) eigenvalue range of the spatial Hessian of H.

    Samples random directions on gauge levels up to s_max; used to size the
    Fourier head so that the tail problem is strictly convex.
    """
    rng = np.random.default_rng(seed)
    d = 2 * ham.dim_n
    dirs = rng.standard_normal((samples, d))
    g, _, _ = ham.body.gauge(dirs)
    dirs /= np.sqrt(g)[:, None]
    levels = np.linspace(0.05, s_max, 24)
    pts = (np.sqrt(levels)[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    tgrid = rng.random(pts.shape[0])
    _, _, hess = ham.eval(tgrid, pts)
    eigs = np.linalg.eigvalsh(hess)
    return float(eigs.min()), float(eigs.max())
