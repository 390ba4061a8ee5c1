"""Smooth convex bodies in R^{2n} described by their gauge functions.

The gauge H_X of a convex body X containing the origin is the positively
2-homogeneous function equal to 1 on the boundary.  Every evaluator here is
vectorized over a leading batch axis: value (...), gradient (..., 2n),
Hessian (..., 2n, 2n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

GaugeEval = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass
class ConvexBody:
    """A convex body given by its gauge evaluator.

    Attributes
    ----------
    name : str
        Identifier used in certificates.
    dim_n : int
        Half-dimension n; the body lives in R^{2n}.
    gauge : callable
        Maps points of shape (..., 2n) to (value, gradient, hessian).
    circumradius_bound : float
        Upper bound for the Euclidean circumradius of the body.
    uniformly_convex : bool
        Whether the gauge Hessian is positive definite away from the
        origin.  Bodies with flat boundary pieces report False and are
        exempt from the strict lower Hessian bound.
    spec : dict
        JSON-serializable description, round-tripped by the CLI.
    """

    name: str
    dim_n: int
    gauge: GaugeEval
    circumradius_bound: float
    uniformly_convex: bool = True
    spec: dict = field(default_factory=dict)

    def boundary_point(self, direction: np.ndarray) -> np.ndarray:
        """Radial projection of a nonzero direction onto {gauge = 1}."""
        d = np.asarray(direction, dtype=float)
        val, _, _ = self.gauge(d)
        if np.any(val <= 0):
            raise ValueError("direction must be nonzero")
        return d / np.sqrt(val)[..., None] if d.ndim > 1 else d / np.sqrt(val)


def gauge_eval(body: ConvexBody, z: np.ndarray):
    """Evaluate the gauge of ``body`` at ``z``: (value, gradient, hessian)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 2 * body.dim_n:
        raise ValueError(f"expected points in R^{2 * body.dim_n}")
    return body.gauge(z)


def _pair_diag(coeffs: np.ndarray) -> np.ndarray:
    """Expand per-factor coefficients c_j to the interleaved diagonal."""
    return np.repeat(np.asarray(coeffs, dtype=float), 2)


def ellipsoid(a, name: str | None = None) -> ConvexBody:
    """Ellipsoid E(a) = { sum_j pi |z_j|^2 / a_j <= 1 }.

    The a_j are the actions of the n coordinate-circle characteristics.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or np.any(a <= 0):
        raise ValueError("a must be a sequence of positive reals")
    n = a.size
    diag = _pair_diag(2.0 * np.pi / a)

    def gauge(z: np.ndarray):
        z = np.asarray(z, dtype=float)
        val = 0.5 * np.sum(diag * z * z, axis=-1)
        grad = diag * z
        hess = np.broadcast_to(np.diag(diag), z.shape + (2 * n,)).copy()
        return val, grad, hess

    return ConvexBody(
        name=name or "ellipsoid",
        dim_n=n,
        gauge=gauge,
        circumradius_bound=float(np.sqrt(a.max() / np.pi)),
        uniformly_convex=True,
        spec={"type": "ellipsoid", "a": [float(x) for x in a]},
    )


def ball(a: float, n: int = 2) -> ConvexBody:
    """Round ball B(a) = { pi |z|^2 <= a }: the ellipsoid E(a, ..., a)."""
    body = ellipsoid([a] * n, name="ball")
    body.spec = {"type": "ball", "a": float(a)}
    return body


def _corner_profile(s: np.ndarray, eps: float):
    """C^2 convex phi with phi = 1 below 1 - eps and phi = s above 1 + eps.

    phi'(s) ramps from 0 to 1 through the cubic smoothstep, so phi'' >= 0
    and phi(s) >= max(1, s) with equality outside the wedge.
    Returns (phi, phi', phi'').
    """
    s = np.asarray(s, dtype=float)
    lo, hi = 1.0 - eps, 1.0 + eps
    x = np.clip((s - lo) / (2.0 * eps), 0.0, 1.0)
    phi = np.where(s <= lo, 1.0, np.where(s >= hi, s, 1.0 + 2.0 * eps * (x**3 - 0.5 * x**4)))
    d1 = np.where(s <= lo, 0.0, np.where(s >= hi, 1.0, 3.0 * x**2 - 2.0 * x**3))
    d2 = np.where((s > lo) & (s < hi), 3.0 * x * (1.0 - x) / eps, 0.0)
    return phi, d1, d2


def smoothed_polydisk(a: float, b: float, epsilon: float = 0.02) -> ConvexBody:
    """Smoothed polydisk P(a, b) in R^4.

    The gauge is the perspective combination u * phi(v / u) of the factor
    quadratics u = pi |z_1|^2 / a and v = pi |z_2|^2 / b, smoothed only in a
    corner wedge of relative width ``epsilon``.  Away from the corner the
    boundary keeps the flat solid tori of the exact polydisk, so the
    closed-characteristic foliation by circles of action a survives; the
    body is convex but deliberately not uniformly convex.
    """
    if min(a, b, epsilon) <= 0 or epsilon >= 0.5:
        raise ValueError("need a, b > 0 and 0 < epsilon < 0.5")
    ca, cb = 2.0 * np.pi / a, 2.0 * np.pi / b

    def gauge(z: np.ndarray):
        z = np.asarray(z, dtype=float)
        batch = z.shape[:-1]
        z1, z2 = z[..., :2], z[..., 2:]
        u = 0.5 * ca * np.sum(z1 * z1, axis=-1)
        v = 0.5 * cb * np.sum(z2 * z2, axis=-1)
        gu = np.zeros_like(z)
        gu[..., :2] = ca * z1
        gv = np.zeros_like(z)
        gv[..., 2:] = cb * z2
        Hu = np.zeros(batch + (4, 4))
        Hu[..., 0, 0] = Hu[..., 1, 1] = ca
        Hv = np.zeros(batch + (4, 4))
        Hv[..., 2, 2] = Hv[..., 3, 3] = cb

        # s = v/u is only formed where the wedge branch is active; elsewhere
        # the exact branches f = u or f = v avoid the division entirely.
        tiny = u <= 0
        u_safe = np.where(tiny, 1.0, u)
        s = v / u_safe
        phi, p1, p2 = _corner_profile(s, epsilon)

        f_u = phi - s * p1
        f_v = p1
        val = np.where(tiny, v, u * phi)
        grad = f_u[..., None] * gu + f_v[..., None] * gv

        # Second-order wedge term is rank one: (phi''/u) (s gu - gv)(.)^T.
        w = s[..., None] * gu - gv
        rank1 = (p2 / u_safe)[..., None, None] * (w[..., :, None] * w[..., None, :])
        hess = f_u[..., None, None] * Hu + f_v[..., None, None] * Hv + rank1

        if np.any(tiny):
            grad = np.where(tiny[..., None], gv, grad)
            hess = np.where(tiny[..., None, None], 0.5 * (Hu + Hv), hess)
            val = np.where(tiny, v, val)
        return val, grad, hess

    return ConvexBody(
        name="smoothed_polydisk",
        dim_n=2,
        gauge=gauge,
        circumradius_bound=float(np.sqrt((a + b) / np.pi)),
        uniformly_convex=False,
        spec={
            "type": "smoothed_polydisk",
            "a": float(a),
            "b": float(b),
            "epsilon": float(epsilon),
        },
    )


def perturbed_ellipsoid(
    a,
    delta: float = 0.05,
    bump_center=None,
    bump_width: float = 0.4,
) -> ConvexBody:
    """Ellipsoid with a multiplicative Gaussian bump on its boundary.

    H(z) = G(z) * (1 + delta * beta(z / sqrt(G(z)))) with G the ellipsoid
    gauge and beta a Gaussian of width ``bump_width`` centered at a boundary
    point; the 0-homogeneous rescaling keeps H exactly 2-homogeneous.
    Convexity holds for small delta and is checked by the invariant tests.
    """
    a = np.asarray(a, dtype=float)
    base = ellipsoid(a)
    n = a.size
    if bump_center is None:
        bump_center = np.ones(2 * n)
    c0 = np.asarray(bump_center, dtype=float)
    gval, _, _ = base.gauge(c0)
    if gval <= 0:
        raise ValueError("bump_center must be nonzero")
    c0 = c0 / np.sqrt(gval)
    w2 = float(bump_width) ** 2
    diag = _pair_diag(2.0 * np.pi / a)
    GH = np.diag(diag)

    def bump(y: np.ndarray):
        d = y - c0
        q = np.sum(d * d, axis=-1)
        b = np.exp(-q / (2.0 * w2))
        gb = -(b / w2)[..., None] * d
        hb = (b / w2**2)[..., None, None] * (d[..., :, None] * d[..., None, :])
        hb -= (b / w2)[..., None, None] * np.eye(2 * n)
        return b, gb, hb

    def gauge(z: np.ndarray):
        z = np.asarray(z, dtype=float)
        g = 0.5 * np.sum(diag * z * z, axis=-1)
        Gz = diag * z
        r = np.sqrt(g)
        yv = z / r[..., None]
        b, gb, hb = bump(yv)
        m = 1.0 + delta * b

        zta = np.sum(z * gb, axis=-1)
        # p = U^T grad(beta) with U = d(z / sqrt g)/dz.
        p = (gb - Gz * (zta / (2.0 * g))[..., None]) / r[..., None]
        grad = m[..., None] * Gz + delta * g[..., None] * p

        # Ut = (d y / d z)^T; the chain term of the bump Hessian is Ut hb Ut^T.
        Ut = (np.eye(2 * n) - Gz[..., :, None] * z[..., None, :] / (2.0 * g)[..., None, None]) / r[
            ..., None, None
        ]
        chain = np.einsum("...ij,...jk,...lk->...il", Ut, hb, Ut)
        t1 = -(zta / (2.0 * g))[..., None, None] * GH
        t2 = -(Gz[..., :, None] * gb[..., None, :]) / (2.0 * g)[..., None, None]
        t3 = (zta / (2.0 * g**2))[..., None, None] * (Gz[..., :, None] * Gz[..., None, :])
        dp_fixed = (t1 + t2 + t3) / r[..., None, None] - (
            p[..., :, None] * Gz[..., None, :]
        ) / (2.0 * g)[..., None, None]

        hess = (
            m[..., None, None] * GH
            + delta * (Gz[..., :, None] * p[..., None, :] + p[..., :, None] * Gz[..., None, :])
            + delta * g[..., None, None] * (dp_fixed + chain)
        )
        hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
        return g * m, grad, hess

    return ConvexBody(
        name="perturbed_ellipsoid",
        dim_n=n,
        gauge=gauge,
        # beta >= 0 so H >= G and the body sits inside the ellipsoid.
        circumradius_bound=base.circumradius_bound,
        uniformly_convex=True,
        spec={
            "type": "perturbed_ellipsoid",
            "a": [float(x) for x in a],
            "delta": float(delta),
            "bump_center": [float(x) for x in c0],
            "bump_width": float(bump_width),
        },
    )


def regularized(body: ConvexBody, rho: float) -> ConvexBody:
    """Blend a body's gauge with the round gauge of its circumscribed ball.

    Used to restore quadratic convexity for dual-method preconditions on
    bodies with flat boundary directions; the action spectrum shifts by
    O(rho).
    """
    n = body.dim_n
    round_coeff = np.pi / body.circumradius_bound**2
    eye = np.eye(2 * n)

    def gauge(z: np.ndarray):
        z = np.asarray(z, dtype=float)
        val, grad, hess = body.gauge(z)
        q = round_coeff * np.sum(z * z, axis=-1)
        val = val + rho * q
        grad = grad + (2.0 * rho * round_coeff) * z
        hess = hess + (2.0 * rho * round_coeff) * eye
        return val, grad, hess

    return ConvexBody(
        name=f"{body.name}+rho",
        dim_n=n,
        gauge=gauge,
        circumradius_bound=body.circumradius_bound,
        uniformly_convex=True,
        spec={"type": "regularized", "rho": float(rho), "base": body.spec},
    )


def body_from_spec(spec: dict) -> ConvexBody:
    """Construct a built-in body from its JSON description."""
    kind = spec.get("type")
    if kind == "ellipsoid":
        return ellipsoid(spec["a"])
    if kind == "ball":
        return ball(spec["a"], n=int(spec.get("n", 2)))
    if kind == "smoothed_polydisk":
        return smoothed_polydisk(spec["a"], spec["b"], spec.get("epsilon", 0.02))
    if kind == "perturbed_ellipsoid":
        return perturbed_ellipsoid(
            spec["a"],
            delta=spec.get("delta", 0.05),
            bump_center=spec.get("bump_center"),
            bump_width=spec.get("bump_width", 0.4),
        )
    if kind == "regularized":
        return regularized(body_from_spec(spec["base"]), float(spec["rho"]))
    raise ValueError(f"unknown body type: {kind!r}")
