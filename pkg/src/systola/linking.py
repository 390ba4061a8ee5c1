"""Linking diagnostics for closed orbits on convex boundaries in R^4.

Orbits are radially projected to S^3 and then to R^3 by a stereographic
chart whose pole stays away from the curves.  The linking number is the
exact Gauss-map solid-angle sum over segment pairs (integer for disjoint
polygons), cross-checked against a midpoint quadrature of the Gauss double
integral.  The self-linking number uses a pushoff along a symplectically
normalized transverse frame built from the quaternionic structure.
"""

from __future__ import annotations

import numpy as np

from .fourier import FourierLoop
from .symplectic import apply_j, omega


def _quaternion_pair(z: np.ndarray):
    """Left multiplication of points of S^3 in H by j and k, batched (..., 4)."""
    x1, y1, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    jz = np.stack([-x2, y2, x1, -y1], axis=-1)
    kz = np.stack([-y2, -x2, y1, x1], axis=-1)
    return jz, kz


def xi_frame(points: np.ndarray, normals: np.ndarray | None = None):
    """Symplectic frame of the contact hyperplane along a curve in R^4.

    Starting from the quaternionic candidates j z and k z, the vectors are
    projected (Euclidean) off span(normal, J0 z) and scaled by the square
    root of their mutual symplectic pairing, giving (w1, w2) with
    omega0(w1, w2) = 1 tangent to the boundary and transverse to the flow.
    ``normals`` defaults to the points themselves (the round sphere).
    """
    z = np.asarray(points, dtype=float)
    if z.shape[-1] != 4:
        raise ValueError("frame construction requires curves in R^4")
    nrm = z if normals is None else np.asarray(normals, dtype=float)
    jz, kz = _quaternion_pair(z)
    span = np.stack([nrm, apply_j(z)], axis=-1)

    G = np.einsum("...ia,...ib->...ab", span, span)
    rhs = np.einsum("...ia,...i->...a", span, jz), np.einsum("...ia,...i->...a", span, kz)
    w = []
    for cand, r in zip((jz, kz), rhs):
        coefs = np.linalg.solve(G, r[..., None])[..., 0]
        w.append(cand - np.einsum("...ia,...a->...i", span, coefs))
    w1, w2 = w
    pair = omega(w1, w2)
    if np.any(pair <= 0):
        raise ValueError("frame degenerated: symplectic pairing not positive")
    scale = 1.0 / np.sqrt(pair)
    return w1 * scale[..., None], w2 * scale[..., None]


def _to_sphere(points: np.ndarray) -> np.ndarray:
    z = np.asarray(points, dtype=float)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _pick_pole(curves, n_candidates: int = 64, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cand = rng.standard_normal((n_candidates, 4))
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    pts = np.vstack(curves)
    d = np.linalg.norm(cand[:, None, :] - pts[None, :, :], axis=-1)
    return cand[int(np.argmax(d.min(axis=1)))]


def _stereographic(u: np.ndarray, pole: np.ndarray) -> np.ndarray:
    basis = []
    for e in np.eye(4):
        v = e - np.dot(e, pole) * pole
        for b in basis:
            v -= np.dot(v, b) * b
        if np.linalg.norm(v) > 1e-8:
            basis.append(v / np.linalg.norm(v))
        if len(basis) == 3:
            break
    B = np.array(basis)
    # Fix the chart handedness: Gram-Schmidt alone leaves the frame's
    # orientation depending on where the pole sits relative to the
    # coordinate axes, which would flip the sign of every linking number
    # from one pole choice to the next.
    if np.linalg.det(np.vstack([B, pole[None, :]])) < 0:
        B[2] = -B[2]
    denom = 1.0 - u @ pole
    if np.any(np.abs(denom) < 1e-9):
        raise ValueError("curve passes through the stereographic pole")
    return (u @ B.T) / denom[:, None]


def project_to_space(curves) -> list[np.ndarray]:
    """Radial projection to S^3 followed by a common stereographic chart.

    Accepts a list of (M, 4) curves and returns the corresponding (M, 3)
    space curves, using one pole far from every input curve.
    """
    spheres = [_to_sphere(c) for c in curves]
    pole = _pick_pole(spheres)
    return [_stereographic(u, pole) for u in spheres]


def _unit(v: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(nrm > 1e-300, v / np.where(nrm == 0.0, 1.0, nrm), 0.0)


def _pair_solid_angles(a0, a1, b0, b1) -> np.ndarray:
    """Exact Gauss-map solid angle for segment pairs, batched (..., 3).

    The Gauss integrand over one segment of each curve sweeps a spherical
    quadrilateral whose corners are the directions between the four
    endpoint combinations; its signed area (Klenin-Langowski) is the exact
    contribution of the pair to 4 pi times the linking number.
    """
    r12 = a1 - a0
    r34 = b1 - b0
    r13 = b0 - a0
    r14 = b1 - a0
    r23 = b0 - a1
    r24 = b1 - a1
    n1 = _unit(np.cross(r13, r14))
    n2 = _unit(np.cross(r14, r24))
    n3 = _unit(np.cross(r24, r23))
    n4 = _unit(np.cross(r23, r13))

    def dot(x, y):
        return np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)

    area = (
        np.arcsin(dot(n1, n2))
        + np.arcsin(dot(n2, n3))
        + np.arcsin(dot(n3, n4))
        + np.arcsin(dot(n4, n1))
    )
    orient = np.sign(np.sum(np.cross(r34, r12) * r13, axis=-1))
    return area * orient


def linking_number(curve_a: np.ndarray, curve_b: np.ndarray) -> int:
    """Linking number of two disjoint closed polygonal curves in R^3.

    Sums the exact per-segment-pair solid angles of the Gauss map, which is
    an integer (up to rounding) for any pair of disjoint polygons, however
    shallow their crossing angles.  Raises when the sum is not close to an
    integer, which indicates the curves nearly touch at the sampling scale.
    """
    A = np.asarray(curve_a, dtype=float)
    B = np.asarray(curve_b, dtype=float)
    A1 = np.roll(A, -1, axis=0)
    B1 = np.roll(B, -1, axis=0)
    total = 0.0
    chunk = max(1, (1 << 21) // max(len(B), 1))
    for i in range(0, len(A), chunk):
        a0 = A[i : i + chunk, None, :]
        a1 = A1[i : i + chunk, None, :]
        total += float(
            np.sum(_pair_solid_angles(a0, a1, B[None, :, :], B1[None, :, :]))
        )
    lk = total / (4.0 * np.pi)
    if abs(lk - round(lk)) > 0.05:
        raise ValueError(
            f"polygonal linking sum {lk:.6f} is not close to an integer; "
            "the curves nearly touch at this sampling"
        )
    return int(round(lk))


def gauss_linking(curve_a: np.ndarray, curve_b: np.ndarray) -> float:
    """Gauss double-integral estimate of the linking number (midpoint rule)."""
    A = np.asarray(curve_a, dtype=float)
    B = np.asarray(curve_b, dtype=float)
    ta = np.roll(A, -1, axis=0) - A
    tb = np.roll(B, -1, axis=0) - B
    ma = A + 0.5 * ta
    mb = B + 0.5 * tb
    r = ma[:, None, :] - mb[None, :, :]
    norm3 = np.linalg.norm(r, axis=-1) ** 3
    cross = np.cross(ta[:, None, :], tb[None, :, :])
    det = np.sum(cross * r, axis=-1)
    return float(np.sum(det / norm3) / (4.0 * np.pi))


def self_linking(
    points: np.ndarray,
    normals: np.ndarray | None = None,
    eps: float | None = None,
) -> int:
    """Self-linking number of a transverse curve via a frame pushoff.

    The curve is pushed off along the first frame vector of ``xi_frame``.
    Curve and frame are resampled trigonometrically so the polygonal chords
    stay well below the offset, and the crossing count has to agree between
    two offset scales (on top of the three-projection agreement inside
    ``linking_number``).  The Gauss integral is not consulted here: against
    a curve's own pushoff its integrand is near singular, so its quadrature
    error grows exactly as the offset shrinks.
    """
    z = np.asarray(points, dtype=float)
    w1, _ = xi_frame(z, normals)
    M = 2048
    K = min(z.shape[0] // 2 - 1, 128)
    zm, wm = z.mean(axis=0), w1.mean(axis=0)
    dense_z = FourierLoop.from_grid(z - zm, K).grid(M) + zm
    dense_w = FourierLoop.from_grid(w1 - wm, K).grid(M) + wm
    diam = float(np.max(np.linalg.norm(dense_z - dense_z.mean(axis=0), axis=-1)))
    seg = float(np.max(np.linalg.norm(np.roll(dense_z, -1, axis=0) - dense_z, axis=-1)))
    e0 = max(1e-2 * diam, 8.0 * seg) if eps is None else eps
    counts = []
    for e in (e0, 0.5 * e0):
        a3, b3 = project_to_space([dense_z, dense_z + e * dense_w])
        counts.append(linking_number(a3, b3))
    if counts[0] != counts[1]:
        raise ValueError("self-linking did not stabilize under pushoff refinement")
    return counts[0]
