"""Clarke-dual variational method for closed orbits and the systole.

The dual action of a mean-free loop gamma (stored as a FourierLoop) is

    Psi(gamma) = integral of H*(t, w(t)) dt - pi sum_k k |v_k|^2,

with w = -J0 gamma'.  Critical points satisfy grad Psi = 0, reconstruct to
1-periodic Hamiltonian trajectories x = gamma + mean, and for H = k(G) the
critical value equals the Legendre transform of the profile at the orbit's
Reeb action, so the smallest positive critical action identifies the
systole.  The Hessian of Psi in Fourier coordinates is assembled from the
complex-linear and antilinear parts of the pointwise Hessian of H* via two
FFTs (a Toeplitz and a Hankel family of blocks).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import qmc

from .bodies import ConvexBody, regularized
from .fourier import FourierLoop
from .hamiltonians import (
    TimeHamiltonian,
    build_hamiltonian,
    fenchel_eval,
    hessian_range,
)
from .reeb import find_closed_orbits
from .symplectic import apply_j, to_complex, to_real


class InconsistencyError(RuntimeError):
    """Raised when the dual spectrum and the shooting oracle disagree."""


def _precond_weights(modes: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + (2.0 * np.pi * modes) ** 2)


@dataclass
class DualEval:
    """One evaluation of Psi: value, coefficient gradient, and fiber data."""

    value: float
    grad_coef: np.ndarray
    pre_norm: float
    zstar: np.ndarray
    hess_grid: np.ndarray
    tgrid: np.ndarray


def dual_action_eval(
    ham: TimeHamiltonian, loop: FourierLoop, M: int | None = None, zstar_warm=None
) -> DualEval:
    """Evaluate the dual action functional at a loop.

    Returns the value, the complex coefficient gradient 2 pi k (F_k - v_k)
    (F = Fourier coefficients of the Fenchel point curve), the
    preconditioned gradient norm used as the criticality measure, and the
    per-grid-point Fenchel data needed for Hessian assembly.
    """
    if M is None:
        M = 8 * loop.K
    w = loop.w_grid(M)
    tgrid = np.arange(M) / M
    hstar, zstar, hess = fenchel_eval(ham, tgrid, w, z0=zstar_warm)
    value = float(np.mean(hstar)) - loop.action()
    spec = np.fft.fft(to_complex(zstar), axis=0) / M
    modes = np.arange(-loop.K, loop.K + 1)
    F = spec[modes % M]
    grad_coef = 2.0 * np.pi * modes[:, None] * (F - loop.coef)
    pre = float(
        np.sqrt(np.sum(_precond_weights(modes) * np.sum(np.abs(grad_coef) ** 2, axis=-1)))
    )
    return DualEval(value, grad_coef, pre, zstar, hess, tgrid)


def _alpha_beta_hats(hess_grid: np.ndarray):
    """FFTs of the complex-linear/antilinear parts of inv(hess) on the grid."""
    B = np.linalg.inv(hess_grid)
    M = B.shape[0]
    n = B.shape[-1] // 2
    B4 = B.reshape(M, n, 2, n, 2)
    a, b = B4[:, :, 0, :, 0], B4[:, :, 0, :, 1]
    c, d = B4[:, :, 1, :, 0], B4[:, :, 1, :, 1]
    alpha = 0.5 * ((a + d) + 1j * (c - b))
    beta = 0.5 * ((a - d) + 1j * (c + b))
    return np.fft.fft(alpha, axis=0) / M, np.fft.fft(beta, axis=0) / M


def _real_blocks(C: np.ndarray, antilinear: bool) -> np.ndarray:
    """Real 2x2-per-entry expansion of complex block matrices (..., n, n)."""
    n = C.shape[-1]
    out = np.empty(C.shape[:-2] + (2 * n, 2 * n))
    re, im = C.real, C.imag
    if antilinear:
        out[..., 0::2, 0::2] = re
        out[..., 0::2, 1::2] = im
        out[..., 1::2, 0::2] = im
        out[..., 1::2, 1::2] = -re
    else:
        out[..., 0::2, 0::2] = re
        out[..., 0::2, 1::2] = -im
        out[..., 1::2, 0::2] = im
        out[..., 1::2, 1::2] = re
    return out


def _hessian_matrix(modes_r, modes_c, alphahat, betahat) -> np.ndarray:
    """Real Hessian of Psi over the given row/column mode sets."""
    M = alphahat.shape[0]
    n = alphahat.shape[-1]
    kr = np.asarray(modes_r)[:, None]
    kc = np.asarray(modes_c)[None, :]
    blocks = _real_blocks(alphahat[(kr - kc) % M], antilinear=False)
    blocks += _real_blocks(betahat[(kr + kc) % M], antilinear=True)
    blocks *= (4.0 * np.pi**2 * kr * kc)[..., None, None]
    same = kr == kc
    if np.any(same):
        eye = np.eye(2 * n)
        blocks -= np.where(same, 2.0 * np.pi * kr, 0.0)[..., None, None] * eye
    R, C = len(modes_r), len(modes_c)
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n * R, 2 * n * C)


def _loop_vec(loop: FourierLoop, modes: np.ndarray) -> np.ndarray:
    return to_real(loop.coef[loop.K + modes]).ravel()


def _vec_loop(vec: np.ndarray, modes: np.ndarray, K: int, n: int) -> FourierLoop:
    coef = np.zeros((2 * K + 1, n), dtype=complex)
    coef[K + modes] = to_complex(vec.reshape(len(modes), 2 * n))
    return FourierLoop(coef)


def _grad_vec(ev: DualEval, modes: np.ndarray, K: int) -> np.ndarray:
    return to_real(ev.grad_coef[K + modes]).ravel()


def _full_modes(K: int) -> np.ndarray:
    return np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])


def _lm_root(ham, loop0: FourierLoop, M, pre_tol=1e-9, max_iter=160):
    """Levenberg-Marquardt root finding for grad Psi = 0 in full mode space."""
    loop = loop0.copy()
    K, n = loop.K, loop.n
    modes = _full_modes(K)
    ev = dual_action_eval(ham, loop, M)
    zwarm = ev.zstar
    lam = 1e-3
    for _ in range(max_iter):
        if ev.pre_norm < pre_tol:
            return loop, ev, True
        H = _hessian_matrix(modes, modes, *_alpha_beta_hats(ev.hess_grid))
        F = _grad_vec(ev, modes, K)
        rhs = -(H @ F)
        HTH = H @ H
        x = _loop_vec(loop, modes)
        accepted = False
        for _ in range(12):
            try:
                delta = np.linalg.solve(HTH + lam * np.eye(HTH.shape[0]), rhs)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            loop_try = _vec_loop(x + delta, modes, K, n)
            try:
                ev_try = dual_action_eval(ham, loop_try, M, zstar_warm=zwarm)
            except RuntimeError:
                lam *= 10.0
                continue
            if ev_try.pre_norm < ev.pre_norm:
                loop, ev, zwarm = loop_try, ev_try, ev_try.zstar
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 8.0
        if not accepted:
            return loop, ev, ev.pre_norm < pre_tol
    return loop, ev, ev.pre_norm < pre_tol


def tail_minimizer(
    ham: TimeHamiltonian,
    loop: FourierLoop,
    head_n: int,
    M: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 60,
    zstar_warm=None,
):
    """Minimize Psi over the tail modes with the head modes held fixed.

    The head consists of the modes 1..head_n; every other mode belongs to
    the tail, where Psi is strictly convex once head_n exceeds the spatial
    Hessian bound over 2 pi.  Newton with a Cholesky solve and backtracking.
    """
    if M is None:
        M = 8 * loop.K
    K, n = loop.K, loop.n
    modes = _full_modes(K)
    tail_mask = (modes < 0) | (modes > head_n)
    tail_modes = modes[tail_mask]
    out = loop.copy()
    ev = dual_action_eval(ham, out, M, zstar_warm=zstar_warm)
    for _ in range(max_iter):
        g = _grad_vec(ev, tail_modes, K)
        pre = np.sqrt(
            np.sum(np.repeat(_precond_weights(tail_modes), 2 * n) * g * g)
        )
        if pre < tol:
            return out, ev
        C = _hessian_matrix(tail_modes, tail_modes, *_alpha_beta_hats(ev.hess_grid))
        step = cho_solve(cho_factor(C), -g)
        xt = _loop_vec(out, tail_modes)
        alpha = 1.0
        for _ in range(30):
            cand = out.coef.copy()
            cand[K + tail_modes] = to_complex((xt + alpha * step).reshape(len(tail_modes), 2 * n))
            loop_try = FourierLoop(cand)
            ev_try = dual_action_eval(ham, loop_try, M, zstar_warm=ev.zstar)
            if ev_try.value <= ev.value + 1e-4 * alpha * float(step @ g):
                break
            alpha *= 0.5
        out, ev = loop_try, ev_try
    return out, ev


def reduced_eval(
    ham: TimeHamiltonian,
    head_vec: np.ndarray,
    head_n: int,
    K_tail: int,
    M: int | None = None,
    tail_warm: FourierLoop | None = None,
    zstar_warm=None,
    with_hessian: bool = False,
):
    """Value and gradient of the head-reduced functional psi.

    psi(head) = min over tails of Psi(head + tail); by the envelope theorem
    its gradient is the head block of grad Psi at the fiber minimizer, and
    its Hessian is the Schur complement A - B C^{-1} B^T of the full
    Hessian.  Returns (value, grad, info) with the minimizer loop and
    Fenchel data stashed in info for warm starts.
    """
    n = ham.dim_n
    head_modes = np.arange(1, head_n + 1)
    base = tail_warm.copy() if tail_warm is not None else FourierLoop.zeros(K_tail, n)
    base.coef[base.K + head_modes] = to_complex(
        np.asarray(head_vec, dtype=float).reshape(head_n, 2 * n)
    )
    loop, ev = tail_minimizer(ham, base, head_n, M=M, zstar_warm=zstar_warm)
    grad = _grad_vec(ev, head_modes, loop.K)
    info = {"loop": loop, "eval": ev}
    if with_hessian:
        ahat, bhat = _alpha_beta_hats(ev.hess_grid)
        modes = _full_modes(loop.K)
        tail_modes = modes[(modes < 0) | (modes > head_n)]
        A = _hessian_matrix(head_modes, head_modes, ahat, bhat)
        B = _hessian_matrix(head_modes, tail_modes, ahat, bhat)
        C = _hessian_matrix(tail_modes, tail_modes, ahat, bhat)
        info["hessian"] = A - B @ np.linalg.solve(C, B.T)
        info["tail_min_eig"] = float(np.linalg.eigvalsh(C).min())
    return ev.value, grad, info


@dataclass
class DualCriticalPoint:
    """A critical point of the dual action with its classification."""

    loop: FourierLoop
    value: float
    pre_norm: float
    index: int
    nullity: int
    tail_min_eig: float
    orbit: dict = field(default_factory=dict)

    @property
    def constant(self) -> bool:
        return bool(self.orbit.get("constant", False))


def _classify(ham, ev: DualEval, loop: FourierLoop, head_n: int, zero_tol=1e-6):
    ahat, bhat = _alpha_beta_hats(ev.hess_grid)
    modes = _full_modes(loop.K)
    head_modes = np.arange(1, head_n + 1)
    tail_modes = modes[(modes < 0) | (modes > head_n)]
    A = _hessian_matrix(head_modes, head_modes, ahat, bhat)
    B = _hessian_matrix(head_modes, tail_modes, ahat, bhat)
    C = _hessian_matrix(tail_modes, tail_modes, ahat, bhat)
    tail_eigs = np.linalg.eigvalsh(C)
    red = A - B @ np.linalg.solve(C, B.T)
    eigs = np.linalg.eigvalsh(red)
    index = int(np.sum(eigs < -zero_tol))
    nullity = int(np.sum(np.abs(eigs) <= zero_tol))
    return index, nullity, float(tail_eigs.min())


def _structured_seeds(ham: TimeHamiltonian, K: int, fracs=(0.45, 0.7, 0.9), mode_max=3):
    """Single-mode circle seeds per factor, mode order, and profile level.

    For autonomous Hamiltonians the circle phase is a symmetry, so one phase
    per circle suffices; a time-dependent term breaks the phase family into
    isolated points, so each circle is seeded at four phases.
    """
    body = ham.body
    n = body.dim_n
    phases = (1.0, 1.0j, -1.0, -1.0j) if ham.time_dependent else (1.0,)
    seeds = []
    for j in range(n):
        e = np.zeros(2 * n)
        e[2 * j] = 1.0
        g, _, _ = body.gauge(e)
        r_j = 1.0 / math.sqrt(g)
        for m in range(1, mode_max + 1):
            for frac in fracs:
                try:
                    s = ham.profile.level_for_action(frac * ham.profile.eta)
                except ValueError:
                    continue
                for phase in phases:
                    loop = FourierLoop.zeros(K, n)
                    loop.coef[K + m, j] = math.sqrt(s) * r_j * phase
                    seeds.append(loop)
    return seeds


def _sobol_seeds(ham: TimeHamiltonian, K: int, count: int, seed: int):
    body = ham.body
    n = body.dim_n
    if count <= 0:
        return []
    dim = 4 * n * min(K, 6)
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    raw = 2.0 * sob.random(1 << max(0, (count - 1).bit_length()))[:count] - 1.0
    s_mid = ham.profile.level_for_action(0.6 * ham.profile.eta)
    scale = 0.7 * math.sqrt(s_mid) * body.circumradius_bound
    seeds = []
    for row in raw:
        loop = FourierLoop.zeros(K, n)
        kmax = min(K, 6)
        vec = row.reshape(2 * kmax, 2 * n)
        for i, k in enumerate(list(range(-kmax, 0)) + list(range(1, kmax + 1))):
            loop.coef[K + k] = scale * to_complex(vec[i]) / (1.0 + k * k)
        seeds.append(loop)
    return seeds


def find_critical_points(
    ham: TimeHamiltonian,
    K_tail: int = 32,
    head_n: int = 8,
    M: int | None = None,
    n_sobol: int = 10,
    seed: int = 0,
    pre_tol: float = 1e-9,
    dedup_tol: float = 1e-6,
    extra_seeds=(),
) -> list[DualCriticalPoint]:
    """Locate critical points of the dual action functional.

    Levenberg-Marquardt root finding on grad Psi from structured circle
    seeds plus scrambled low-discrepancy seeds.  Converged points are
    deduplicated by coefficient distance (minimized over a phase shift when
    the Hamiltonian is autonomous) and classified by the spectrum of the
    head-reduced Hessian.
    """
    if M is None:
        M = 8 * K_tail
    seeds = list(extra_seeds) + _structured_seeds(ham, K_tail) + _sobol_seeds(
        ham, K_tail, n_sobol, seed
    )
    found: list[tuple[FourierLoop, DualEval]] = []
    for s in seeds:
        loop, ev, ok = _lm_root(ham, s, M, pre_tol=pre_tol)
        if not ok:
            continue
        dup = False
        for other, _ in found:
            if ham.time_dependent:
                d2 = float(np.sum(np.abs(other.coef - loop.coef) ** 2))
            else:
                d2 = other.aligned_distance2(loop)
            if d2 < dedup_tol**2:
                dup = True
                break
        if not dup:
            found.append((loop, ev))
    out = []
    for loop, ev in found:
        index, nullity, tail_min = _classify(ham, ev, loop, head_n)
        crit = DualCriticalPoint(
            loop=loop,
            value=ev.value,
            pre_norm=ev.pre_norm,
            index=index,
            nullity=nullity,
            tail_min_eig=tail_min,
        )
        crit.orbit = reconstruct_orbit(ham, loop, zstar=ev.zstar)
        out.append(crit)
    out.sort(key=lambda c: c.value)
    return out


def reconstruct_orbit(
    ham: TimeHamiltonian, loop: FourierLoop, zstar: np.ndarray | None = None, M: int | None = None
) -> dict:
    """Rebuild the 1-periodic Hamiltonian trajectory from a critical loop.

    The mean is recovered by Newton on the zero-mode equation
    integral of X_H(t, gamma + mean) dt = 0, warm started at the mean of
    the Fenchel points.  Reports the gauge level, the Reeb action
    (loop action / level), the covering multiplicity (gcd of active mode
    indices), and the L^2 residual of the Hamiltonian equation.
    """
    if M is None:
        M = 8 * loop.K
    n = loop.n
    pts = loop.grid(M)
    tgrid = np.arange(M) / M
    coef_norms = np.sqrt(np.sum(np.abs(loop.coef) ** 2, axis=-1))
    top = float(coef_norms.max())
    if top < 1e-10:
        mean = np.zeros(2 * n) if zstar is None else np.mean(zstar, axis=0)
        val, grad, _ = ham.eval(0.0, mean)
        return {
            "constant": True,
            "mean": mean,
            "level": float(ham.body.gauge(mean)[0]) if np.linalg.norm(mean) > 0 else 0.0,
            "reeb_action": 0.0,
            "multiplicity": 0,
            "residual": float(np.linalg.norm(grad)),
            "points": np.tile(mean, (M, 1)),
        }

    mean = np.mean(zstar, axis=0) if zstar is not None else np.zeros(2 * n)
    for _ in range(50):
        x = pts + mean
        _, grad, hess = ham.eval(tgrid, x)
        F = np.mean(apply_j(grad), axis=0)
        if np.linalg.norm(F) < 1e-13:
            break
        Jmat = np.mean(_j_rows_batch(hess), axis=0)
        mean = mean - np.linalg.solve(Jmat, F)
    x = pts + mean
    gval, grad, _ = ham.eval(tgrid, x)
    vel_true = apply_j(grad)
    dcoef = (2j * np.pi * np.arange(-loop.K, loop.K + 1))[:, None] * loop.coef
    vel_loop = to_real(M * np.fft.ifft(_place(dcoef, M, loop), axis=0))
    residual = float(np.sqrt(np.mean(np.sum((vel_loop - vel_true) ** 2, axis=-1))))

    glevel, _, _ = ham.body.gauge(x)
    level = float(np.mean(glevel))
    reeb_action = loop.action() / level
    active = [int(abs(k)) for k in range(-loop.K, loop.K + 1) if coef_norms[loop.K + k] > 1e-8 * top]
    multiplicity = int(math.gcd(*active)) if active else 0
    return {
        "constant": False,
        "mean": mean,
        "level": level,
        "level_spread": float(glevel.max() - glevel.min()),
        "reeb_action": float(reeb_action),
        "multiplicity": multiplicity,
        "residual": residual,
        "points": x,
    }


def _place(values: np.ndarray, M: int, loop: FourierLoop) -> np.ndarray:
    buf = np.zeros((M, loop.n), dtype=complex)
    buf[np.arange(-loop.K, loop.K + 1) % M] = values
    return buf


def _j_rows_batch(H: np.ndarray) -> np.ndarray:
    """J0 H for a batch of matrices, acting on the row index."""
    out = np.empty_like(H)
    out[..., 0::2, :] = -H[..., 1::2, :]
    out[..., 1::2, :] = H[..., 0::2, :]
    return out


def check_dual_inequality(
    ham: TimeHamiltonian,
    beta: FourierLoop,
    eta_loop: FourierLoop | None = None,
    beta_mean: np.ndarray | None = None,
    eta_mean: np.ndarray | None = None,
    M: int = 512,
) -> dict:
    """Check the duality estimate relating the direct and dual actions.

    For any loop beta and any eta supported on nonpositive modes,

        A_H(beta + eta) <= Psi(P beta) - (1/2) |P_- eta|_{1/2}^2,

    with P the mean-removing projector; equality holds exactly when
    beta' = X_H(beta + eta).  Returns both sides and the slack.
    """
    n = ham.dim_n
    if eta_loop is None:
        eta_loop = FourierLoop.zeros(1, n)
    neg = eta_loop.coef.copy()
    neg[eta_loop.K :] = 0.0
    eta_minus = FourierLoop(np.vstack([neg[: eta_loop.K], np.zeros((eta_loop.K + 1, n))]))
    if np.any(np.abs(eta_loop.coef[eta_loop.K + 1 :]) > 0):
        raise ValueError("eta must have no positive-frequency modes")

    x = beta.grid(M) + eta_loop.grid(M)
    if beta_mean is not None:
        x = x + np.asarray(beta_mean, dtype=float)
    if eta_mean is not None:
        x = x + np.asarray(eta_mean, dtype=float)
    tgrid = np.arange(M) / M
    coef = np.fft.fft(to_complex(x), axis=0) / M
    k = np.fft.fftfreq(M, d=1.0 / M)
    a_loop = float(np.pi * np.sum(k * np.sum(np.abs(coef) ** 2, axis=-1)))
    lhs = a_loop - float(np.mean(ham.value(tgrid, x)))

    psi = dual_action_eval(ham, beta, M=M).value
    rhs = psi - 0.5 * eta_minus.h_half_norm2()
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs}


def _merge_spectrum(values, tol=1e-7):
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def systole(
    body: ConvexBody,
    eta: float | None = None,
    K_tail: int = 32,
    head_n: int | None = None,
    seed: int = 0,
    n_sobol: int = 10,
    cross_tol: float = 1e-5,
    rho: float = 1e-8,
    keep_objects: bool = False,
) -> dict:
    """Systole of a convex body with a dual/shooting cross-validation.

    Runs the shooting oracle on the exact body, then the Clarke-dual
    pipeline on the profiled Hamiltonian (with the strictly convex core
    patch; bodies that are not uniformly convex are regularized by blending
    a factor ``rho`` of the round gauge, which moves actions by O(rho)).
    Every dual action must match a shooting action (including covering
    multiples) within ``cross_tol`` or an InconsistencyError is raised.
    Returns a result dictionary that doubles as the certificate payload.
    With ``keep_objects`` the dict gains a non-serializable "_objects"
    entry (orbits, critical points, Hamiltonian) that callers must strip
    before writing a certificate.
    """
    t_start = time.perf_counter()
    eta_given = eta is not None
    if eta is None:
        eta = 1.5 * math.pi * body.circumradius_bound**2

    orbits = find_closed_orbits(body, action_max=1.05 * eta, n_seeds=32, seed=seed)
    if not orbits:
        raise RuntimeError("shooting oracle found no closed orbits below the action cap")
    primitive = _merge_spectrum(
        [o.action / max(o.multiplicity, 1) for o in orbits], tol=1e-7
    )
    # Guard against the profile slope sitting on a multiple of an action,
    # which would create a continuum of critical levels in the linear zone.
    # A defaulted slope is nudged clear; an explicitly requested one is an
    # error so the caller's parameters are never silently changed.
    for _ in range(16):
        clear = all(
            abs(eta - m * a) > 1e-4
            for a in primitive
            for m in range(1, int(eta / a) + 2)
        )
        if clear:
            break
        if eta_given:
            raise InconsistencyError(
                f"eta={eta} is within 1e-4 of a multiple of a closed-orbit "
                "action; choose a different slope"
            )
        eta *= 1.003
    shoot_spectrum = _merge_spectrum(
        [m * a for a in primitive for m in range(1, int(1.02 * eta / a) + 1)]
    )
    t_shoot = time.perf_counter()

    dual_body = body if body.uniformly_convex else regularized(body, rho)
    ham = build_hamiltonian(dual_body, eta, {"type": "core"})
    _, h_hi = hessian_range(ham, s_max=ham.profile.base.r1 * 1.05, seed=seed)
    if head_n is None:
        head_n = min(max(6, int(math.ceil(h_hi / (2.0 * np.pi))) + 2), K_tail // 2)

    crits = find_critical_points(
        ham, K_tail=K_tail, head_n=head_n, n_sobol=n_sobol, seed=seed
    )
    dual_actions = _merge_spectrum(
        [
            c.orbit["reeb_action"]
            for c in crits
            if not c.constant and 0.0 < c.orbit["reeb_action"] < 0.999 * eta
        ]
    )
    if not dual_actions:
        raise RuntimeError("dual method found no nonconstant critical points")

    deltas = [min(abs(a - s) for s in shoot_spectrum) for a in dual_actions]
    worst = max(deltas)
    sys_dual = min(dual_actions)
    sys_shoot = min(o.action for o in orbits)
    if worst > cross_tol or abs(sys_dual - sys_shoot) > cross_tol:
        raise InconsistencyError(
            "dual and shooting spectra disagree: "
            f"dual={dual_actions}, shooting={shoot_spectrum}, "
            f"worst delta={worst:.3e}, systole dual={sys_dual:.12f} "
            f"shoot={sys_shoot:.12f}"
        )
    t_dual = time.perf_counter()

    coef_norm = [
        float(np.max(np.abs(c.loop.coef))) for c in crits if not c.constant
    ]
    tail_decay = []
    for c in crits:
        if c.constant:
            continue
        norms = np.sqrt(np.sum(np.abs(c.loop.coef) ** 2, axis=-1))
        top = norms.max()
        hi = max(norms[: K_tail // 4 + 1].max(), norms[-(K_tail // 4) :].max())
        tail_decay.append(float(hi / top) if top > 0 else 0.0)

    out = {
        "schema_version": 1,
        "body": body.spec,
        "regularized_rho": 0.0 if body.uniformly_convex else rho,
        "eta": float(eta),
        "K_tail": int(K_tail),
        "head_n": int(head_n),
        "M": int(8 * K_tail),
        "seed": int(seed),
        "systole": float(sys_dual),
        "systole_shooting": float(sys_shoot),
        "dual_spectrum": [float(a) for a in dual_actions],
        "shooting_spectrum": [float(a) for a in shoot_spectrum],
        "shooting_primitives": [float(a) for a in primitive],
        "spectrum_deltas": [float(d) for d in deltas],
        "worst_delta": float(worst),
        "cross_tol": float(cross_tol),
        "degenerate_orbits": [bool(o.degenerate) for o in orbits],
        "dual_nullities": [int(c.nullity) for c in crits if not c.constant],
        "dual_indices": [int(c.index) for c in crits if not c.constant],
        "dual_values": [float(c.value) for c in crits],
        "tail_decay": tail_decay,
        "max_coef": coef_norm,
        "time_shooting": t_shoot - t_start,
        "time_dual": t_dual - t_shoot,
        "time_total": time.perf_counter() - t_start,
    }
    if keep_objects:
        out["_objects"] = {"orbits": orbits, "crits": crits, "ham": ham, "body": body}
    return out
