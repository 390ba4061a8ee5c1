"""Conley-Zehnder indices of closed orbits via asymptotic operators.

An asymptotic operator A = -J0 d/dt - S(t) acts on loops in R^{2r}; its
spectrum is computed by a Fourier-Galerkin discretization, which is complex
Hermitian, and for r = 1 each eigenfunction is nowhere vanishing and carries
a winding number.  The Conley-Zehnder index is the sum of the winding of the
largest eigenvalue below a weight delta and the winding of the smallest one
at or above it.  An independent oracle computes the index from the
symplectic path Phi' = J0 S Phi: a rotation-angle count in rank one and the
crossing-form recipe in higher rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, expm

from .bodies import ConvexBody
from .linking import xi_frame
from .reeb import ClosedOrbit
from .symplectic import apply_j, j_matrix, omega


@dataclass
class AsymptoticOperator:
    """A = -J0 d/dt - S(t) on loops in R^{2r}, with S sampled uniformly."""

    S_grid: np.ndarray
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        S = np.asarray(self.S_grid, dtype=float)
        if S.ndim != 3 or S.shape[1] != S.shape[2] or S.shape[1] % 2:
            raise ValueError("S_grid must have shape (M, 2r, 2r)")
        asym = float(np.max(np.abs(S - np.swapaxes(S, 1, 2))))
        if asym > 1e-6 * (1.0 + float(np.max(np.abs(S)))):
            raise ValueError(f"S(t) is not symmetric (defect {asym:.3e})")
        self.S_grid = 0.5 * (S + np.swapaxes(S, 1, 2))

    @property
    def rank(self) -> int:
        return self.S_grid.shape[1] // 2

    def resampled(self, M: int) -> np.ndarray:
        """Trigonometric upsampling of S to M uniform grid points."""
        S = self.S_grid
        M0 = S.shape[0]
        if M == M0:
            return S
        if M < M0:
            raise ValueError("only upsampling is supported")
        spec = np.fft.fft(S, axis=0)
        out = np.zeros((M,) + S.shape[1:], dtype=complex)
        h = M0 // 2
        if M0 % 2:
            out[: h + 1] = spec[: h + 1]
            out[M - h :] = spec[h + 1 :]
        else:
            out[:h] = spec[:h]
            out[M - h + 1 :] = spec[h + 1 :]
            out[h] = 0.5 * spec[h]
            out[M - h] = 0.5 * spec[h]
        return (np.fft.ifft(out, axis=0) * (M / M0)).real


@dataclass
class SpectralData:
    """Eigenvalues of an asymptotic operator with windings (rank one only)."""

    eigenvalues: np.ndarray
    windings: np.ndarray | None
    rank: int
    K: int

    def rows(self, tol: float = 1e-8):
        """Clustered (eigenvalue, multiplicity, winding) rows for reporting."""
        out = []
        i = 0
        vals = self.eigenvalues
        while i < len(vals):
            j = i
            while j + 1 < len(vals) and vals[j + 1] - vals[i] <= tol * (1 + abs(vals[i])):
                j += 1
            wind = int(self.windings[i]) if self.windings is not None else None
            out.append((float(np.mean(vals[i : j + 1])), j - i + 1, wind))
            i = j + 1
        return out


def _winding_of(fhat: np.ndarray, grid: int = 1024) -> int:
    """Winding of the real eigenfunction recovered from Fourier data (r=1)."""
    K = fhat.shape[0] // 2
    buf = np.zeros((grid, 2), dtype=complex)
    buf[np.arange(-K, K + 1) % grid] = fhat
    f = grid * np.fft.ifft(buf, axis=0)
    cand = []
    for x in (f.real, f.imag):
        r = np.hypot(x[:, 0], x[:, 1])
        cand.append((float(r.min()), x))
    minr, x = max(cand, key=lambda p: p[0])
    if minr <= 1e-9 * float(np.max(np.abs(x)) + 1e-300):
        raise ValueError("eigenfunction vanishes on the grid; cannot assign winding")
    ang = np.angle(x[:, 0] + 1j * x[:, 1])
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = np.mod(d + np.pi, 2 * np.pi) - np.pi
    return int(round(float(np.sum(d) / (2 * np.pi))))


def operator_spectrum(op: AsymptoticOperator, K: int = 24, window: float | None = None) -> SpectralData:
    """Fourier-Galerkin spectrum of A = -J0 d/dt - S(t).

    The block matrix A[k, l] = -2 pi i k J0 delta_kl - Shat(k - l) over modes
    |k| <= K is Hermitian; eigenvalues are exact up to spectrally small
    truncation error for smooth S.  For rank one operators each eigenvector
    is converted to a real eigenfunction and its winding recorded.
    """
    r = op.rank
    d = 2 * r
    Mg = max(4 * K + 4, op.S_grid.shape[0])
    S = op.resampled(Mg)
    Shat = np.fft.fft(S, axis=0) / Mg
    modes = np.arange(-K, K + 1)
    kr = modes[:, None]
    kc = modes[None, :]
    blocks = -Shat[(kr - kc) % Mg].astype(complex)
    J = j_matrix(r)
    blocks -= (2j * np.pi * np.where(kr == kc, kr, 0))[..., None, None] * J
    D = (2 * K + 1) * d
    A = blocks.transpose(0, 2, 1, 3).reshape(D, D)
    herm = float(np.max(np.abs(A - A.conj().T)))
    if herm > 1e-9 * (1 + float(np.max(np.abs(A)))):
        raise RuntimeError(f"Galerkin matrix lost Hermiticity ({herm:.3e})")
    vals, vecs = eigh(A)
    if window is not None:
        keep = np.abs(vals) <= window
        vals, vecs = vals[keep], vecs[:, keep]
    windings = None
    if r == 1:
        windings = np.array(
            [_winding_of(vecs[:, i].reshape(2 * K + 1, d)) for i in range(vals.size)]
        )
    return SpectralData(eigenvalues=vals, windings=windings, rank=r, K=K)


def conley_zehnder(
    source: AsymptoticOperator | SpectralData,
    delta: float = 0.0,
    K: int = 24,
    zero_tol: float = 1e-8,
) -> tuple[int, int]:
    """Conley-Zehnder index and kernel count from spectral windings (rank 1).

    cz = winding(largest eigenvalue < delta) + winding(smallest >= delta);
    the second value counts eigenvalues within zero_tol of delta.
    """
    spec = source if isinstance(source, SpectralData) else operator_spectrum(source, K=K)
    if spec.windings is None:
        raise ValueError("winding-based index requires a rank-one operator")
    vals, winds = spec.eigenvalues, spec.windings
    below = vals < delta
    if not np.any(below) or np.all(below):
        raise ValueError("spectral window does not straddle the weight; increase K")
    i_lo = int(np.nonzero(below)[0][-1])
    i_hi = int(np.nonzero(~below)[0][0])
    cz = int(winds[i_lo] + winds[i_hi])
    p = int(np.sum(np.abs(vals - delta) <= zero_tol))
    return cz, p


def _sample_S_batch(op: AsymptoticOperator, ts: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of S at arbitrary times, batched."""
    S = op.S_grid
    M = S.shape[0]
    spec = np.fft.fft(S, axis=0) / M
    modes = np.fft.fftfreq(M, d=1.0 / M)
    phases = np.exp(2j * np.pi * np.outer(np.asarray(ts, dtype=float), modes))
    return np.real(np.tensordot(phases, spec, axes=(1, 0)))


def _symplectic_path(op: AsymptoticOperator, steps: int) -> np.ndarray:
    """Path Phi solving Phi' = J0 S(t) Phi.

    Fourth-order commutator-free Magnus steps (two exponentials per step,
    Gauss-Legendre samples); each factor is the exponential of a Hamiltonian
    matrix, so the path stays symplectic to rounding.  The accuracy matters:
    monodromies of weakly split orbits carry structure at the size of the
    splitting, far below the reach of low-order stepping.
    """
    d = op.S_grid.shape[1]
    h = 1.0 / steps
    root3 = np.sqrt(3.0)
    t0 = np.arange(steps) * h
    S1 = _sample_S_batch(op, t0 + (0.5 - root3 / 6.0) * h)
    S2 = _sample_S_batch(op, t0 + (0.5 + root3 / 6.0) * h)
    B1 = np.empty_like(S1)
    B1[:, 0::2, :] = -S1[:, 1::2, :]
    B1[:, 1::2, :] = S1[:, 0::2, :]
    B2 = np.empty_like(S2)
    B2[:, 0::2, :] = -S2[:, 1::2, :]
    B2[:, 1::2, :] = S2[:, 0::2, :]
    a1 = (3.0 - 2.0 * root3) / 12.0
    a2 = (3.0 + 2.0 * root3) / 12.0
    E_late = expm(h * (a1 * B1 + a2 * B2))
    E_early = expm(h * (a2 * B1 + a1 * B2))
    Phi = np.empty((steps + 1, d, d))
    Phi[0] = np.eye(d)
    for j in range(steps):
        Phi[j + 1] = E_late[j] @ (E_early[j] @ Phi[j])
    return Phi


def _rotation_index_rank1(Phi: np.ndarray) -> int:
    """Rotation-number count of the index for paths in Sp(2)."""
    tr = Phi[:, 0, 0] + Phi[:, 1, 1]
    skew = Phi[:, 1, 0] - Phi[:, 0, 1]
    ang = np.where(
        np.abs(tr) < 2.0,
        np.sign(skew) * np.arccos(np.clip(tr / 2.0, -1.0, 1.0)),
        np.where(tr >= 2.0, 0.0, np.pi),
    )
    d = np.diff(ang)
    d = np.mod(d + np.pi, 2 * np.pi) - np.pi
    theta = float(np.sum(d))
    tr_end = float(tr[-1])
    if abs(tr_end) < 2.0 - 1e-9:
        return 2 * int(np.floor(theta / (2 * np.pi))) + 1
    if tr_end >= 2.0:
        return 2 * int(np.round(theta / (2 * np.pi)))
    return 2 * int(np.round((theta - np.pi) / (2 * np.pi))) + 1


def _signature(M: np.ndarray, tol: float) -> int:
    eigs = np.linalg.eigvalsh(M)
    return int(np.sum(eigs > tol) - np.sum(eigs < -tol))


def _crossing_form(Phi_t: np.ndarray, S_t: np.ndarray, sv_tol: float) -> np.ndarray:
    """Quadratic form <v, S v> on ker(Phi - I) in an orthonormal kernel basis."""
    _, sv, Vt = np.linalg.svd(Phi_t - np.eye(Phi_t.shape[0]))
    ker = Vt[sv < sv_tol]
    return ker @ S_t @ ker.T


def _kernel_form(Phi_t: np.ndarray, S_t: np.ndarray, scale: float) -> np.ndarray:
    """Crossing form at a grid point, with the kernel tolerance set from the
    singular value gap so the kernel dimension is read off the matrix itself."""
    _, sv, Vt = np.linalg.svd(Phi_t - np.eye(Phi_t.shape[0]))
    sv_tol = max(10.0 * sv[-1], 1e-8 * scale)
    ker = Vt[sv < sv_tol]
    if ker.shape[0] == 0:
        ker = Vt[-1:]
    return ker @ S_t @ ker.T


def conley_zehnder_rotation(op: AsymptoticOperator, steps: int = 2048) -> int:
    """Index of the path Phi' = J0 S Phi by rotation/crossing counting.

    Rank one paths use the continuous rotation angle of the Salamon-Zehnder
    type.  Higher rank paths sum crossing-form signatures: 1/2 sgn S(0) at
    t = 0 plus sgn of <v, S(t*) v> on ker(Phi(t*) - I) at interior
    crossings.  Odd-kernel crossings are sign changes of det(Phi(t) - I)
    between samples of significant magnitude (a hyperbolic excursion of an
    eigenvalue pair through 1 then shows up as two nearby sign changes, each
    counted once); tangential even-kernel crossings are dips of |det| to the
    noise floor without a sign change.  A degenerate end contributes half
    the signature of its crossing form.
    """
    Phi = _symplectic_path(op, steps)
    if op.rank == 1:
        return _rotation_index_rank1(Phi)

    d = Phi.shape[-1]
    S0 = _sample_S(op, 0.0)
    scale = 1.0 + float(np.max(np.abs(Phi)))
    g = np.linalg.det(Phi - np.eye(d))
    gscale = float(np.max(np.abs(g)))
    if gscale == 0.0:
        raise RuntimeError("det(Phi - I) vanishes identically")
    thresh = 1e-5 * gscale

    total = 0.5 * _signature(S0, 1e-12 * (1 + float(np.max(np.abs(S0)))))

    sig_idx = [i for i in range(steps + 1) if abs(g[i]) > thresh]
    if not sig_idx:
        raise RuntimeError("path is degenerate along its whole length")
    end_degenerate = abs(g[-1]) < 1e-8 * gscale
    if not end_degenerate and sig_idx[-1] != steps:
        # A crossing just before t = 1 leaves no significant sample after it;
        # the endpoint sign is still trustworthy above the noise floor.
        sig_idx.append(steps)

    # Sign changes between consecutive significant samples: simple zeros.
    counted = []
    for a, b in zip(sig_idx[:-1], sig_idx[1:]):
        if g[a] * g[b] > 0:
            continue
        idx = a + int(np.argmin(np.abs(g[a : b + 1])))
        Q = _kernel_form(Phi[idx], _sample_S(op, idx / steps), scale)
        total += _signature(Q, 1e-12)
        counted.append(idx)

    # Local minima of |g| without a sign change: tangential crossings, where
    # an eigenvalue pair touches 1 and turns back.  The parabola through the
    # three samples must reach the noise floor (the sub-threshold window of a
    # quadratic zero can be narrower than a step, so the samples themselves
    # need not).  The kernel dimension is read from the matrix; an indefinite
    # or vanishing form contributes nothing, as for a grazing touch.
    ag = np.abs(g)
    first_sig = sig_idx[0]
    for i in range(first_sig + 1, steps):
        if not (ag[i] <= ag[i - 1] and ag[i] < ag[i + 1] and ag[i] < 1e-2 * gscale):
            continue
        if g[i - 1] * g[i] < 0 or g[i] * g[i + 1] < 0:
            continue
        if any(abs(i - j) <= 2 for j in counted):
            continue
        denom = g[i - 1] - 2.0 * g[i] + g[i + 1]
        pmin = g[i] if denom == 0 else g[i] - (g[i + 1] - g[i - 1]) ** 2 / (8.0 * denom)
        if abs(pmin) > 1e-6 * gscale:
            continue
        Q = _kernel_form(Phi[i], _sample_S(op, i / steps), scale)
        eigs = np.linalg.eigvalsh(Q)
        if np.any(np.abs(eigs) < 1e-10 * (1 + float(np.max(np.abs(eigs))))):
            # Degenerate form: average the signatures just before and after.
            for j in (i - 1, i + 1):
                total += 0.5 * _signature(
                    _kernel_form(Phi[j], _sample_S(op, j / steps), scale), 1e-12
                )
        else:
            total += int(np.sum(eigs > 1e-12) - np.sum(eigs < -1e-12))
    if end_degenerate:
        Q = _kernel_form(Phi[-1], _sample_S(op, 1.0), scale)
        total += 0.5 * _signature(Q, 1e-12)

    out = float(total)
    if abs(out - round(out)) > 1e-6:
        raise RuntimeError(f"crossing index did not sum to an integer: {out}")
    return int(round(out))


def _sample_S(op: AsymptoticOperator, t: float) -> np.ndarray:
    S = op.S_grid
    M = S.shape[0]
    spec = np.fft.fft(S, axis=0) / M
    modes = np.fft.fftfreq(M, d=1.0 / M)
    phases = np.exp(2j * np.pi * modes * t)
    return np.real(np.tensordot(phases, spec, axes=(0, 0)))


def transverse_linearization(
    body: ConvexBody, orbit: ClosedOrbit | np.ndarray, period: float | None = None
) -> AsymptoticOperator:
    """Asymptotic operator of the linearized Reeb flow transverse to an orbit.

    The orbit (sampled uniformly in Reeb time) is reparametrized to the unit
    circle; in the symplectically normalized frame (w1, w2) from xi_frame
    the transverse part of the linearization T J0 hess G - d/dt has
    coefficient matrix C(t), extracted symplectically, and S = -J2 C is the
    symmetric potential of the operator.
    """
    if isinstance(orbit, ClosedOrbit):
        pts, T = orbit.points, orbit.period
    else:
        pts = np.asarray(orbit, dtype=float)
        if period is None:
            raise ValueError("period is required when passing raw points")
        T = float(period)
    if pts.shape[-1] != 4:
        raise ValueError("transverse linearization is implemented for R^4")
    M = pts.shape[0]
    _, grad, hess = body.gauge(pts)
    w1, w2 = xi_frame(pts, normals=grad)

    def spectral_derivative(W):
        spec = np.fft.fft(W, axis=0)
        k = np.fft.fftfreq(M, d=1.0 / M)
        return np.real(np.fft.ifft(2j * np.pi * k[:, None] * spec, axis=0))

    C = np.empty((M, 2, 2))
    for i, w in enumerate((w1, w2)):
        Dw = T * apply_j(np.einsum("mij,mj->mi", hess, w)) - spectral_derivative(w)
        C[:, 0, i] = omega(Dw, w2)
        C[:, 1, i] = omega(w1, Dw)
    S = np.empty_like(C)
    S[:, 0, :] = C[:, 1, :]
    S[:, 1, :] = -C[:, 0, :]
    asym = float(np.max(np.abs(S - np.swapaxes(S, 1, 2))))
    if asym > 1e-6 * (1.0 + float(np.max(np.abs(S)))):
        raise RuntimeError(f"transverse potential failed symmetry check ({asym:.3e})")
    return AsymptoticOperator(S_grid=0.5 * (S + np.swapaxes(S, 1, 2)), extras={"period": T})


def hamiltonian_linearization(ham, points: np.ndarray) -> AsymptoticOperator:
    """Full-rank asymptotic operator S(t) = hess H(t, x(t)) along a 1-periodic
    trajectory sampled uniformly on [0, 1)."""
    pts = np.asarray(points, dtype=float)
    tgrid = np.arange(pts.shape[0]) / pts.shape[0]
    return AsymptoticOperator(S_grid=ham.hess(tgrid, pts))


def fredholm_indices(kind: str, data: dict) -> int:
    """Fredholm index bookkeeping for punctured curves and their operators.

    kind = "curve": (n - 3) chi + 2 c1 + sum CZ(positive) - sum CZ(negative).
    kind = "weighted-operator": n chi + 2 c1 + sum CZ^{-delta}(positive)
    - sum CZ^{delta}(negative), with the delta-shifted indices supplied by
    the caller.
    """
    n = int(data["n"])
    chi = int(data["chi"])
    c1 = int(data.get("c1", 0))
    pos = [int(v) for v in data.get("cz_positive", [])]
    neg = [int(v) for v in data.get("cz_negative", [])]
    if kind == "curve":
        return (n - 3) * chi + 2 * c1 + sum(pos) - sum(neg)
    if kind == "weighted-operator":
        return n * chi + 2 * c1 + sum(pos) - sum(neg)
    raise ValueError(f"unknown index kind: {kind!r}")
