"""Mean-free loops in R^{2n} as truncated Fourier series.

A loop is stored through its complex packing gamma(t) = sum_k v_k e^{2 pi I k t}
with coefficients v_k in C^n for 0 < |k| <= K and no constant mode.  Since
gamma takes values in R^{2n} and not R^n, positive and negative coefficients
are independent; the real dimension is 4 n K.
"""

from __future__ import annotations

import numpy as np

from .symplectic import to_complex, to_real


class FourierLoop:
    """Truncated Fourier series of a mean-free loop.

    Parameters
    ----------
    coef : complex ndarray, shape (2K + 1, n)
        Coefficient v_k stored at row k + K; the middle row (k = 0) is
        forced to zero.
    """

    def __init__(self, coef: np.ndarray):
        coef = np.array(coef, dtype=complex)
        if coef.ndim != 2 or coef.shape[0] % 2 == 0:
            raise ValueError("coef must have shape (2K + 1, n)")
        coef[coef.shape[0] // 2] = 0.0
        self.coef = coef
        self.K = coef.shape[0] // 2
        self.n = coef.shape[1]
        self._modes = np.arange(-self.K, self.K + 1)

    @classmethod
    def zeros(cls, K: int, n: int) -> "FourierLoop":
        return cls(np.zeros((2 * K + 1, n), dtype=complex))

    @classmethod
    def from_grid(cls, points: np.ndarray, K: int) -> "FourierLoop":
        """Project uniform samples of a loop onto modes 0 < |k| <= K."""
        pts = np.asarray(points)
        if pts.dtype != complex:
            pts = to_complex(np.asarray(pts, dtype=float))
        M = pts.shape[0]
        if M < 2 * K + 1:
            raise ValueError("need at least 2K + 1 samples")
        spec = np.fft.fft(pts, axis=0) / M
        coef = np.zeros((2 * K + 1, pts.shape[1]), dtype=complex)
        for k in range(1, K + 1):
            coef[K + k] = spec[k]
            coef[K - k] = spec[M - k]
        return cls(coef)

    def copy(self) -> "FourierLoop":
        return FourierLoop(self.coef.copy())

    def pad_to(self, K_new: int) -> "FourierLoop":
        if K_new < self.K:
            raise ValueError("can only pad to a larger truncation order")
        coef = np.zeros((2 * K_new + 1, self.n), dtype=complex)
        coef[K_new - self.K : K_new + self.K + 1] = self.coef
        return FourierLoop(coef)

    def _place(self, values: np.ndarray, M: int) -> np.ndarray:
        """Scatter per-mode values (2K+1, n) into an FFT buffer of length M."""
        if M < 2 * self.K + 1:
            raise ValueError("grid too coarse for the truncation order")
        buf = np.zeros((M, self.n), dtype=complex)
        buf[self._modes % M] = values
        return buf

    def grid_complex(self, M: int) -> np.ndarray:
        """Loop samples gamma(i / M) in the complex packing, shape (M, n)."""
        return M * np.fft.ifft(self._place(self.coef, M), axis=0)

    def grid(self, M: int) -> np.ndarray:
        """Loop samples as real points, shape (M, 2n)."""
        return to_real(self.grid_complex(M))

    def w_grid(self, M: int) -> np.ndarray:
        """Samples of w = -J0 gamma', i.e. sum_k 2 pi k v_k e^{2 pi I k t}."""
        vals = (2.0 * np.pi * self._modes)[:, None] * self.coef
        return to_real(M * np.fft.ifft(self._place(vals, M), axis=0))

    def action(self) -> float:
        """Symplectic loop action: pi * sum_k k |v_k|^2."""
        return float(np.pi * np.sum(self._modes * np.sum(np.abs(self.coef) ** 2, axis=-1)))

    def h_half_norm2(self) -> float:
        """Squared H^{1/2} seminorm: 2 pi * sum_k |k| |v_k|^2."""
        return float(
            2.0 * np.pi * np.sum(np.abs(self._modes) * np.sum(np.abs(self.coef) ** 2, axis=-1))
        )

    def norm2(self) -> float:
        """Squared L^2 norm of the loop."""
        return float(np.sum(np.abs(self.coef) ** 2))

    def shift(self, s: float) -> "FourierLoop":
        """Phase-shifted loop t -> gamma(t + s)."""
        return FourierLoop(self.coef * np.exp(2j * np.pi * self._modes * s)[:, None])

    def _overlap_coeffs(self, other: "FourierLoop") -> np.ndarray:
        if other.n != self.n:
            raise ValueError("loop dimensions differ")
        K = max(self.K, other.K)
        a, b = self.pad_to(K), other.pad_to(K)
        return np.sum(np.conj(a.coef) * b.coef, axis=-1)

    def best_alignment(self, other: "FourierLoop") -> tuple[float, float]:
        """Phase s maximizing Re <self, other(. + s)>_{L^2}, and the maximum.

        Evaluates the overlap on a fine zero-padded grid, then polishes the
        argmax with a few Newton steps.
        """
        c = self._overlap_coeffs(other)
        K = c.size // 2
        modes = np.arange(-K, K + 1)
        P = max(256, 8 * (2 * K + 1))
        buf = np.zeros(P, dtype=complex)
        buf[modes % P] = c
        vals = (P * np.fft.ifft(buf)).real
        i0 = int(np.argmax(vals))
        s = i0 / P

        tw = 2j * np.pi * modes
        for _ in range(8):
            e = np.exp(tw * s)
            d1 = np.real(np.sum(tw * c * e))
            d2 = np.real(np.sum(tw**2 * c * e))
            if d2 >= 0 or abs(d1) < 1e-15:
                break
            s -= d1 / d2
        f = float(np.real(np.sum(c * np.exp(tw * s))))
        return float(s % 1.0), f

    def aligned_distance2(self, other: "FourierLoop") -> float:
        """min over phase shifts s of the squared L^2 distance to other(. + s)."""
        _, best = self.best_alignment(other)
        return max(self.norm2() + other.norm2() - 2.0 * best, 0.0)
