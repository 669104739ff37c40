"""Banded Toeplitz kernel-weight sums on the uniform time grid.

On the grid t_i = i/n every kernel moment sum
``sum_j c(j - i) v_j`` with ``c(d) = ((d/(nb))^l) K(d/(nb)) / (nb)`` is a
correlation with a fixed coefficient stencil, evaluated here with FFTs.
The stencil is exactly zero outside the kernel support, so the FFT path
produces the same values (up to roundoff far below the contracts) as the
untruncated double loop.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as _fft

__all__ = ["kernel_stencil", "apply_stencil", "StencilSet"]


def kernel_stencil(n: int, b: float, kernel, order: int) -> np.ndarray:
    """Coefficient stencil c[d + W] for offsets d = -W..W.

    c(d) = ((d/(nb))^order) * K(d/(nb)) / (nb), with 0^0 := 1.
    """
    nb = n * b
    w = min(n - 1, int(np.ceil(nb)))
    d = np.arange(-w, w + 1, dtype=float)
    u = d / nb
    ku = kernel(u)
    if order == 0:
        c = ku
    else:
        c = (u**order) * ku
    return c / nb


def _correlate(values: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """out[i] = sum_d stencil[d + W] * values[i + d], edges treated as zero."""
    n = values.shape[0]
    w = (stencil.shape[0] - 1) // 2
    size = _fft.next_fast_len(n + 2 * w)
    vhat = _fft.rfft(values, n=size, axis=0)
    khat = _fft.rfft(stencil[::-1], n=size)
    shape = (-1,) + (1,) * (values.ndim - 1)
    full = _fft.irfft(vhat * khat.reshape(shape), n=size, axis=0)
    return np.ascontiguousarray(full[w : w + n])


def apply_stencil(values: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """Correlate ``values`` (n or n-by-q) with a single stencil."""
    v = np.asarray(values, dtype=float)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    out = _correlate(v, stencil)
    return out[:, 0] if squeeze else out


class StencilSet:
    """Several stencils applied to the same values with one forward FFT.

    All stencils are zero-padded to a common width so the transforms share a
    single FFT length.  Used in the bootstrap loops where the same Gaussian
    panel is filtered by every (bandwidth, order) pair.
    """

    def __init__(self, n: int, stencils: list[np.ndarray]):
        self.n = int(n)
        w_max = max((s.shape[0] - 1) // 2 for s in stencils)
        self._w = w_max
        self._size = _fft.next_fast_len(self.n + 2 * w_max)
        self._khats = []
        for s in stencils:
            pad = w_max - (s.shape[0] - 1) // 2
            padded = np.pad(s, (pad, pad))
            self._khats.append(_fft.rfft(padded[::-1], n=self._size))

    def apply(self, values: np.ndarray) -> list[np.ndarray]:
        v = np.asarray(values, dtype=float)
        squeeze = v.ndim == 1
        if squeeze:
            v = v[:, None]
        vhat = _fft.rfft(v, n=self._size, axis=0)
        out = []
        shape = (-1,) + (1,) * (v.ndim - 1)
        for khat in self._khats:
            full = _fft.irfft(vhat * khat.reshape(shape), n=self._size, axis=0)
            res = np.ascontiguousarray(full[self._w : self._w + self.n])
            out.append(res[:, 0] if squeeze else res)
        return out
