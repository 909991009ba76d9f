"""Pure-NumPy successive-cancellation decoder.

Decision-identical twin of the compiled kernel in _sckernel.pyx, vectorized
across the batch dimension so the per-node Python overhead is amortized over
frames.  Used automatically when the extension is unavailable (see
bitpipes._backend); the compiled kernel is strongly preferred for long
blocks.
"""

from __future__ import annotations

import numpy as np


def _f(a, b, minsum):
    if minsum:
        return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    mags = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return mags + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def sc_decode_batch(llrs, frozen, minsum=True):
    """Decode each row of llrs; returns the (B, n) matrix of u decisions."""
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    frozen = np.asarray(frozen, dtype=np.uint8)
    batch, n = llrs.shape
    if n & (n - 1):
        raise ValueError(f"block length must be a power of two, got {n}")
    u = np.zeros((batch, n), dtype=np.uint8)

    def rec(llr, offset):
        size = llr.shape[1]
        if size == 1:
            if frozen[offset]:
                dec = np.zeros(batch, dtype=np.uint8)
            else:
                dec = (llr[:, 0] < 0).astype(np.uint8)
            u[:, offset] = dec
            return dec[:, None]
        h = size // 2
        a, b = llr[:, :h], llr[:, h:]
        x_left = rec(_f(a, b, minsum), offset)
        x_right = rec(b + (1.0 - 2.0 * x_left) * a, offset + h)
        return np.concatenate([x_left ^ x_right, x_right], axis=1)

    rec(llrs, 0)
    return u
