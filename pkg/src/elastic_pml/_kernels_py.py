"""Pure-numpy stencil kernels; the reference implementation for the compiled ones."""

from __future__ import annotations

import numpy as np

_BND = np.array(
    [
        [-24 / 17, 59 / 34, -4 / 17, -3 / 34, 0.0, 0.0],
        [-1 / 2, 0.0, 1 / 2, 0.0, 0.0, 0.0],
        [4 / 43, -59 / 86, 0.0, 59 / 86, -4 / 43, 0.0],
        [3 / 98, 0.0, -59 / 98, 0.0, 32 / 49, -4 / 49],
    ]
)


def d1(u: np.ndarray, axis: int, h: float, periodic: bool, out: np.ndarray | None = None) -> np.ndarray:
    """SBP 4-2 first derivative of ``u`` along ``axis``."""
    if out is None:
        out = np.empty_like(u, dtype=float)
    a = np.moveaxis(u, axis, -1)
    o = np.moveaxis(out, axis, -1)
    inv12h = 1.0 / (12.0 * h)
    if periodic:
        o[...] = (
            8.0 * (np.roll(a, -1, axis=-1) - np.roll(a, 1, axis=-1)) - (np.roll(a, -2, axis=-1) - np.roll(a, 2, axis=-1))
        ) * inv12h
        return out
    o[..., 4:-4] = (8.0 * (a[..., 5:-3] - a[..., 3:-5]) - (a[..., 6:-2] - a[..., 2:-6])) * inv12h
    inv_h = 1.0 / h
    # boundary rows in difference form too
    lo = a[..., :6]
    hi = a[..., :-7:-1]
    for i in range(4):
        o[..., i] = ((lo - lo[..., i : i + 1]) @ _BND[i]) * inv_h
        o[..., -1 - i] = -((hi - hi[..., i : i + 1]) @ _BND[i]) * inv_h
    return out


def diss3(u: np.ndarray, w: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    """``Delta^T diag(w) Delta u`` with the undivided third difference along ``axis``."""
    a = np.moveaxis(u, axis, -1)
    wt = np.moveaxis(w, axis, -1)
    if periodic:
        z = wt * (np.roll(a, -3, axis=-1) - 3.0 * np.roll(a, -2, axis=-1) + 3.0 * np.roll(a, -1, axis=-1) - a)
        o = -z + 3.0 * np.roll(z, 1, axis=-1) - 3.0 * np.roll(z, 2, axis=-1) + np.roll(z, 3, axis=-1)
        return np.moveaxis(o, -1, axis)
    z = wt * (a[..., 3:] - 3.0 * a[..., 2:-1] + 3.0 * a[..., 1:-2] - a[..., :-3])
    o = np.zeros(a.shape)
    o[..., :-3] -= z
    o[..., 1:-2] += 3.0 * z
    o[..., 2:-1] -= 3.0 * z
    o[..., 3:] += z
    return np.moveaxis(o, -1, axis)
