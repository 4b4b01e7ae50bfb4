"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy kernels
are used.  ``ELASTIC_PML_BACKEND=numpy`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _native

    _HAS_NATIVE = True
except ImportError:  # extension not built
    _native = None
    _HAS_NATIVE = False

_state = {
    "name": "native" if _HAS_NATIVE and os.environ.get("ELASTIC_PML_BACKEND", "") != "numpy" else "numpy",
    "threads": 1,
}


def has_native() -> bool:
    return _HAS_NATIVE


def active() -> str:
    return _state["name"]


def set_backend(name: str) -> None:
    if name not in ("native", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "native" and not _HAS_NATIVE:
        raise RuntimeError("compiled kernels are not available")
    _state["name"] = name


def set_threads(n: int) -> None:
    if n < 1:
        raise ValueError("thread count must be positive")
    _state["threads"] = int(n)


def threads() -> int:
    return _state["threads"]


def d1(u: np.ndarray, axis: int, h: float, periodic: bool, out: np.ndarray | None = None) -> np.ndarray:
    """SBP 4-2 first derivative along ``axis``, dispatched to the active backend."""
    n = u.shape[axis]
    if n < (5 if periodic else 12):
        raise ValueError(f"D1 needs at least {5 if periodic else 12} points along the axis, got {n}")
    if _state["name"] == "native" and u.dtype == np.float64:
        axis = axis % u.ndim
        outer = int(np.prod(u.shape[:axis], dtype=np.int64))
        inner = int(np.prod(u.shape[axis + 1 :], dtype=np.int64))
        src = np.ascontiguousarray(u).reshape(outer, n, inner)
        if out is None or not out.flags.c_contiguous:
            res = np.empty(u.shape)
        else:
            res = out
        _native.d1_blocks(src, res.reshape(outer, n, inner), h, periodic, _state["threads"])
        if out is not None and res is not out:
            out[...] = res
            return out
        return res
    return _kernels_py.d1(u, axis, h, periodic, out)


def diss3(u: np.ndarray, w: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    """``Delta^T diag(w) Delta u`` for the undivided third difference along ``axis``.

    ``u`` has a leading component axis that ``w`` lacks; along ``axis`` the
    weights have ``n - 3`` entries (``n`` when periodic).
    """
    n = u.shape[axis]
    if n < 4:
        raise ValueError(f"third differences need at least 4 points along the axis, got {n}")
    if w.ndim != u.ndim - 1:
        raise ValueError("weights must match the field without its leading component axis")
    if _state["name"] == "native" and u.dtype == np.float64:
        axis = axis % u.ndim
        if axis == 0:
            raise ValueError("dissipation acts along a spatial axis")
        outer = int(np.prod(u.shape[:axis], dtype=np.int64))
        inner = int(np.prod(u.shape[axis + 1 :], dtype=np.int64))
        wouter = int(np.prod(w.shape[: axis - 1], dtype=np.int64))
        wc = np.ascontiguousarray(w, dtype=np.float64).reshape(wouter, w.shape[axis - 1], inner)
        res = np.empty(u.shape)
        _native.diss3_blocks(np.ascontiguousarray(u).reshape(outer, n, inner), wc, res.reshape(outer, n, inner), periodic, _state["threads"])
        return res
    return _kernels_py.diss3(u, w, axis, periodic)
