"""Initial data and body-force sources."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def gaussian_initial_data(x: np.ndarray, y: np.ndarray, center: tuple[float, float], coefficient: float = 20.0) -> np.ndarray:
    """Both displacement components equal to ``exp(-c ((x - xs)^2 + (y - ys)^2))``.

    Returns a ``(2, ny, nx)`` array; velocities and auxiliary fields start at zero.
    """
    xs, ys = center
    g = np.exp(-coefficient * ((x - xs) ** 2 + (y - ys) ** 2))
    return np.array([g, g])


def moment_time_function(t: float, t0: float = 0.215, width: float = 0.15) -> float:
    """``g(t) = exp(-(t - t0)^2 / width)``."""
    return math.exp(-((t - t0) ** 2) / width)


@dataclass(frozen=True)
class MomentSource:
    """Explosive moment-tensor source ``F = g(t) M0 grad f_delta``.

    ``f_delta`` is a sum of normalized Gaussians
    ``exp(-((x - xi)^2 / (2 s1) + (y - yi)^2 / (2 s2))) / (2 pi sqrt(s1 s2))``
    over the source locations; its gradient is evaluated in closed form.
    """

    locations: tuple[tuple[float, float], ...]
    s1: float
    s2: float
    M0: float = 1000.0
    t0: float = 0.215
    width: float = 0.15
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.s1 <= 0 or self.s2 <= 0:
            raise ValueError("source widths s1, s2 must be positive")
        if not self.locations:
            raise ValueError("at least one source location is required")

    @classmethod
    def from_spacing(cls, locations, h: float, M0: float = 1000.0) -> "MomentSource":
        """Default widths ``s1 = s2 = 0.5 h``."""
        return cls(tuple(tuple(map(float, p)) for p in locations), 0.5 * h, 0.5 * h, M0)

    def delta(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        norm = 1.0 / (2.0 * math.pi * math.sqrt(self.s1 * self.s2))
        out = np.zeros(np.broadcast(x, y).shape)
        for xi, yi in self.locations:
            out += norm * np.exp(-((x - xi) ** 2 / (2 * self.s1) + (y - yi) ** 2 / (2 * self.s2)))
        return out

    def grad_delta(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Closed-form ``grad f_delta``, shape ``(2, ...)``."""
        norm = 1.0 / (2.0 * math.pi * math.sqrt(self.s1 * self.s2))
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for xi, yi in self.locations:
            e = norm * np.exp(-((x - xi) ** 2 / (2 * self.s1) + (y - yi) ** 2 / (2 * self.s2)))
            gx -= (x - xi) / self.s1 * e
            gy -= (y - yi) / self.s2 * e
        return np.array([gx, gy])

    def g(self, t: float) -> float:
        return moment_time_function(t, self.t0, self.width)

    def __call__(self, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.g(t) * self.M0 * self.grad_delta(x, y)

    def layer_forcing(self, grids):
        """A callable ``t -> [force per layer]`` with the spatial part cached."""
        spatial = []
        for g in grids:
            s = self.M0 * self.grad_delta(g.x, g.y)
            spatial.append(s if np.any(np.abs(s) > 1e-300) else None)

        def force(t: float):
            a = self.g(t)
            return [None if s is None else a * s for s in spatial]

        return force


def moment_source(t: float, x, y, source: MomentSource) -> np.ndarray:
    return source(t, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
