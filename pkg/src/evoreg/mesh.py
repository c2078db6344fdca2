"""Graded time meshes clustering nodes at the initial time."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GradedMesh:
    """Nodes t_k = T (k/K)^r on [0, T].

    r = 1 gives the uniform mesh; r > 1 concentrates nodes near t = 0,
    which is where weighted-space data is allowed to blow up.
    """

    T: float
    K: int
    r: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.K < 1:
            raise ValueError(f"need at least one step, got K={self.K}")
        if not (np.isfinite(self.r) and self.r >= 1.0):
            raise ValueError(f"grading exponent must be >= 1, got {self.r}")

    @cached_property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.K + 1, dtype=float)
        t = self.T * (k / self.K) ** self.r
        t[-1] = self.T  # pin the endpoint against rounding
        return t

    @cached_property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refined(self, factor: int = 2) -> "GradedMesh":
        """Same horizon and grading with factor times as many steps."""
        if factor < 1:
            raise ValueError("refinement factor must be a positive integer")
        return GradedMesh(self.T, self.K * factor, self.r)

    @property
    def is_uniform(self) -> bool:
        return self.r == 1.0


def uniform_mesh(T: float, K: int) -> GradedMesh:
    return GradedMesh(T, K, 1.0)
