"""Rectangular measurement lattice with physical (mm) coordinates.

Index convention: row-major over y, i.e. ``index = iy * nx + ix`` where
``ix``/``iy`` count grid steps along x/y from the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, OffGridIndex


@dataclass(frozen=True)
class GridDomain:
    origin: tuple[float, float]
    spacing: tuple[float, float]
    counts: tuple[int, int]  # (nx, ny)

    def __post_init__(self):
        nx, ny = self.counts
        if nx < 1 or ny < 1:
            raise InvalidConfig(f"grid counts must be >= 1, got {self.counts}")
        if self.spacing[0] <= 0 or self.spacing[1] <= 0:
            raise InvalidConfig(f"grid spacing must be > 0, got {self.spacing}")

    @property
    def n_points(self) -> int:
        return self.counts[0] * self.counts[1]

    def index_of(self, ix: int, iy: int) -> int:
        nx, ny = self.counts
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise OffGridIndex(f"cell ({ix}, {iy}) outside {nx}x{ny} grid")
        return iy * nx + ix

    def cell_of(self, index: int) -> tuple[int, int]:
        """Inverse of index_of: (ix, iy) for a flat index."""
        nx = self.counts[0]
        if not (0 <= index < self.n_points):
            raise OffGridIndex(f"index {index} outside grid of {self.n_points} points")
        return index % nx, index // nx

    def point_at(self, index: int) -> tuple[float, float]:
        ix, iy = self.cell_of(index)
        return (self.origin[0] + ix * self.spacing[0],
                self.origin[1] + iy * self.spacing[1])

    def all_points(self) -> np.ndarray:
        """(N, 2) array of positions in index order."""
        nx, ny = self.counts
        xs = self.origin[0] + self.spacing[0] * np.arange(nx)
        ys = self.origin[1] + self.spacing[1] * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys)  # rows vary over y
        return np.column_stack([gx.ravel(), gy.ravel()])

    def diagonal(self) -> float:
        """Length of the lattice bounding-box diagonal (mm)."""
        nx, ny = self.counts
        w = (nx - 1) * self.spacing[0]
        h = (ny - 1) * self.spacing[1]
        return float(np.hypot(w, h))

    def contains_position(self, x: float, y: float, rtol: float = 1e-9) -> bool:
        """True if (x, y) coincides with a lattice point (within tolerance)."""
        fx = (x - self.origin[0]) / self.spacing[0]
        fy = (y - self.origin[1]) / self.spacing[1]
        ix, iy = round(fx), round(fy)
        if not (0 <= ix < self.counts[0] and 0 <= iy < self.counts[1]):
            return False
        tol = rtol * max(1.0, abs(fx), abs(fy))
        return abs(fx - ix) <= tol and abs(fy - iy) <= tol

    def index_of_position(self, x: float, y: float) -> int:
        if not self.contains_position(x, y):
            raise OffGridIndex(f"position ({x}, {y}) is not a lattice point")
        ix = round((x - self.origin[0]) / self.spacing[0])
        iy = round((y - self.origin[1]) / self.spacing[1])
        return self.index_of(int(ix), int(iy))

    def center_index(self) -> int:
        """Index nearest the geometric center, ties toward lower index."""
        nx, ny = self.counts
        return self.index_of((nx - 1) // 2, (ny - 1) // 2)
