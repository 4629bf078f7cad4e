"""Sample grids in parameter space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """``nx`` x ``ny`` lattice on a rectangle, optionally clipped to a disk.

    For ``kind == "disk"`` the lattice spans the bounding square of the disk
    and points outside the disk are dropped.
    """

    kind: str
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    @classmethod
    def rect(cls, x0, x1, y0, y1, nx=21, ny=21) -> "Grid":
        return cls("rect", float(x0), float(x1), float(y0), float(y1), int(nx), int(ny))

    @classmethod
    def disk(cls, cx, cy, radius, nx=21, ny=21) -> "Grid":
        return cls("disk", cx - radius, cx + radius, cy - radius, cy + radius, int(nx), int(ny))

    @property
    def center(self):
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def points(self) -> np.ndarray:
        xs = np.linspace(self.x0, self.x1, self.nx)
        ys = np.linspace(self.y0, self.y1, self.ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], 1)
        if self.kind == "disk":
            cx, cy = self.center
            r = 0.5 * (self.x1 - self.x0)
            keep = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= r * (1 + 1e-12)
            pts = pts[keep]
        return pts

    def scaled(self, factor: float) -> "Grid":
        """Same lattice shrunk about the center by ``factor``."""
        cx, cy = self.center
        hx = 0.5 * (self.x1 - self.x0) * factor
        hy = 0.5 * (self.y1 - self.y0) * factor
        return Grid(self.kind, cx - hx, cx + hx, cy - hy, cy + hy, self.nx, self.ny)

    def with_shape(self, nx: int, ny: int) -> "Grid":
        return Grid(self.kind, self.x0, self.x1, self.y0, self.y1, int(nx), int(ny))

    def describe(self) -> dict:
        return {"kind": self.kind, "x0": self.x0, "x1": self.x1, "y0": self.y0,
                "y1": self.y1, "nx": self.nx, "ny": self.ny}
