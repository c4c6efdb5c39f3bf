"""Structured grid, conservative flow field, and node classification.

The solver works on a uniform Cartesian grid of (mx+1) x (my+1) nodes.
Fields are stored as 2D arrays of shape (my+1, mx+1), row-major, so that
the x-direction (index l) is contiguous: the explicit x-sweeps stream
along rows.

The "interior" is 2 <= l <= mx-2 and 2 <= p <= my-2; everything else is
a two-node-deep boundary layer on each side where the scheme prescribes
Dirichlet data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class NodeClass(Enum):
    INTERIOR = "interior"
    BOUNDARY_LAYER = "boundary_layer"


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid with (mx+1)(my+1) nodes.

    x0, y0 : coordinate origin [m]
    lx, ly : domain extents [m]
    mx, my : cell counts per direction (>= 5 so the five-point stencils
             fit inside the two-layer boundary frame)
    """

    x0: float
    y0: float
    lx: float
    ly: float
    mx: int
    my: int

    def __post_init__(self):
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError(f"domain extents must be positive, got lx={self.lx}, ly={self.ly}")
        if self.mx < 5 or self.my < 5:
            raise ValueError(f"need mx, my >= 5 for the stencil footprint, got {self.mx}, {self.my}")

    @property
    def dx(self) -> float:
        return self.lx / self.mx

    @property
    def dy(self) -> float:
        return self.ly / self.my

    @property
    def shape(self) -> tuple[int, int]:
        """Field array shape: (my+1, mx+1)."""
        return (self.my + 1, self.mx + 1)

    def x_nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.mx + 1)

    def y_nodes(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.my + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays (X, Y), each of shape (my+1, mx+1)."""
        return np.meshgrid(self.x_nodes(), self.y_nodes())

    def interior_count(self) -> int:
        return (self.mx - 3) * (self.my - 3)


def build_grid(x0: float, y0: float, lx: float, ly: float, mx: int, my: int) -> Grid:
    """Construct a grid; rejects extents <= 0 and mx or my < 5."""
    return Grid(x0=x0, y0=y0, lx=float(lx), ly=float(ly), mx=int(mx), my=int(my))


def classify(grid: Grid, l: int, p: int) -> NodeClass:
    """Classify node (l, p) as interior or boundary layer."""
    if not (0 <= l <= grid.mx and 0 <= p <= grid.my):
        raise IndexError(f"node ({l}, {p}) outside grid 0..{grid.mx} x 0..{grid.my}")
    if 2 <= l <= grid.mx - 2 and 2 <= p <= grid.my - 2:
        return NodeClass.INTERIOR
    return NodeClass.BOUNDARY_LAYER


def interior_mask(grid: Grid) -> np.ndarray:
    """Boolean mask of interior nodes, shape (my+1, mx+1)."""
    mask = np.zeros(grid.shape, dtype=bool)
    mask[2:-2, 2:-2] = True
    return mask


@dataclass
class FlowState:
    """Conservative field (h, hu, hv) on all grid nodes at time t.

    h is in metres, hu and hv in m^2/s.  All arrays share shape
    grid.shape.  Non-finite entries signal a detected blow-up and are
    never produced silently by the public operations.
    """

    grid: Grid
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("h", "hu", "hv"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {self.grid.shape}")
            setattr(self, name, arr)

    def copy(self) -> "FlowState":
        return FlowState(self.grid, self.h.copy(), self.hu.copy(), self.hv.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.h).all() and np.isfinite(self.hu).all() and np.isfinite(self.hv).all())

    def velocities(self, h_eps: float) -> tuple[np.ndarray, np.ndarray]:
        return primitive_velocities(self, h_eps)


def primitive_velocities(state: FlowState, h_eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Recover (u, v) = (hu/h, hv/h) with dry-cell masking.

    Cells with h < h_eps get u = v = 0 instead of a near-singular
    division; that masking is the defined behaviour, not an error.
    """
    if h_eps <= 0:
        raise ValueError("h_eps must be positive")
    wet = state.h >= h_eps
    hsafe = np.where(wet, state.h, 1.0)
    u = np.where(wet, state.hu / hsafe, 0.0)
    v = np.where(wet, state.hv / hsafe, 0.0)
    return u, v


def from_primitives(grid: Grid, h: np.ndarray, u: np.ndarray, v: np.ndarray, t: float = 0.0) -> FlowState:
    """Assemble a conservative state from primitive (h, u, v) fields."""
    h = np.broadcast_to(np.asarray(h, dtype=np.float64), grid.shape).copy()
    u = np.broadcast_to(np.asarray(u, dtype=np.float64), grid.shape)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), grid.shape)
    return FlowState(grid, h, h * u, h * v, t)
