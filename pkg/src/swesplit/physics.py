"""Pointwise flux vectors, Manning friction source, and the flux Jacobian.

Conservative system:  d(phi)/dt + dE/dx + dF/dy = G  with
phi = (h, hu, hv),
E = (hu, h u^2 + g h^2 / 2, h u v),
F = (hv, h u v,  h v^2 + g h^2 / 2),
G = g h (0, S0x - Sfx, S0y - Sfy).

The Manning friction formula contains u^(3/2) and v^(1/2), which are
undefined for negative velocities; we apply the fractional powers to
magnitudes and reattach the sign of the leading velocity factor
(sign(u)|u|^(3/2), u * |v|^(1/2)), so friction always opposes motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


@dataclass(frozen=True)
class PhysParams:
    """Gravity, Manning roughness, dimensional constant and wet/dry threshold."""

    g: float = 10.0            # m/s^2
    n_manning: float = 0.0     # s/m^(1/3)
    c0: float = 40.0           # m^(1/2)/s
    h_eps: float = 1e-6        # m

    def __post_init__(self):
        if self.g <= 0 or self.c0 <= 0 or self.h_eps <= 0:
            raise ValueError("g, c0 and h_eps must be positive")
        if self.n_manning < 0:
            raise ValueError("Manning roughness cannot be negative")


@dataclass
class BedSlopes:
    """Dimensionless bed slope fields on all nodes."""

    s0x: np.ndarray
    s0y: np.ndarray

    @classmethod
    def zero(cls, grid: Grid) -> "BedSlopes":
        return cls(np.zeros(grid.shape), np.zeros(grid.shape))


def flux_E(h, u, v, g):
    """x-direction flux: (hu, h u^2 + g h^2 / 2, h u v)."""
    hu = h * u
    return hu, hu * u + 0.5 * g * h * h, hu * v


def flux_F(h, u, v, g):
    """y-direction flux: (hv, h u v, h v^2 + g h^2 / 2)."""
    hv = h * v
    return hv, h * u * v, hv * v + 0.5 * g * h * h


def manning_friction(h, u, v, params: PhysParams):
    """Friction slopes (Sfx, Sfy); zero on dry cells (h < h_eps)."""
    h = np.asarray(h, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    wet = h >= params.h_eps
    hsafe = np.where(wet, h, 1.0)
    scale = params.n_manning**2 / (params.c0**2 * hsafe ** (4.0 / 3.0))
    au, av = np.abs(u), np.abs(v)
    sfx = scale * (np.sign(u) * au**1.5 + u * np.sqrt(av))
    sfy = scale * (np.sign(v) * av**1.5 + v * np.sqrt(au))
    zero = np.zeros_like(sfx)
    return np.where(wet, sfx, zero), np.where(wet, sfy, zero)


def source_G(h, u, v, s0x, s0y, sfx, sfy, g):
    """Source vector (0, g h (S0x - Sfx), g h (S0y - Sfy))."""
    gh = g * np.asarray(h, dtype=np.float64)
    return np.zeros_like(gh), gh * (s0x - sfx), gh * (s0y - sfy)


def jacobian_E(h, u, v, g) -> np.ndarray:
    """Flux Jacobian of E with respect to the primitive triple (h, u, v).

    Rows: [u, h, 0; u^2 + g h, 2 h u, 0; u v, h v, h u].
    """
    h = np.asarray(h, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    zero = np.zeros(np.broadcast_shapes(h.shape, u.shape, v.shape))
    return np.array(
        [
            [u + zero, h + zero, zero],
            [u * u + g * h, 2.0 * h * u, zero],
            [u * v, h * v, h * u],
        ]
    )


def jacobian_E_apply(h, u, v, g, w1, w2, w3):
    """Matrix-vector product of jacobian_E with (w1, w2, w3), vectorized per node."""
    r1 = u * w1 + h * w2
    r2 = (u * u + g * h) * w1 + 2.0 * h * u * w2
    r3 = u * v * w1 + h * v * w2 + h * u * w3
    return r1, r2, r3


def flux_E_jacobian_cons_apply(h, u, v, g, w1, w2, w3):
    """Product of dE/d(h, hu, hv) with (w1, w2, w3), vectorized per node.

    This is the Jacobian with respect to the conserved triple, the one
    the chain rule E_t = (dE/dphi) phi_t needs; the second-order term of
    the explicit sweep is only consistent with phi_tt = d/dx((dE/dphi)
    dE/dx) when this matrix is used (jacobian_E differentiates with
    respect to (h, u, v) instead and drops the temporal order to one).
    """
    r1 = w2
    r2 = (g * h - u * u) * w1 + 2.0 * u * w2
    r3 = -u * v * w1 + v * w2 + u * w3
    return r1, r2, r3


def paraboloid_slopes(grid: Grid, h0: float, d: float, center: tuple[float, float]) -> BedSlopes:
    """Bed slopes of the paraboloid-of-revolution bed z = h0 (r^2/d^2 - 1)."""
    if d <= 0:
        raise ValueError("d must be positive")
    X, Y = grid.mesh()
    xc, yc = center
    return BedSlopes(2.0 * h0 * (X - xc) / d**2, 2.0 * h0 * (Y - yc) / d**2)


def logone_slopes(grid: Grid, h0: float = 0.1, center: tuple[float, float] = (40.0, 500.0)) -> BedSlopes:
    """Flood-scenario bed slopes S0x = 2 h0 (x - 40), S0y = 2 h0 (y - 500), taken verbatim."""
    X, Y = grid.mesh()
    return BedSlopes(2.0 * h0 * (X - center[0]), 2.0 * h0 * (Y - center[1]))
