"""One-dimensional finite-difference operators on each grid axis.

Four stencils: centered second order (C2), centered fourth order (C4),
forward third order (F3) and backward third order (B3), plus the
composite pair that feeds the second-order correction of the explicit
sweep:

    pair(w, psi)[l] = (w[l+1] * B3(psi)[l+1] - w[l-1] * F3(psi)[l-1]) / (2*delta)

Footprint audit for the composite on the interior 2 <= l <= mx-2:
B3 at l+1 touches l-1..l+2 (min 1, max mx) and F3 at l-1 touches
l-2..l+1 (min 0, max mx-1), so every access stays in 0..mx and no
special-casing is needed at the interior rings.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .grid import Grid


class Axis(Enum):
    X = 0
    Y = 1


class StencilKind(Enum):
    """Coefficients over node offsets; divide by the listed delta power (all 1/delta)."""

    C2 = ((-1, 1), (-1.0 / 2.0, 1.0 / 2.0))
    C4 = ((-2, -1, 1, 2), (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0))
    F3 = ((-1, 0, 1, 2), (-2.0 / 6.0, -3.0 / 6.0, 6.0 / 6.0, -1.0 / 6.0))
    B3 = ((-2, -1, 0, 1), (1.0 / 6.0, -6.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0))

    @property
    def offsets(self) -> tuple[int, ...]:
        return self.value[0]

    @property
    def coeffs(self) -> tuple[float, ...]:
        return self.value[1]


def _shifted_sum(field: np.ndarray, axis: Axis, kind: StencilKind, delta: float) -> tuple[np.ndarray, int, int]:
    """Apply the stencil wherever its footprint is in-bounds.

    Returns (out, lo, hi): out is zero outside the valid index window
    [lo, hi] along the differencing axis (inclusive).
    """
    ax = 1 if axis is Axis.X else 0
    n = field.shape[ax] - 1
    lo = -min(kind.offsets)
    hi = n - max(kind.offsets)
    out = np.zeros_like(field, dtype=np.float64)

    def window(a, b):
        # slice [a, b] inclusive along the differencing axis
        sl = [slice(None)] * field.ndim
        sl[ax] = slice(a, b + 1)
        return tuple(sl)

    acc = np.zeros_like(out[window(lo, hi)])
    for off, c in zip(kind.offsets, kind.coeffs):
        acc += c * field[window(lo + off, hi + off)]
    out[window(lo, hi)] = acc / delta
    return out, lo, hi


def stencil_valid(field: np.ndarray, axis: Axis, kind: StencilKind, delta: float) -> np.ndarray:
    """Discrete derivative on every node whose footprint is in-bounds; zero elsewhere."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    out, _, _ = _shifted_sum(np.asarray(field, dtype=np.float64), axis, kind, delta)
    return out


def apply_stencil(field: np.ndarray, axis: Axis, kind: StencilKind, delta: float) -> np.ndarray:
    """Discrete derivative restricted to interior nodes.

    Boundary-layer nodes of the result are zero-filled (they are not a
    valid derivative there; the stepper overwrites them from boundary
    data).  The interior footprint never exits the grid for any kind.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError("expected a 2D nodal field")
    my, mx = field.shape[0] - 1, field.shape[1] - 1
    if mx < 5 or my < 5:
        raise ValueError("field too small for the interior stencil range")
    out = stencil_valid(field, axis, kind, delta)
    res = np.zeros_like(out)
    res[2:-2, 2:-2] = out[2:-2, 2:-2]
    return res


def upwind_pair(w: np.ndarray, psi: np.ndarray, axis: Axis, delta: float) -> np.ndarray:
    """Composite operator (w[l+1]*B3(psi)[l+1] - w[l-1]*F3(psi)[l-1]) / (2*delta).

    Defined on interior nodes (zero-filled elsewhere).  Averaging the
    backward pair at l+1 against the forward pair at l-1 cancels the
    one-sided bias; (F3 + B3)/2 reproduces C4 identically.
    """
    w = np.asarray(w, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if w.shape != psi.shape:
        raise ValueError("w and psi must share a grid")
    if delta <= 0:
        raise ValueError("delta must be positive")
    res = composite_valid(w, psi, axis, delta)
    out = np.zeros_like(res)
    out[2:-2, 2:-2] = res[2:-2, 2:-2]
    return out


def composite_valid(w: np.ndarray, psi: np.ndarray, axis: Axis, delta: float) -> np.ndarray:
    """Like upwind_pair but keeping the full transverse range (used by the sweeps)."""
    b3 = stencil_valid(psi, axis, StencilKind.B3, delta)
    f3 = stencil_valid(psi, axis, StencilKind.F3, delta)
    prod_m = np.asarray(w, dtype=np.float64) * b3
    prod_p = np.asarray(w, dtype=np.float64) * f3
    ax = 1 if axis is Axis.X else 0
    res = np.zeros_like(prod_m)
    sl_out = [slice(None)] * res.ndim
    sl_p = [slice(None)] * res.ndim
    sl_m = [slice(None)] * res.ndim
    n = res.shape[ax] - 1
    sl_out[ax] = slice(2, n - 1)
    sl_m[ax] = slice(3, n)
    sl_p[ax] = slice(1, n - 2)
    res[tuple(sl_out)] = (prod_m[tuple(sl_m)] - prod_p[tuple(sl_p)]) / (2.0 * delta)
    return res
