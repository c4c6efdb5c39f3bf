"""Time-step governors and the pentadiagonal-norm diagnostic.

Two bounds on the time step:

* a CFL guideline  k <= min(dx/(|u|max + c), dy/(|v|max + c)),
  c = sqrt(g h_max);
* a spectral bound  k <= (48/gamma) * min(||beta||_0 / (sqrt(Mx-3) |||u|||),
  |||u||| / |||u^2 + g h / 2|||) * dx,  gamma in (0, 18],

where |||.||| is the running max over completed time levels of the
interior L2 norm (so the bound is evaluated a posteriori and re-checked
each step).  The 18 comes from the spectral norm of the skew
pentadiagonal first-derivative matrix (superdiagonals 8 and -1, scaled
by 1/(12 dx)): row sums of |entries| give 2*(8+1) = 18, and
penta_norm_diagnostic verifies the claim numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import Grid

#: Default floor for the step cap in degenerate (quiescent) branches.
K_MAX_FLOOR = 1e-12


class BoundSource(Enum):
    CFL = "cfl"
    THEOREM1 = "theorem1"
    USER_OVERRIDE = "user_override"


@dataclass(frozen=True)
class StepBound:
    """Both governor values plus the step actually taken."""

    k_cfl: float
    k_thm1: float
    gamma: float
    chosen_k: float
    source: BoundSource

    def __post_init__(self):
        if self.k_cfl <= 0 or self.k_thm1 <= 0 or self.chosen_k <= 0:
            raise ValueError("step bounds must be positive")
        if not (0.0 < self.gamma <= 18.0):
            raise ValueError("gamma must lie in (0, 18]")
        if self.source is not BoundSource.USER_OVERRIDE:
            limit = self.k_cfl if self.source is BoundSource.CFL else self.k_thm1
            if self.chosen_k > limit * (1.0 + 1e-12):
                raise ValueError("chosen step exceeds its governing bound")


@dataclass
class NormCache:
    """Running maxima of the interior L2 norms the spectral bound needs.

    beta_norm is the norm of the constant-1 field,
    sqrt(dx dy (mx-3)(my-3)); it never changes during a run.
    """

    beta_norm: float
    u_inf_norm: float = 0.0
    bernoulli_inf_norm: float = 0.0

    @classmethod
    def for_grid(cls, grid: Grid) -> "NormCache":
        return cls(beta_norm=math.sqrt(grid.dx * grid.dy * grid.interior_count()))

    def update(self, u: np.ndarray, h: np.ndarray, g: float, grid: Grid) -> None:
        """Fold one completed level's norms into the running maxima."""
        core_u = np.asarray(u)[2:-2, 2:-2]
        core_h = np.asarray(h)[2:-2, 2:-2]
        w = grid.dx * grid.dy
        self.u_inf_norm = max(self.u_inf_norm, float(np.sqrt(w * np.sum(core_u**2))))
        bern = core_u**2 + 0.5 * g * core_h
        self.bernoulli_inf_norm = max(
            self.bernoulli_inf_norm, float(np.sqrt(w * np.sum(bern**2)))
        )


def cfl_limit(u_max: float, v_max: float, h_max: float, g: float,
              dx: float, dy: float, k_max: float = 1.0) -> float:
    """Wave-speed step guideline; returns k_max when the state is quiescent."""
    if h_max < 0:
        raise ValueError("h_max cannot be negative")
    if dx <= 0 or dy <= 0:
        raise ValueError("dx and dy must be positive")
    c = math.sqrt(g * h_max)
    dx_speed = abs(u_max) + c
    dy_speed = abs(v_max) + c
    bounds = []
    if dx_speed > 0:
        bounds.append(dx / dx_speed)
    if dy_speed > 0:
        bounds.append(dy / dy_speed)
    if not bounds:
        return max(k_max, K_MAX_FLOOR)
    return min(bounds)


def theorem1_limit(cache: NormCache, dx: float, mx: int, gamma: float = 18.0,
                   k_max: float = 1.0) -> float:
    """Spectral-norm step bound from the running solution norms.

    A denominator norm below 1e-14 makes that branch unbounded; if both
    branches drop out (quiescent flow) the k_max cap decides.
    """
    if not (0.0 < gamma <= 18.0):
        raise ValueError("gamma must lie in (0, 18]")
    if mx <= 3:
        raise ValueError("need mx > 3")
    if dx <= 0:
        raise ValueError("dx must be positive")
    factor = (48.0 / gamma) * dx
    branches = []
    if cache.u_inf_norm > 1e-14:
        branches.append(cache.beta_norm / (math.sqrt(mx - 3) * cache.u_inf_norm))
        # the second branch vanishes (not: binds) as |||u||| -> 0, so a
        # quiescent flow must drop it too rather than return a zero step
        if cache.bernoulli_inf_norm > 1e-14:
            branches.append(cache.u_inf_norm / cache.bernoulli_inf_norm)
    if not branches:
        return max(k_max, K_MAX_FLOOR)
    return factor * min(branches)


def penta_matrix(n: int) -> np.ndarray:
    """Skew pentadiagonal matrix with superdiagonals 8 and -1.

    This is 12*dx times the interior block of the five-point
    first-derivative operator; its spectral norm is at most 18.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    a = np.zeros((n, n))
    idx = np.arange(n - 1)
    a[idx, idx + 1] = 8.0
    a[idx + 1, idx] = -8.0
    idx = np.arange(n - 2)
    a[idx, idx + 2] = -1.0
    a[idx + 2, idx] = 1.0
    return a


def penta_norm_diagnostic(n: int, tol: float = 1e-10,
                          max_iters: int = 100_000) -> tuple[float, float]:
    """Spectral norm of penta_matrix(n) via power iteration on A^T A.

    Returns (18.0, computed_norm); the computed norm never exceeds the
    bound (up to 1e-9 of round-off).
    """
    a = penta_matrix(n)
    ata = a.T @ a
    if not ata.any():
        return 18.0, 0.0
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iters):
        y = ata @ x
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            lam_new = 0.0
            break
        x = y / ny
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return 18.0, math.sqrt(max(lam, 0.0))
