"""Scenario configuration, flood presets, run orchestration and output files.

A scenario bundles everything one run needs: grid, physics, topography,
initial and boundary conditions, the time horizon with its step policy
(fixed step or the stability governor), and an output plan.  Scenarios
come from a flat ``key = value`` config document with ``[section]``
headers, or from the built-in flood presets.

The flood presets reproduce a Logone-river inundation setup: an
80 x 1000 domain, downstream initial depth per bed state (wet 0.176 m,
dry 0.0014 m), initial velocities q / h0_down from the annual discharge
(minimum 16, average 492, maximum 2420 m^3/s), upstream boundary depth
0.1 m with zero inflow velocities, Manning roughness 0.025, and bed
slopes S0x = 2 h0 (x - 40), S0y = 2 h0 (y - 500).  The preset's mesh
and step numbers (dx = 8.89, dy = 12.36, k = 0.33, T = 3) are kept
verbatim in the scenario's abstract time/length units; they are not
unit-consistent with an SI reading of the domain, and no conversion is
attempted.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .grid import FlowState, Grid, build_grid, from_primitives, primitive_velocities
from .physics import BedSlopes, PhysParams, logone_slopes, paraboloid_slopes
from .stability import BoundSource, NormCache, StepBound, cfl_limit, theorem1_limit
from .stepper import (
    BlowUpError,
    IterationFailureError,
    Linearization,
    StageConfig,
    composed_step,
)
from .thacker import ThackerParams, basin_slopes, thacker_boundary_provider, thacker_exact


class ConfigError(ValueError):
    """A scenario document failed to parse or validate."""


class RunStatus(Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUp"
    ITERATION_FAILURE = "IterationFailure"


#: series.csv column order.
SERIES_COLUMNS = (
    "n", "t", "k", "h_norm", "u_norm", "v_norm",
    "h_max", "u_max", "v_max", "governor",
)

GOVERNOR_COLUMNS = ("n", "t", "k_cfl", "k_thm1", "chosen_k", "source")

#: magic prefix of the raw float64 snapshot format.
F64_MAGIC = b"SWE0"


@dataclass(frozen=True)
class StepPolicy:
    """Fixed step size, or the a-posteriori stability governor.

    With ``clamp_to_cfl`` the governor takes min(CFL, spectral bound);
    without it the spectral bound alone decides.
    """

    fixed_k: float | None = None
    gamma: float = 18.0
    clamp_to_cfl: bool = True
    k_max: float = 1.0

    def __post_init__(self):
        if self.fixed_k is not None and self.fixed_k <= 0:
            raise ConfigError("fixed step must be positive")
        if not (0.0 < self.gamma <= 18.0):
            raise ConfigError("gamma must lie in (0, 18]")
        if self.k_max <= 0:
            raise ConfigError("k_max must be positive")


@dataclass(frozen=True)
class OutputPlan:
    series_every: int = 1
    snapshot_times: tuple[float, ...] = ()
    out_dir: str = "."
    binary_snapshots: bool = False

    def __post_init__(self):
        if self.series_every < 1:
            raise ConfigError("series cadence must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description."""

    grid: Grid
    params: PhysParams
    # topography: ("flat",), ("constant", s0x, s0y), ("paraboloid",) for the
    # basin, or ("logone",) for the flood bed.
    topography: tuple = ("flat",)
    # initial condition: ("thacker", 1|2), or ("uniform", h0, u0, v0).
    initial: tuple = ("uniform", 0.1, 0.0, 0.0)
    # boundary: ("exact", 1|2) tracks the Thacker solution;
    # ("fixed", h, u, v) prescribes constants.
    boundary: tuple = ("fixed", 0.1, 0.0, 0.0)
    T: float = 1.0
    policy: StepPolicy = field(default_factory=StepPolicy)
    plan: OutputPlan = field(default_factory=OutputPlan)
    stage: StageConfig = field(default_factory=lambda: StageConfig(picard_max_iters=200))
    thacker: ThackerParams = field(default_factory=ThackerParams)

    def __post_init__(self):
        if self.T <= 0:
            raise ConfigError("time horizon T must be positive")
        kind = self.initial[0]
        if kind == "uniform" and self.initial[1] < 0:
            raise ConfigError("uniform initial depth cannot be negative")
        if self.boundary[0] == "fixed" and self.boundary[1] < 0:
            raise ConfigError("fixed boundary depth cannot be negative")

    def slopes(self) -> BedSlopes:
        kind = self.topography[0]
        if kind == "flat":
            return BedSlopes.zero(self.grid)
        if kind == "constant":
            _, s0x, s0y = self.topography
            return BedSlopes(np.full(self.grid.shape, float(s0x)),
                             np.full(self.grid.shape, float(s0y)))
        if kind == "paraboloid":
            return basin_slopes(self.grid, self.thacker)
        if kind == "logone":
            return logone_slopes(self.grid)
        raise ConfigError(f"unknown topography kind {kind!r}")

    def initial_state(self) -> FlowState:
        X, Y = self.grid.mesh()
        kind = self.initial[0]
        if kind == "thacker":
            h, u, v = thacker_exact(self.initial[1], X, Y, 0.0, self.thacker)
        elif kind == "uniform":
            _, h0, u0, v0 = self.initial
            h = np.full(self.grid.shape, float(h0))
            u = np.full(self.grid.shape, float(u0))
            v = np.full(self.grid.shape, float(v0))
        else:
            raise ConfigError(f"unknown initial-condition kind {kind!r}")
        return from_primitives(self.grid, h, u, v, t=0.0)

    def boundary_provider(self):
        kind = self.boundary[0]
        if kind == "exact":
            return thacker_boundary_provider(self.boundary[1], self.thacker)
        if kind == "fixed":
            _, h, u, v = self.boundary
            def bc(x, y, t, _h=float(h), _u=float(u), _v=float(v)):
                shape = np.shape(x)
                return (np.full(shape, _h), np.full(shape, _u), np.full(shape, _v))
            return bc
        raise ConfigError(f"unknown boundary kind {kind!r}")


class Bed(Enum):
    WET = "wet"
    DRY = "dry"


class Discharge(Enum):
    MIN = "min"
    AVG = "avg"
    MAX = "max"


#: downstream initial depth per bed state [m].
_BED_DEPTH = {Bed.WET: 1.76e-1, Bed.DRY: 1.4e-3}
#: annual discharge per case [m^3/s].
_DISCHARGE_Q = {Discharge.MIN: 16.0, Discharge.AVG: 492.0, Discharge.MAX: 2420.0}


@dataclass(frozen=True)
class LogonePreset:
    bed: Bed
    discharge: Discharge

    @property
    def h0_down(self) -> float:
        return _BED_DEPTH[self.bed]

    @property
    def q(self) -> float:
        return _DISCHARGE_Q[self.discharge]

    @property
    def u0(self) -> float:
        return self.q / self.h0_down


def logone_preset(preset: LogonePreset, out_dir: str = ".",
                  series_every: int = 1) -> Scenario:
    """The flood scenario for a (bed, discharge) preset, numbers verbatim.

    Mesh sizes dx = 8.89, dy = 12.36 held exact on a near-80 x 1000
    domain (mx = round(80/8.89) = 9, my = round(1000/12.36) = 81
    intervals), fixed k = 0.33 to T = 3,
    upstream boundary depth 0.1 with zero velocities, Manning 0.025.

    The implicit sweep uses the frozen-coefficient banded solve: at
    k = 0.33 the Picard map is not a contraction on this mesh, so
    fixed-point iteration dies at t = 0 regardless of the flow.  No
    shock filter or speed cap is applied; the preset runs the composed
    split step exactly as written and lets the step-size mismatch
    (k exceeds the convective CFL limit several-fold for the wet-bed
    initial data) play out however it does.
    """
    dx, dy = 8.89, 12.36
    mx = int(round(80.0 / dx))
    my = int(round(1000.0 / dy))
    # keep the printed mesh sizes exact; the domain comes out 80.01 by
    # 1001.16 instead of a round 80 by 1000
    grid = build_grid(0.0, 0.0, mx * dx, my * dy, mx, my)
    u0 = preset.u0
    return Scenario(
        grid=grid,
        params=PhysParams(g=10.0, n_manning=0.025, c0=40.0, h_eps=1e-6),
        topography=("logone",),
        initial=("uniform", preset.h0_down, u0, u0),
        boundary=("fixed", 0.1, 0.0, 0.0),
        T=3.0,
        policy=StepPolicy(fixed_k=0.33),
        plan=OutputPlan(series_every=series_every, out_dir=out_dir),
        stage=StageConfig(picard_max_iters=400,
                          linearization=Linearization.FROZEN_JACOBIAN,
                          froude_cap=None, filter_strength=None),
    )


def parse_logone_preset(spec: str) -> LogonePreset:
    """Parse 'logone:<bed>:<discharge>' (case-insensitive)."""
    parts = spec.lower().split(":")
    if len(parts) != 3 or parts[0] != "logone":
        raise ConfigError(f"preset must look like logone:<bed>:<discharge>, got {spec!r}")
    try:
        return LogonePreset(Bed(parts[1]), Discharge(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"unknown preset component in {spec!r}: {exc}") from None


# ----------------------------------------------------------------------
# config document parsing

_REQUIRED_KEYS = (
    "grid.lx", "grid.ly", "grid.mx", "grid.my",
    "time.T",
)

_KNOWN_KEYS = {
    "grid.x0": float, "grid.y0": float, "grid.lx": float, "grid.ly": float,
    "grid.mx": int, "grid.my": int,
    "physics.g": float, "physics.n_manning": float, "physics.c0": float,
    "physics.h_eps": float,
    "topography.kind": str, "topography.s0x": float, "topography.s0y": float,
    "initial.kind": str, "initial.h0": float, "initial.u0": float,
    "initial.v0": float,
    "boundary.kind": str, "boundary.h": float, "boundary.u": float,
    "boundary.v": float,
    "time.T": float, "time.mode": str, "time.k": float, "time.gamma": float,
    "time.clamp": bool, "time.k_max": float,
    "output.series_every": int, "output.snapshots": str, "output.dir": str,
    "output.binary": bool,
    "solver.picard_max_iters": int, "solver.picard_tol": float,
    "solver.filter_strength": float, "solver.froude_cap": float,
}

# keys are matched case-insensitively but stored under their canonical names
_KNOWN_BY_LOWER = {k.lower(): k for k in _KNOWN_KEYS}


def _parse_bool(raw: str, lineno: int) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"line {lineno}: expected a boolean, got {raw!r}")


def _parse_document(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip().lower()
            if not section:
                raise ConfigError(f"line {lineno}: empty section header")
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        lowered = f"{section}.{key}".lower() if section else key.lower()
        full = _KNOWN_BY_LOWER.get(lowered)
        if full is None:
            raise ConfigError(f"line {lineno}: unknown key {lowered!r}")
        if full in values:
            raise ConfigError(f"line {lineno}: duplicate key {full!r}")
        typ = _KNOWN_KEYS[full]
        if typ is bool:
            values[full] = _parse_bool(raw, lineno)
        else:
            try:
                values[full] = typ(raw)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: cannot parse {raw!r} as {typ.__name__} for {full!r}"
                ) from None
    return values


def load_scenario(text: str, out_dir: str | None = None) -> Scenario:
    """Build a Scenario from a config document; all errors carry line numbers
    where available."""
    values = _parse_document(text)
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(sorted(missing)))

    def get(key, default):
        return values.get(key, default)

    grid = build_grid(get("grid.x0", 0.0), get("grid.y0", 0.0),
                      values["grid.lx"], values["grid.ly"],
                      values["grid.mx"], values["grid.my"])
    try:
        params = PhysParams(
            g=get("physics.g", 10.0),
            n_manning=get("physics.n_manning", 0.0),
            c0=get("physics.c0", 40.0),
            h_eps=get("physics.h_eps", 1e-6),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid physics values: {exc}") from None

    topo_kind = get("topography.kind", "flat")
    if topo_kind == "constant":
        topography = ("constant", get("topography.s0x", 0.0), get("topography.s0y", 0.0))
    elif topo_kind in ("flat", "paraboloid", "logone"):
        topography = (topo_kind,)
    else:
        raise ConfigError(f"unknown topography kind {topo_kind!r}")

    ic_kind = get("initial.kind", "uniform")
    if ic_kind in ("thacker1", "thacker2"):
        initial = ("thacker", int(ic_kind[-1]))
    elif ic_kind == "uniform":
        initial = ("uniform", get("initial.h0", 0.1),
                   get("initial.u0", 0.0), get("initial.v0", 0.0))
    else:
        raise ConfigError(f"unknown initial-condition kind {ic_kind!r}")

    b_kind = get("boundary.kind", "fixed")
    if b_kind in ("exact1", "exact2"):
        boundary = ("exact", int(b_kind[-1]))
    elif b_kind == "exact":
        if initial[0] != "thacker":
            raise ConfigError("boundary.kind = exact needs a thacker initial condition")
        boundary = ("exact", initial[1])
    elif b_kind == "fixed":
        boundary = ("fixed", get("boundary.h", 0.1),
                    get("boundary.u", 0.0), get("boundary.v", 0.0))
    else:
        raise ConfigError(f"unknown boundary kind {b_kind!r}")

    mode = get("time.mode", "fixed" if "time.k" in values else "governor")
    if mode == "fixed":
        if "time.k" not in values:
            raise ConfigError("time.mode = fixed needs time.k")
        policy = StepPolicy(fixed_k=values["time.k"],
                            gamma=get("time.gamma", 18.0),
                            clamp_to_cfl=get("time.clamp", True),
                            k_max=get("time.k_max", 1.0))
    elif mode == "governor":
        policy = StepPolicy(fixed_k=None, gamma=get("time.gamma", 18.0),
                            clamp_to_cfl=get("time.clamp", True),
                            k_max=get("time.k_max", 1.0))
    else:
        raise ConfigError(f"unknown time mode {mode!r}")

    snapshots: tuple[float, ...] = ()
    if "output.snapshots" in values:
        raw = str(values["output.snapshots"])
        try:
            snapshots = tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ConfigError(f"cannot parse snapshot times {raw!r}") from None
    plan = OutputPlan(series_every=get("output.series_every", 1),
                      snapshot_times=snapshots,
                      out_dir=out_dir if out_dir is not None else str(get("output.dir", ".")),
                      binary_snapshots=get("output.binary", False))

    stage = StageConfig(picard_max_iters=get("solver.picard_max_iters", 200),
                        picard_tol=get("solver.picard_tol", 1e-10))
    if "solver.filter_strength" in values:
        stage.filter_strength = values["solver.filter_strength"] or None
    if "solver.froude_cap" in values:
        stage.froude_cap = values["solver.froude_cap"] or None

    return Scenario(grid=grid, params=params, topography=topography,
                    initial=initial, boundary=boundary, T=values["time.T"],
                    policy=policy, plan=plan, stage=stage)


# ----------------------------------------------------------------------
# running

@dataclass
class RunRecord:
    n: int
    t: float
    k: float
    h_norm: float
    u_norm: float
    v_norm: float
    h_max: float
    u_max: float
    v_max: float
    governor: str


@dataclass
class RunResult:
    status: RunStatus
    records: list[RunRecord]
    snapshots: list[tuple[float, FlowState]]
    governor_log: list[tuple[int, float, float, float, float, str]]
    final: FlowState | None
    fail_n: int | None = None
    fail_t: float | None = None
    detail: str = ""

    @property
    def completed(self) -> bool:
        return self.status is RunStatus.COMPLETED


def _interior_l2(field: np.ndarray, grid: Grid) -> float:
    core = field[2:-2, 2:-2]
    return float(np.sqrt(grid.dx * grid.dy * np.sum(core * core)))


def _record(n: int, state: FlowState, k: float, grid: Grid,
            params: PhysParams, governor: str) -> RunRecord:
    u, v = primitive_velocities(state, params.h_eps)
    return RunRecord(
        n=n, t=state.t, k=k,
        h_norm=_interior_l2(state.h, grid),
        u_norm=_interior_l2(u, grid),
        v_norm=_interior_l2(v, grid),
        h_max=float(np.max(state.h)),
        u_max=float(np.max(np.abs(u))),
        v_max=float(np.max(np.abs(v))),
        governor=governor,
    )


def choose_step(policy: StepPolicy, state: FlowState, params: PhysParams,
                cache: NormCache) -> StepBound:
    """One governor decision: CFL and spectral bounds from the current state
    and running norms, then the policy's choice."""
    grid = state.grid
    u, v = primitive_velocities(state, params.h_eps)
    cache.update(u, state.h, params.g, grid)
    k_cfl = cfl_limit(float(np.max(np.abs(u))), float(np.max(np.abs(v))),
                      float(np.max(state.h, initial=0.0)), params.g,
                      grid.dx, grid.dy, k_max=policy.k_max)
    k_thm1 = theorem1_limit(cache, grid.dx, grid.mx, gamma=policy.gamma,
                            k_max=policy.k_max)
    if policy.fixed_k is not None:
        return StepBound(k_cfl, k_thm1, policy.gamma, policy.fixed_k,
                         BoundSource.USER_OVERRIDE)
    if policy.clamp_to_cfl and k_cfl <= k_thm1:
        return StepBound(k_cfl, k_thm1, policy.gamma, min(k_cfl, policy.k_max),
                         BoundSource.CFL)
    return StepBound(k_cfl, k_thm1, policy.gamma, min(k_thm1, policy.k_max),
                     BoundSource.THEOREM1)


def run(scenario: Scenario, max_steps: int | None = None) -> RunResult:
    """March the scenario to T (or termination) collecting records,
    governor decisions and snapshots.

    Blow-up fires at the first level with a non-finite value or with
    the depth norm above 1e6 x its initial value; both iteration
    failure and blow-up are reported as terminal statuses, not raised.
    """
    grid = scenario.grid
    params = scenario.params
    slopes = scenario.slopes()
    bc = scenario.boundary_provider()
    state = scenario.initial_state()
    cache = NormCache.for_grid(grid)

    records: list[RunRecord] = []
    snapshots: list[tuple[float, FlowState]] = []
    gov_log: list[tuple[int, float, float, float, float, str]] = []
    pending = sorted(scenario.plan.snapshot_times)

    h_norm0 = max(_interior_l2(state.h, grid), 1e-30)
    records.append(_record(0, state, 0.0, grid, params, "initial"))

    n = 0
    eps_t = 1e-12 * max(1.0, scenario.T)
    while state.t < scenario.T - eps_t:
        if max_steps is not None and n >= max_steps:
            break
        bound = choose_step(scenario.policy, state, params, cache)
        k = min(bound.chosen_k, scenario.T - state.t)
        gov_log.append((n, state.t, bound.k_cfl, bound.k_thm1, k,
                        bound.source.value))
        try:
            state = composed_step(state, k, params, scenario.stage, slopes, bc)
        except BlowUpError as exc:
            return RunResult(RunStatus.BLOW_UP, records, snapshots, gov_log,
                             None, fail_n=n, fail_t=exc.t, detail=str(exc))
        except IterationFailureError as exc:
            return RunResult(RunStatus.ITERATION_FAILURE, records, snapshots,
                             gov_log, None, fail_n=n, fail_t=exc.t,
                             detail=str(exc))
        n += 1
        h_norm = _interior_l2(state.h, grid)
        if not state.is_finite() or not math.isfinite(h_norm) or h_norm > 1e6 * h_norm0:
            return RunResult(RunStatus.BLOW_UP, records, snapshots, gov_log,
                             None, fail_n=n, fail_t=state.t,
                             detail=f"depth norm {h_norm:.3e} exceeded blow-up threshold")
        if n % scenario.plan.series_every == 0:
            records.append(_record(n, state, k, grid, params, bound.source.value))
        while pending and state.t >= pending[0] - eps_t:
            snapshots.append((pending.pop(0), state.copy()))
    return RunResult(RunStatus.COMPLETED, records, snapshots, gov_log, state)


# ----------------------------------------------------------------------
# persistence

def _fmt(x: float) -> str:
    return format(x, ".17g")


def series_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for r in records:
        w.writerow([r.n, _fmt(r.t), _fmt(r.k), _fmt(r.h_norm), _fmt(r.u_norm),
                    _fmt(r.v_norm), _fmt(r.h_max), _fmt(r.u_max),
                    _fmt(r.v_max), r.governor])
    return buf.getvalue()


def parse_series_csv(text: str) -> list[RunRecord]:
    """Inverse of series_csv; numeric fields round-trip bit-exactly."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != SERIES_COLUMNS:
        raise ConfigError("series.csv header mismatch")
    out = []
    for row in rows[1:]:
        out.append(RunRecord(int(row[0]), *(float(x) for x in row[1:9]), row[9]))
    return out


def snapshot_csv(state: FlowState, params: PhysParams) -> str:
    """x, y, h, u, v for every node (boundary frame included)."""
    grid = state.grid
    X, Y = grid.mesh()
    u, v = primitive_velocities(state, params.h_eps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "y", "h", "u", "v"))
    for p in range(grid.my + 1):
        for l in range(grid.mx + 1):
            w.writerow([_fmt(X[p, l]), _fmt(Y[p, l]), _fmt(state.h[p, l]),
                        _fmt(u[p, l]), _fmt(v[p, l])])
    return buf.getvalue()


def snapshot_f64(state: FlowState, t: float) -> bytes:
    """Raw snapshot: 24-byte header (magic, u32 Mx+1, u32 My+1, f64 t)
    then h, hu, hv blocks as little-endian float64, row-major."""
    grid = state.grid
    header = F64_MAGIC + struct.pack("<IIxxxxd", grid.mx + 1, grid.my + 1, t)
    body = b"".join(np.ascontiguousarray(f, dtype="<f8").tobytes()
                    for f in (state.h, state.hu, state.hv))
    return header + body


def governor_csv(gov_log) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GOVERNOR_COLUMNS)
    for n, t, k_cfl, k_thm1, chosen, source in gov_log:
        w.writerow([n, _fmt(t), _fmt(k_cfl), _fmt(k_thm1), _fmt(chosen), source])
    return buf.getvalue()


def write_outputs(result: RunResult, scenario: Scenario) -> list[Path]:
    """Write series.csv, governor.csv and the snapshot files into the plan's
    output directory; returns the written paths."""
    out = Path(scenario.plan.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        p = out / "series.csv"
        p.write_text(series_csv(result.records))
        written.append(p)
        p = out / "governor.csv"
        p.write_text(governor_csv(result.governor_log))
        written.append(p)
        for t, snap in result.snapshots:
            if scenario.plan.binary_snapshots:
                p = out / f"snapshot_t{_fmt(t)}.f64"
                p.write_bytes(snapshot_f64(snap, t))
            else:
                p = out / f"snapshot_t{_fmt(t)}.csv"
                p.write_text(snapshot_csv(snap, scenario.params))
            written.append(p)
        return written
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out}: {exc}") from exc
