"""Split-step finite-difference solver for the 2D shallow-water equations.

Core pieces: a uniform grid with a two-layer Dirichlet boundary frame
(grid), five-point difference stencils (stencils), flux/source terms
(physics), the explicit-implicit-explicit composed step (stepper),
time-step governors (stability), analytical verification against the
Thacker basin solutions (thacker), and a scenario runner + CLI
(scenario, cli).
"""

from .grid import (
    FlowState,
    Grid,
    NodeClass,
    build_grid,
    classify,
    from_primitives,
    interior_mask,
    primitive_velocities,
)
from .physics import (
    BedSlopes,
    PhysParams,
    flux_E,
    flux_E_jacobian_cons_apply,
    flux_F,
    jacobian_E,
    jacobian_E_apply,
    logone_slopes,
    manning_friction,
    paraboloid_slopes,
    source_G,
)
from .scenario import (
    Bed,
    ConfigError,
    Discharge,
    LogonePreset,
    OutputPlan,
    RunRecord,
    RunResult,
    RunStatus,
    Scenario,
    StepPolicy,
    load_scenario,
    logone_preset,
    parse_logone_preset,
    parse_series_csv,
    run,
    series_csv,
    snapshot_csv,
    snapshot_f64,
    write_outputs,
)
from .stability import (
    BoundSource,
    NormCache,
    StepBound,
    cfl_limit,
    penta_matrix,
    penta_norm_diagnostic,
    theorem1_limit,
)
from .stencils import Axis, StencilKind, apply_stencil, stencil_valid, upwind_pair
from .stepper import (
    BlowUpError,
    BoundaryProvider,
    IterationFailureError,
    Linearization,
    StageConfig,
    apply_boundaries,
    composed_step,
    stage_p1,
    stage_p2,
)
from .thacker import (
    ErrorReport,
    ThackerParams,
    basin_slopes,
    convergence_order,
    l2_norm,
    linf_time_norm,
    paraboloid_z,
    reports_to_csv,
    run_convergence_study,
    run_thacker,
    thacker1_exact,
    thacker2_exact,
    thacker_exact,
)

__version__ = "0.1.0"
