"""End-to-end acceptance checks, one test per advertised guarantee.

Each test prints a single ``CRITERION n: PASS/FAIL`` line (echoed again
in the terminal summary) and then asserts.  The basin convergence runs
are shared through a session fixture because the finest rung takes
minutes.
"""

import math
import time

import numpy as np
import pytest

import swesplit as sw
from swesplit.stencils import Axis, StencilKind, apply_stencil, upwind_pair

CRITERION_LINES = []


def report(num, ok, detail):
    line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    CRITERION_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def thacker_runs():
    """All basin convergence rungs, run once and shared.

    Example 1: dx ladder {3^-2, 3^-3, 3^-4} at k = 3^-6, plus k ladder
    {3^-4, 3^-5, 3^-6} on the finest mesh (final depth fields kept for
    step-refinement comparison).  Example 2: dx in {3^-2, 3^-3} at
    k = 3^-5.

    The example-1 horizon is three periods rounded up to a common
    multiple of all three step sizes (540 steps of 3^-4), so every rung
    ends at exactly the same time level; with the default horizon the
    rungs end a fraction of a step apart and the final-field comparison
    measures that offset instead of the step error.
    """
    p = sw.ThackerParams()
    T1 = 540 * 3.0**-4
    out = {"ex1": {}, "ex2": {}, "final_h": {}, "params": p}
    for mx in (36, 108):
        out["ex1"][(mx, 6)] = sw.run_thacker(1, mx, 3.0**-6, p, T=T1)
    for kexp in (4, 5, 6):
        last = {}

        def collect(n, state, last=last):
            last["h"] = state.h

        r = sw.run_thacker(1, 324, 3.0**-kexp, p, T=T1, collect=collect)
        out["ex1"][(324, kexp)] = r
        out["final_h"][kexp] = last["h"].copy()
    for mx in (36, 108):
        out["ex2"][(mx, 5)] = sw.run_thacker(2, mx, 3.0**-5, p)
    return out


def _poly_with_derivative(grid, axis, degree):
    X, Y = grid.mesh()
    s = X if axis is Axis.X else Y
    return s**degree, degree * s ** max(degree - 1, 0) if degree else np.zeros_like(s)


def test_criterion_1_stencil_exactness():
    t0 = time.perf_counter()
    grid = sw.build_grid(0.3, -0.2, 2.0, 2.0, 12, 12)
    core = (slice(2, -2), slice(2, -2))
    worst = 0.0
    for kind, max_deg in ((StencilKind.C4, 4), (StencilKind.F3, 3),
                          (StencilKind.B3, 3), (StencilKind.C2, 2)):
        for axis in (Axis.X, Axis.Y):
            delta = grid.dx if axis is Axis.X else grid.dy
            for degree in range(max_deg + 1):
                f, exact = _poly_with_derivative(grid, axis, degree)
                got = apply_stencil(f, axis, kind, delta)
                scale = max(1.0, float(np.abs(exact[core]).max()))
                worst = max(worst, float(np.abs(got[core] - exact[core]).max()) / scale)
    elapsed = time.perf_counter() - t0
    report(1, worst < 1e-10 and elapsed < 1.0,
           f"max relative error {worst:.3e} on exactness-degree polynomials "
           f"in {elapsed:.2f}s")


def _f3_at(f, p, l, delta):
    return (-2 * f[p, l - 1] - 3 * f[p, l] + 6 * f[p, l + 1] - f[p, l + 2]) / (6 * delta)


def _b3_at(f, p, l, delta):
    return (f[p, l - 2] - 6 * f[p, l - 1] + 3 * f[p, l] + 2 * f[p, l + 1]) / (6 * delta)


def test_criterion_2_operator_identities():
    rng = np.random.default_rng(2024)
    delta = 1.0
    core = (slice(2, -2), slice(2, -2))
    worst_avg = 0.0
    worst_pair = 0.0
    for _ in range(100):
        f = rng.standard_normal((21, 21))
        w = rng.standard_normal((21, 21))
        for axis in (Axis.X, Axis.Y):
            d4 = apply_stencil(f, axis, StencilKind.C4, delta)
            d3p = apply_stencil(f, axis, StencilKind.F3, delta)
            d3m = apply_stencil(f, axis, StencilKind.B3, delta)
            worst_avg = max(worst_avg, float(
                np.abs(d4 - 0.5 * (d3p + d3m))[core].max()))
        got = upwind_pair(w, f, Axis.X, delta)
        for p in range(2, 19):
            for l in range(2, 19):
                direct = (w[p, l + 1] * _b3_at(f, p, l + 1, delta)
                          - w[p, l - 1] * _f3_at(f, p, l - 1, delta)) / (2 * delta)
                worst_pair = max(worst_pair, abs(got[p, l] - direct))
    report(2, worst_avg < 1e-13 and worst_pair < 1e-13,
           f"upwind-average identity {worst_avg:.3e}, composite pair vs "
           f"per-node evaluation {worst_pair:.3e} over 100 random 21x21 fields")


def test_criterion_3_pentadiagonal_norm():
    ok = True
    norms = {}
    for n in (1, 5, 50, 500):
        bound, norm = sw.penta_norm_diagnostic(n)
        norms[n] = norm
        ok = ok and norm <= 18.0 + 1e-9
    a = sw.penta_matrix(5)
    dense = math.sqrt(max(np.linalg.eigvalsh(a.T @ a)))
    agree = abs(norms[5] - dense) <= 1e-8
    report(3, ok and agree,
           f"norms {', '.join(f'n={n}: {v:.6f}' for n, v in norms.items())} "
           f"all <= 18; n=5 power iteration vs dense {abs(norms[5] - dense):.2e}")


def test_criterion_4_spatial_convergence(thacker_runs):
    e1 = {mx: thacker_runs["ex1"][(mx, 6)].e_h for mx in (36, 108, 324)}
    o1a = sw.convergence_order(e1[36], e1[108])
    o1b = sw.convergence_order(e1[108], e1[324])
    e2 = {mx: thacker_runs["ex2"][(mx, 5)].e_h for mx in (36, 108)}
    o2 = sw.convergence_order(e2[36], e2[108])
    ok = (3.5 <= o1a <= 4.5) and (3.5 <= o1b <= 4.5) and abs(o2 - 3.8787) <= 0.5
    report(4, ok,
           f"example 1 depth orders {o1a:.3f}, {o1b:.3f} (target [3.5, 4.5]); "
           f"example 2 order {o2:.3f} (target 3.8787 +/- 0.5); the clamped "
           f"wet/dry shoreline kink limits the measured rate")


def test_criterion_5_temporal_convergence(thacker_runs):
    # compare final-time depth fields under step refinement on the fixed
    # finest mesh; the pairwise-difference ratio isolates the k-error
    # from the (shared) spatial floor
    grid = sw.build_grid(0, 0, 4, 4, 324, 324)
    h4, h5, h6 = (thacker_runs["final_h"][e] for e in (4, 5, 6))
    d45 = sw.l2_norm(h4 - h5, grid)
    d56 = sw.l2_norm(h5 - h6, grid)
    order = sw.convergence_order(d45, d56)
    report(5, order >= 1.8,
           f"step-refinement order {order:.3f} from final-depth differences "
           f"{d45:.3e} / {d56:.3e} at k = 3^-4/3^-5/3^-6 (target >= 1.8); "
           f"the explicit sweep's second-order term and the per-step "
           f"shoreline stabilizers each carry an O(k) residual that caps "
           f"the observable rate")


def test_criterion_6_stability_dichotomy():
    p = sw.ThackerParams()
    mx = 108
    T = p.period(1)
    grid = sw.build_grid(0, 0, p.l, p.l, mx, mx)
    X, Y = grid.mesh()
    cache = sw.NormCache.for_grid(grid)
    min_thm1 = [math.inf]
    norms, exact_norms = [], []

    def collect(n, state):
        u, _ = sw.primitive_velocities(state, 1e-3)
        cache.update(u, state.h, p.g, grid)
        min_thm1[0] = min(min_thm1[0],
                          sw.theorem1_limit(cache, grid.dx, grid.mx, gamma=18.0))
        norms.append(sw.l2_norm(state.h, grid))
        hx, _, _ = sw.thacker_exact(1, X, Y, state.t, p)
        exact_norms.append(sw.l2_norm(hx, grid))

    governed = sw.run_thacker(1, mx, None, p, T=T, gamma=18.0,
                              clamp_to_cfl=True, collect=collect)
    envelope_ok = max(norms) <= 2.0 * max(exact_norms)
    ok_a = (not governed.diverged) and governed.e_h < 5e-3 and envelope_ok

    k_forced = 20.0 * min_thm1[0]
    with np.errstate(all="ignore"):
        forced = sw.run_thacker(1, mx, k_forced, p, T=T)
    ok_b = forced.diverged or forced.e_h > 1e3 * governed.e_h
    report(6, ok_a and ok_b,
           f"governed period: e_h = {governed.e_h:.3e} (< 5e-3), norm envelope "
           f"{max(norms):.4f} <= 2 x {max(exact_norms):.4f}; forced "
           f"k = {k_forced:.4f} (20x spectral bound): "
           f"{'diverged' if forced.diverged else f'e_h = {forced.e_h:.3e}'}")


def test_criterion_7_lake_at_rest():
    grid = sw.build_grid(0, 0, 1, 1, 10, 10)
    params = sw.PhysParams(g=10.0, n_manning=0.0, h_eps=1e-6)
    depth = 0.3
    state = sw.from_primitives(grid, np.full(grid.shape, depth),
                               np.zeros(grid.shape), np.zeros(grid.shape))
    slopes = sw.BedSlopes.zero(grid)

    def bc(x, y, t):
        shape = np.shape(x)
        return np.full(shape, depth), np.zeros(shape), np.zeros(shape)

    cfg = sw.StageConfig(picard_max_iters=200)
    for _ in range(1000):
        state = sw.composed_step(state, 0.01, params, cfg, slopes, bc)
    u, v = sw.primitive_velocities(state, params.h_eps)
    dh = float(np.abs(state.h - depth).max())
    du = float(np.abs(u).max())
    dv = float(np.abs(v).max())
    report(7, dh < 1e-10 and du < 1e-10 and dv < 1e-10,
           f"after 1000 composed steps: max|h - h0| = {dh:.2e}, "
           f"max|u| = {du:.2e}, max|v| = {dv:.2e}")


def test_criterion_8_flood_presets():
    wet = sw.logone_preset(sw.LogonePreset(sw.Bed.WET, sw.Discharge.MIN))
    dry = sw.logone_preset(sw.LogonePreset(sw.Bed.DRY, sw.Discharge.MIN))
    with np.errstate(all="ignore"):
        res_wet = sw.run(wet)
        res_dry = sw.run(dry)
    wet_ok = (res_wet.status is sw.RunStatus.COMPLETED
              and res_wet.final is not None and res_wet.final.is_finite())
    dry_ok = res_dry.status is sw.RunStatus.BLOW_UP and res_dry.fail_t < 3.0

    fidelity = (
        round(sw.LogonePreset(sw.Bed.WET, sw.Discharge.MIN).u0, 2) == 90.91
        and [sw.LogonePreset(sw.Bed.WET, d).q
             for d in (sw.Discharge.MIN, sw.Discharge.AVG, sw.Discharge.MAX)]
        == [16.0, 492.0, 2420.0]
        and wet.initial[1] == 0.176 and dry.initial[1] == 0.0014
        and wet.params.n_manning == 0.025 and wet.params.c0 == 40.0
        and wet.params.g == 10.0
        and wet.grid.dx == pytest.approx(8.89, abs=1e-12)
        and wet.grid.dy == pytest.approx(12.36, abs=1e-12)
        and wet.policy.fixed_k == 0.33 and wet.T == 3.0
    )
    report(8, wet_ok and dry_ok and fidelity,
           f"preset numbers verbatim: {fidelity}; wet/min: {res_wet.status.value}"
           f" (wanted Completed; the pinned step exceeds the convective limit"
           f" several-fold); dry/min: {res_dry.status.value} at "
           f"t = {res_dry.fail_t} (wanted BlowUp before T = 3)")


def test_criterion_9_determinism():
    doc = """
[grid]
lx = 1.0
ly = 1.0
mx = 12
my = 12

[initial]
kind = uniform
h0 = 0.3

[boundary]
kind = fixed
h = 0.32

[time]
T = 0.1
k = 0.005
"""
    texts = []
    for _ in range(2):
        result = sw.run(sw.load_scenario(doc))
        texts.append(sw.series_csv(result.records))
    same = texts[0] == texts[1]
    report(9, same,
           f"two single-threaded runs produced byte-identical series output "
           f"({len(texts[0])} bytes)")
