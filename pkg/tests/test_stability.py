import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swesplit import (
    BoundSource,
    NormCache,
    StepBound,
    build_grid,
    cfl_limit,
    penta_matrix,
    penta_norm_diagnostic,
    theorem1_limit,
)


class TestCflLimit:
    def test_hand_value(self):
        k = cfl_limit(1.0, 2.0, 0.1, 10.0, 0.1, 0.1)
        assert k == pytest.approx(min(0.1 / 2.0, 0.1 / 3.0))

    def test_gravity_wave_only(self):
        assert cfl_limit(0.0, 0.0, 0.1, 10.0, 0.1, 0.1) == pytest.approx(0.1)

    def test_degenerate_state_capped(self):
        assert cfl_limit(0.0, 0.0, 0.0, 10.0, 0.1, 0.1) == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            cfl_limit(1.0, 1.0, -0.1, 10.0, 0.1, 0.1)
        with pytest.raises(ValueError):
            cfl_limit(1.0, 1.0, 0.1, 10.0, 0.0, 0.1)

    @given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 1),
           st.floats(1.5, 4.0))
    @settings(max_examples=40, deadline=None)
    def test_scales_linearly_with_mesh(self, u, v, h, factor):
        base = cfl_limit(u, v, h, 10.0, 0.1, 0.2)
        scaled = cfl_limit(u, v, h, 10.0, 0.1 * factor, 0.2 * factor)
        assert scaled == pytest.approx(factor * base, rel=1e-12)


class TestSpectralLimit:
    def test_quiescent_flow_imposes_no_limit(self):
        grid = build_grid(0, 0, 4, 4, 109, 109)
        cache = NormCache.for_grid(grid)
        assert theorem1_limit(cache, grid.dx, grid.mx, gamma=18.0) == 1.0

    def test_hand_value(self):
        # independent arithmetic for dx = dy = 1/27 on a 109x109-cell grid
        dx = 1.0 / 27.0
        mx = my = 109
        beta = math.sqrt(dx * dx * (mx - 3) * (my - 3))
        cache = NormCache(beta_norm=beta, u_inf_norm=0.5, bernoulli_inf_norm=0.6)
        branch1 = beta / (math.sqrt(mx - 3) * 0.5)
        branch2 = 0.5 / 0.6
        want = (48.0 / 18.0) * dx * min(branch1, branch2)
        got = theorem1_limit(cache, dx, mx, gamma=18.0)
        assert got == pytest.approx(want, rel=1e-14)

    def test_square_domain_norm_inequality(self):
        # for (my - 3) dy <= ly, beta/sqrt(mx-3) <= sqrt(ly dx)
        grid = build_grid(0, 0, 4, 4, 109, 109)
        cache = NormCache.for_grid(grid)
        assert cache.beta_norm / math.sqrt(grid.mx - 3) <= math.sqrt(grid.ly * grid.dx)

    def test_validation(self):
        cache = NormCache(beta_norm=1.0)
        with pytest.raises(ValueError):
            theorem1_limit(cache, 0.1, 10, gamma=0.0)
        with pytest.raises(ValueError):
            theorem1_limit(cache, 0.1, 10, gamma=19.0)
        with pytest.raises(ValueError):
            theorem1_limit(cache, 0.1, 3)

    @given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(1.1, 10.0))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_bernoulli_norm_and_linear_in_dx(self, u_n, bern, grow):
        cache_lo = NormCache(beta_norm=2.0, u_inf_norm=u_n, bernoulli_inf_norm=bern)
        cache_hi = NormCache(beta_norm=2.0, u_inf_norm=u_n,
                             bernoulli_inf_norm=bern * grow)
        k_lo = theorem1_limit(cache_lo, 0.05, 50)
        k_hi = theorem1_limit(cache_hi, 0.05, 50)
        assert k_hi <= k_lo * (1 + 1e-12)
        assert theorem1_limit(cache_lo, 0.1, 50) == pytest.approx(2 * k_lo, rel=1e-12)


class TestNormCache:
    def test_beta_norm_formula(self):
        grid = build_grid(0, 0, 2, 3, 12, 15)
        cache = NormCache.for_grid(grid)
        assert cache.beta_norm == pytest.approx(
            math.sqrt(grid.dx * grid.dy * 9 * 12))

    def test_running_maxima_never_decrease(self, rng):
        grid = build_grid(0, 0, 1, 1, 10, 10)
        cache = NormCache.for_grid(grid)
        prev = (0.0, 0.0)
        for _ in range(10):
            u = rng.standard_normal(grid.shape)
            h = rng.uniform(0, 1, grid.shape)
            cache.update(u, h, 10.0, grid)
            assert cache.u_inf_norm >= prev[0]
            assert cache.bernoulli_inf_norm >= prev[1]
            prev = (cache.u_inf_norm, cache.bernoulli_inf_norm)


class TestStepBound:
    def test_chosen_step_cannot_exceed_its_bound(self):
        with pytest.raises(ValueError):
            StepBound(k_cfl=0.1, k_thm1=0.2, gamma=18.0, chosen_k=0.15,
                      source=BoundSource.CFL)

    def test_user_override_is_unchecked(self):
        b = StepBound(k_cfl=0.1, k_thm1=0.2, gamma=18.0, chosen_k=5.0,
                      source=BoundSource.USER_OVERRIDE)
        assert b.chosen_k == 5.0

    def test_positivity_enforced(self):
        with pytest.raises(ValueError):
            StepBound(k_cfl=0.0, k_thm1=0.2, gamma=18.0, chosen_k=0.1,
                      source=BoundSource.THEOREM1)


class TestPentaDiagnostic:
    def test_matrix_structure(self):
        a = penta_matrix(6)
        assert np.array_equal(a, -a.T)
        assert np.all(np.diag(a, 1) == 8.0)
        assert np.all(np.diag(a, 2) == -1.0)
        assert np.all(np.diag(a) == 0.0)

    def test_trivial_size(self):
        bound, norm = penta_norm_diagnostic(1)
        assert bound == 18.0 and norm == 0.0

    def test_power_iteration_matches_dense_eigensolver(self):
        a = penta_matrix(5)
        dense = math.sqrt(max(np.linalg.eigvalsh(a.T @ a)))
        _, norm = penta_norm_diagnostic(5)
        assert norm == pytest.approx(dense, abs=1e-8)
        assert norm <= 18.0

    @pytest.mark.parametrize("n", [1, 2, 5, 20, 50, 500])
    def test_norm_bounded_by_row_sum(self, n):
        _, norm = penta_norm_diagnostic(n)
        assert norm <= 18.0 + 1e-9

    def test_large_size_approaches_bound(self):
        _, norm = penta_norm_diagnostic(500)
        assert 15.0 <= norm <= 18.0 + 1e-9

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            penta_matrix(0)
