import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from actionlab.density import (
    field_from_rows,
    free_particle,
    gaussian_field,
    grid_spike,
)
from actionlab.grids import action_grid_from_extent, build_action_grid, build_spatial_grid
from actionlab.inference import (
    cramer_rao_check,
    fisher_information,
    fisher_information_fd,
    indistinguishability_ratio_diffusive,
    indistinguishability_ratio_fixed,
    log_partition,
    maxent_tilt,
    solve_eta,
)

FREE = free_particle()


def gaussian_row_field(mu=0.0, var=1.0, count_b=9, count_a=513, half=8.0):
    """Field whose rows are identical Gaussians: marginal is the same Gaussian."""
    sp = build_spatial_grid(0, 1, count_b)
    grid = build_action_grid(mu, math.sqrt(var), count_a, half_width_sigmas=half)
    row = np.exp(-((grid.values - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    return field_from_rows(sp, grid, np.tile(row, (count_b, 1)), a=0.0, duration=1.0)


class TestMaxEntTilt:
    def test_eta_zero_is_pure_normalization(self):
        f = gaussian_row_field()
        with pytest.warns(UserWarning, match="nonpositive eta"):
            tilted, model = maxent_tilt(f, 0.0)
        assert tilted.total_mass() == pytest.approx(1.0, abs=1e-12)
        ratio = tilted.samples[4] / f.samples[4]
        assert np.allclose(ratio, ratio[256], rtol=1e-12)  # constant rescale
        assert model.mean_action == pytest.approx(0.0, abs=1e-10)

    def test_gaussian_tilt_identity(self):
        # exponential tilt of N(mu, s^2) by eta: mean mu - eta s^2, variance s^2
        mu, var, eta = 1.0, 0.64, 0.8
        f = gaussian_row_field(mu, var, count_a=1025, half=12.0)
        _, model = maxent_tilt(f, eta)
        assert model.mean_action == pytest.approx(mu - eta * var, abs=1e-10)
        assert model.var_action == pytest.approx(var, rel=1e-9)

    def test_spike_partition_value(self):
        # single-atom tilt: Z = mass * exp(-eta * A0)
        sp = build_spatial_grid(0, 1, 8)
        grid = action_grid_from_extent(-2, 2, 129)
        spike = grid_spike(grid, 0.5).samples
        rows = np.zeros((8, 129))
        rows[3] = spike / sp.trapezoid_weights()[3]  # unit joint mass
        f = field_from_rows(sp, grid, rows, a=0.0, duration=1.0)
        eta = 1.3
        a0 = grid.values[np.argmax(spike)]
        _, model = maxent_tilt(f, eta)
        assert model.log_z == pytest.approx(-eta * a0, abs=1e-12)
        assert model.mean_action == pytest.approx(a0, abs=1e-12)
        assert model.var_action < 1e-20

    def test_resolution_is_inverse_eta(self):
        f = gaussian_row_field()
        _, model = maxent_tilt(f, 2.5)
        assert model.resolution == pytest.approx(0.4, abs=1e-15)

    def test_overflow_guard(self):
        f = gaussian_row_field()
        with pytest.raises(ValueError, match="overflow guard"):
            log_partition(f, 1e3)

    def test_normalization_across_eta(self):
        f = gaussian_row_field(count_a=1025, half=12.0)
        for eta in (0.1, 0.5, 1.0, 2.0):
            tilted, _ = maxent_tilt(f, eta)
            assert abs(tilted.total_mass() - 1.0) < 1e-10


class TestExponentialFamilyIdentities:
    def test_dlogz_deta_is_minus_mean(self):
        f = gaussian_row_field(0.3, 1.2, count_a=1025, half=12.0)
        eta, h = 0.7, 1e-5
        lhs = (log_partition(f, eta + h) - log_partition(f, eta - h)) / (2 * h)
        _, model = maxent_tilt(f, eta)
        assert lhs == pytest.approx(-model.mean_action, rel=1e-6)

    def test_fisher_is_tilt_invariant_gaussian_variance(self):
        f = gaussian_row_field(0.0, 1.0, count_a=1025, half=12.0)
        for eta in (0.2, 1.0, 1.7):
            assert fisher_information(f, eta) == pytest.approx(1.0, rel=1e-8)

    def test_fisher_of_spike_vanishes(self):
        sp = build_spatial_grid(0, 1, 8)
        grid = action_grid_from_extent(-2, 2, 129)
        rows = np.tile(grid_spike(grid, 0.2).samples, (8, 1))
        f = field_from_rows(sp, grid, rows, a=0.0, duration=1.0)
        assert fisher_information(f, 0.9) < 1e-15

    def test_fisher_matches_finite_difference_oracle(self):
        sp = build_spatial_grid(-2, 2, 33)
        f = gaussian_field(0.0, sp, 0.5, FREE, locality_sigma=0.5)
        eta = 0.8
        direct = fisher_information(f, eta)
        oracle = fisher_information_fd(f, eta)
        assert direct == pytest.approx(oracle, rel=1e-4)

    def test_solve_eta_round_trip(self):
        f = gaussian_row_field(0.5, 0.9, count_a=1025, half=12.0)
        _, model = maxent_tilt(f, 1.1)
        eta = solve_eta(f, model.mean_action)
        assert eta == pytest.approx(1.1, rel=1e-9)


class TestCramerRao:
    def test_boundary_product(self):
        product, ok = cramer_rao_check(4.0, 0.5)
        assert product == pytest.approx(1.0)
        assert ok

    def test_slack_product(self):
        product, ok = cramer_rao_check(1.0, 2.0)
        assert product == pytest.approx(2.0)
        assert ok

    def test_violation_detected(self):
        product, ok = cramer_rao_check(1.0, 0.5)
        assert product == pytest.approx(0.5)
        assert not ok

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            cramer_rao_check(0.0, 1.0)
        with pytest.raises(ValueError):
            cramer_rao_check(1.0, -1.0)

    @given(st.floats(0.01, 100), st.floats(0.01, 100))
    def test_product_formula(self, information, delta_eta):
        product, _ = cramer_rao_check(information, delta_eta)
        assert product == pytest.approx(math.sqrt(information) * delta_eta)


class TestIndistinguishabilityRatios:
    def test_fixed_resolution_value(self):
        assert indistinguishability_ratio_fixed(1.0, 0.0, 1e-3, 1.0) == pytest.approx(1e-3)

    def test_equal_lagrangians_vanish(self):
        assert indistinguishability_ratio_fixed(2.3, 2.3, 0.1, 5.0) == 0.0
        assert indistinguishability_ratio_diffusive(2.3, 2.3, 0.1, 1.0) == 0.0

    def test_fixed_linear_in_dt(self):
        r1 = indistinguishability_ratio_fixed(1.5, 0.5, 0.2, 2.0)
        r2 = indistinguishability_ratio_fixed(1.5, 0.5, 0.1, 2.0)
        assert r2 == pytest.approx(r1 / 2, rel=1e-12)

    def test_diffusive_value(self):
        assert indistinguishability_ratio_diffusive(1.0, 0.0, 1e-4, 1.0) == pytest.approx(1e-2)

    def test_diffusive_sqrt_law(self):
        r1 = indistinguishability_ratio_diffusive(1.0, 0.0, 0.4, 1.3)
        r4 = indistinguishability_ratio_diffusive(1.0, 0.0, 0.1, 1.3)
        assert r4 / r1 == pytest.approx(0.5, rel=1e-12)

    @settings(max_examples=50)
    @given(st.floats(1e-6, 1.0), st.floats(0.1, 10.0))
    def test_loglog_slopes(self, dt, eta):
        # both ratios follow exact power laws in dt
        f1 = indistinguishability_ratio_fixed(1.0, 0.0, dt, eta)
        f2 = indistinguishability_ratio_fixed(1.0, 0.0, dt / 2, eta)
        assert f1 / f2 == pytest.approx(2.0, rel=1e-9)
        d1 = indistinguishability_ratio_diffusive(1.0, 0.0, dt, eta)
        d2 = indistinguishability_ratio_diffusive(1.0, 0.0, dt / 2, eta)
        assert (d1 / d2) ** 2 == pytest.approx(2.0, rel=1e-9)
