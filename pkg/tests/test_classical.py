import math

import numpy as np
import pytest

from actionlab.classical import (
    DiscretePath,
    action_number,
    classical_action_along,
    concentration_check,
    discrete_stationary_path,
    euler_lagrange_residual,
    stationary_midpoint,
)
from actionlab.density import (
    classical_action,
    free_particle,
    gaussian_short_time,
    harmonic,
)

FREE = free_particle()
HARM = harmonic()


def free_mean_action(a, b, t):
    return classical_action(a, b, t, FREE)


class TestStationaryMidpoint:
    def test_symmetric_legs(self):
        b = stationary_midpoint(0.0, 2.0, 1.0, 1.0, free_mean_action)
        assert b == pytest.approx(1.0, abs=1e-10)

    def test_constant_velocity_split(self):
        # total time 4 at constant velocity 1: after t1 = 1 the point is at 1
        b = stationary_midpoint(0.0, 4.0, 1.0, 3.0, free_mean_action)
        assert b == pytest.approx(1.0, abs=1e-8)

    def test_momentum_continuity(self):
        a, c, t1, t2 = -0.5, 3.5, 0.8, 1.7
        b = stationary_midpoint(a, c, t1, t2, free_mean_action)
        p_in = FREE.mass * (b - a) / t1
        p_out = FREE.mass * (c - b) / t2
        assert p_in == pytest.approx(p_out, abs=1e-8)

    def test_no_root_raises(self):
        # strictly monotone mean action: gradient never changes sign
        rising = lambda a, b, t: 10.0 * b  # noqa: E731
        with pytest.raises(ValueError, match="no stationary point"):
            stationary_midpoint(0.0, 1.0, 1.0, 1.0, rising)


class TestDiscreteStationaryPath:
    def test_free_path_is_straight(self):
        path = discrete_stationary_path(0.0, 1.0, 16, 1.0 / 16, FREE)
        straight = np.linspace(0.0, 1.0, 17)
        assert np.max(np.abs(path.positions - straight)) < 1e-12

    def test_two_segments_match_stationary_midpoint(self):
        a, b, dt = 0.0, 1.0, 0.7
        path = discrete_stationary_path(a, b, 2, dt, FREE)
        mid = stationary_midpoint(a, b, dt, dt, free_mean_action)
        assert path.positions[1] == pytest.approx(mid, abs=1e-9)

    def test_harmonic_trivial_branch(self):
        # a = b = 0 below the focal time: the rest path
        path = discrete_stationary_path(0.0, 0.0, 32, (math.pi / 2) / 32, HARM)
        assert np.max(np.abs(path.positions)) < 1e-10

    def test_harmonic_sine_profile(self):
        # a=0, b=1, T=pi/2: x*(t) = sin(t) for unit omega
        n = 64
        total = math.pi / 2
        path = discrete_stationary_path(0.0, 1.0, n, total / n, HARM)
        expect = np.sin(path.times)
        assert np.max(np.abs(path.positions - expect)) < 1e-3

    def test_caustic_detected(self):
        with pytest.raises(RuntimeError, match="caustic"):
            discrete_stationary_path(0.0, 0.0, 64, math.pi / 64, HARM)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            discrete_stationary_path(0, 1, 1, 0.1, FREE)
        with pytest.raises(ValueError):
            discrete_stationary_path(0, 1, 4, -0.1, FREE)


class TestEulerLagrange:
    def test_free_straight_line_exact(self):
        path = discrete_stationary_path(0.0, 1.0, 32, 1.0 / 32, FREE)
        assert euler_lagrange_residual(path) < 1e-12

    def test_harmonic_residual_second_order(self):
        total = math.pi / 3
        residuals = []
        for n in (32, 64, 128):
            path = discrete_stationary_path(0.0, 1.0, n, total / n, HARM)
            residuals.append(euler_lagrange_residual(path))
        order1 = math.log2(residuals[0] / residuals[1])
        order2 = math.log2(residuals[1] / residuals[2])
        assert order1 == pytest.approx(2.0, abs=0.3)
        assert order2 == pytest.approx(2.0, abs=0.3)

    def test_perturbed_path_has_larger_residual(self):
        total = math.pi / 3
        path = discrete_stationary_path(0.0, 1.0, 64, total / 64, HARM)
        rng = np.random.default_rng(3)
        noisy = path.positions.copy()
        noisy[1:-1] += rng.uniform(-0.01, 0.01, size=noisy.size - 2)
        perturbed = DiscretePath(path.times, noisy, path.dt, path.lagrangian)
        assert euler_lagrange_residual(perturbed) > 10 * euler_lagrange_residual(path)


class TestClassicalAction:
    def test_free_unit_case(self):
        path = discrete_stationary_path(0.0, 1.0, 64, 1.0 / 64, FREE)
        assert classical_action_along(path) == pytest.approx(0.5, abs=1e-12)

    def test_harmonic_rest_path_zero(self):
        path = discrete_stationary_path(0.0, 0.0, 32, (math.pi / 3) / 32, HARM)
        assert abs(classical_action_along(path)) < 1e-12

    def test_matches_fine_quadrature_oracle(self):
        # oracle: integrate L along the closed-form harmonic trajectory
        # x*(t) = sin(t)/sin(T) with a fine quadrature, independent of the
        # discrete path machinery
        total = math.pi / 3
        t = np.linspace(0.0, total, 20001)
        x = np.sin(t) / math.sin(total)
        v = np.cos(t) / math.sin(total)
        lagr = 0.5 * v**2 - 0.5 * x**2
        oracle = np.trapezoid(lagr, t)
        vals = []
        for n in (64, 128):
            path = discrete_stationary_path(0.0, 1.0, n, total / n, HARM)
            vals.append(classical_action_along(path))
        err64 = abs(vals[0] - oracle)
        err128 = abs(vals[1] - oracle)
        assert err64 < 1e-3
        assert err128 < err64 / 3  # O(dt^2) shrinkage


class TestConcentration:
    @staticmethod
    def scaled_builder(scale):
        # unit velocity over a duration `scale`: mean action scale/2 and
        # variance scale, the diffusive bookkeeping of a composed marginal
        lag = free_particle()
        return gaussian_short_time(0.0, scale, scale, lag, sigma2_rate=1.0)

    def test_baseline_returned(self):
        ratio = concentration_check(self.scaled_builder, 1.0)
        assert ratio == pytest.approx(math.sqrt(1.0) / 0.5, rel=1e-6)

    def test_inverse_sqrt_scaling(self):
        r1 = concentration_check(self.scaled_builder, 1.0)
        r100 = concentration_check(self.scaled_builder, 100.0)
        assert r100 == pytest.approx(r1 / 10.0, rel=1e-6)

    def test_strictly_decreasing_over_decades(self):
        ratios = [concentration_check(self.scaled_builder, s)
                  for s in (1.0, 10.0, 100.0, 1000.0)]
        assert all(r1 > r2 for r1, r2 in zip(ratios, ratios[1:]))

    def test_zero_mean_rejected(self):
        builder = lambda scale: gaussian_short_time(0.0, 0.0, 1.0, FREE)  # noqa: E731
        with pytest.raises(ValueError, match="zero mean"):
            concentration_check(builder, 1.0)


class TestActionNumber:
    def test_si_gram_scale(self):
        hbar_si = 1.054571817e-34
        action = 1e-3 * 1.0**2 * 1.0  # m v^2 t for 1 g at 1 m/s over 1 s
        n = action_number(action, hbar_si)
        assert 1e30 < n < 1e32

    def test_unit_quantum(self):
        assert action_number(1.0, 1.0) == 1.0

    def test_zero_action(self):
        assert action_number(0.0, 1.0) == 0.0

    def test_bad_hbar(self):
        with pytest.raises(ValueError):
            action_number(1.0, 0.0)
