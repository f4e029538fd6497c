import math

import numpy as np
import pytest

from actionlab.density import free_particle, harmonic
from actionlab.evolution import (
    EvolutionTrace,
    WaveFunction,
    apply_kernel,
    band_fraction_above,
    commutator_check,
    energy_expectation,
    evolve,
    free_packet_exact,
    galilean_boost,
    gaussian_integral_check,
    gaussian_integral_real_axis_demo,
    gaussian_packet,
    momentum_expectation,
    position_expectation,
    schrodinger_residual,
    snapshot_to_csv,
    spectral_derivative,
    trace_to_csv,
)
from actionlab.grids import build_spatial_grid
from actionlab.propagator import Kernel, analytic_short_time, free_kernel

HARM_V = lambda x: 0.5 * x**2  # noqa: E731


def spectral_free_evolution(psi: WaveFunction, t: float, m=1.0):
    """Independent oracle: exact free evolution via the momentum representation."""
    k = np.fft.fftfreq(psi.grid.count, d=psi.grid.spacing) * 2 * math.pi
    phase = np.exp(-1j * psi.hbar * k**2 * t / (2 * m))
    out = np.fft.ifft(phase * np.fft.fft(psi.samples))
    return WaveFunction(psi.grid, out, psi.hbar, psi.time_tag + t)


class TestWaveFunction:
    def test_packet_normalized(self):
        grid = build_spatial_grid(-10, 10, 256)
        psi = gaussian_packet(grid, 0.0, 1.0, 2.0)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)

    def test_band_limit_flag(self):
        grid = build_spatial_grid(-10, 10, 64)
        smooth = gaussian_packet(grid, 0.0, 2.0, 0.0)
        assert not smooth.band_limit_exceeded
        rough = WaveFunction(grid, np.resize([1.0, -1.0], 64).astype(complex))
        assert rough.band_limit_exceeded
        assert band_fraction_above(rough) > 0.5


class TestFreePacketOracle:
    def test_closed_form_matches_spectral_route(self):
        grid = build_spatial_grid(-20, 20, 1024)
        psi0 = gaussian_packet(grid, -1.0, 1.0, 1.5)
        for t in (0.1, 0.5, 2.0):
            closed = free_packet_exact(grid, -1.0, 1.0, 1.5, t)
            spectral = spectral_free_evolution(psi0, t)
            err = np.max(np.abs(closed.samples - spectral.samples))
            assert err < 1e-10

    def test_initial_condition(self):
        grid = build_spatial_grid(-20, 20, 512)
        a = gaussian_packet(grid, 0.5, 1.2, -0.7)
        b = free_packet_exact(grid, 0.5, 1.2, -0.7, 0.0)
        assert np.max(np.abs(a.samples - b.samples)) < 1e-9


class TestApplyKernel:
    def test_identity_kernel(self):
        grid = build_spatial_grid(-8, 8, 128)
        w = grid.trapezoid_weights()
        ident = Kernel(grid, np.diag(1.0 / w).astype(complex), 0.0, 1.0, "composed")
        psi = gaussian_packet(grid, 0.0, 1.0, 1.0)
        out = apply_kernel(ident, psi)
        assert np.max(np.abs(out.samples - psi.samples)) < 1e-8

    def test_linearity(self):
        grid = build_spatial_grid(-6, 6, 512)
        k = free_kernel(1.0, 0.1, 1.0, grid)
        p1 = gaussian_packet(grid, -0.5, 0.5, 1.0)
        p2 = gaussian_packet(grid, 0.5, 0.7, -2.0)
        a, b = 0.3 - 0.2j, 1.1 + 0.5j
        combined = WaveFunction(grid, a * p1.samples + b * p2.samples)
        lhs = apply_kernel(k, combined).samples
        rhs = a * apply_kernel(k, p1).samples + b * apply_kernel(k, p2).samples
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_free_step_matches_exact_packet(self):
        grid = build_spatial_grid(-10, 10, 2048)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        k = free_kernel(1.0, 0.1, 1.0, grid)
        out = apply_kernel(k, psi)
        exact = free_packet_exact(grid, 0.0, 1.0, 0.0, 0.1)
        w = grid.trapezoid_weights()
        err = math.sqrt(float(np.sum(w * np.abs(out.samples - exact.samples) ** 2)))
        assert err < 1e-4

    def test_time_tag_advances(self):
        grid = build_spatial_grid(-10, 10, 2048)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        k = free_kernel(1.0, 0.1, 1.0, grid)
        assert apply_kernel(k, psi).time_tag == pytest.approx(0.1)

    def test_grid_mismatch(self):
        k = free_kernel(1.0, 0.1, 1.0, build_spatial_grid(-10, 10, 128))
        psi = gaussian_packet(build_spatial_grid(-10, 10, 256), 0, 1, 0)
        with pytest.raises(ValueError, match="different grids"):
            apply_kernel(k, psi)


class TestEvolve:
    def test_hundred_free_steps_norm(self):
        # resolved-chirp geometry: pi*dt*count/span = 64 >> span 50
        grid = build_spatial_grid(-25, 25, 4096)
        psi = gaussian_packet(grid, 0.0, 4.0, 0.0)
        k = free_kernel(1.0, 0.25, 1.0, grid)
        trace = evolve(k, psi, 100)
        assert np.max(np.abs(trace.norms / trace.norms[0] - 1.0)) < 1e-6

    def test_single_step_equals_apply(self):
        grid = build_spatial_grid(-10, 10, 1024)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        k = free_kernel(1.0, 0.05, 1.0, grid)
        trace = evolve(k, psi, 1)
        direct = apply_kernel(k, psi)
        assert np.array_equal(trace.snapshots[-1].samples, direct.samples)

    def test_norm_drift_aborts(self):
        grid = build_spatial_grid(-10, 10, 256)
        bad = Kernel(grid, 1.5 * np.eye(256, dtype=complex), 0.1, 1.0, "composed")
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        with pytest.raises(RuntimeError, match="norm drift"):
            evolve(bad, psi, 3)

    def test_harmonic_period_returns_center(self):
        # coherent-width packet displaced by 1; classical period 2*pi
        grid = build_spatial_grid(-8, 8, 2048)
        sigma_coh = 1.0 / math.sqrt(2.0)
        psi = gaussian_packet(grid, 1.0, sigma_coh, 0.0)
        steps = 96
        dt = 2 * math.pi / steps
        k = analytic_short_time(1.0, HARM_V, dt, 1.0, grid)
        trace = evolve(k, psi, steps)
        assert position_expectation(trace.snapshots[0]) == pytest.approx(1.0, abs=1e-9)
        assert position_expectation(trace.snapshots[-1]) == pytest.approx(1.0, abs=1e-3)


class TestSchrodingerResidual:
    def harmonic_residual(self, dt, steps=6, omega=0.5):
        # soft oscillator keeps the per-step kernel amplitude error under
        # the evolve() abort while the first-order term stays measurable;
        # ground-width packet suppresses the competing dt^2 differencing term
        grid = build_spatial_grid(-8, 8, 2048)
        v = lambda x: 0.5 * omega**2 * x**2  # noqa: E731
        psi = gaussian_packet(grid, 0.0, 1.0 / math.sqrt(2.0 * omega), 0.0)
        k = analytic_short_time(1.0, v, dt, 1.0, grid)
        trace = evolve(k, psi, steps)
        return float(np.median(schrodinger_residual(trace, v, 1.0)))

    def test_harmonic_first_order_in_dt(self):
        r1 = self.harmonic_residual(0.1)
        r2 = self.harmonic_residual(0.05)
        assert r1 / r2 == pytest.approx(2.0, abs=0.2)

    def test_free_residual_second_order(self):
        # the midpoint kernel is exact for V = 0, so only the centered
        # finite-difference truncation remains: ratio 4 under halving
        def residual(dt):
            grid = build_spatial_grid(-10, 10, 2048)
            psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
            k = free_kernel(1.0, dt, 1.0, grid)
            trace = evolve(k, psi, 6)
            return float(np.median(schrodinger_residual(trace, None, 1.0)))

        ratio = residual(0.1) / residual(0.05)
        assert ratio == pytest.approx(4.0, abs=0.3)

    def test_constant_potential_shift_invariance(self):
        # V -> V + c only adds the global phase exp(-i c t / hbar): after
        # regauging the trace the residual against the original V is unchanged
        grid = build_spatial_grid(-8, 8, 2048)
        omega = 0.5
        v0 = lambda x: 0.5 * omega**2 * x**2  # noqa: E731
        psi = gaussian_packet(grid, 0.0, 1.0 / math.sqrt(omega) / math.sqrt(2), 0.0)
        dt, steps, c = 0.05, 6, 3.7
        shifted_v = lambda x: v0(x) + c  # noqa: E731
        k0 = analytic_short_time(1.0, v0, dt, 1.0, grid)
        k1 = analytic_short_time(1.0, shifted_v, dt, 1.0, grid)
        t0 = evolve(k0, psi, steps)
        t1 = evolve(k1, psi, steps)
        regauged = EvolutionTrace(
            [WaveFunction(grid, s.samples * np.exp(1j * c * s.time_tag),
                          s.hbar, s.time_tag) for s in t1.snapshots],
            t1.norms, t1.dt)
        for n in (1, 3):
            assert np.max(np.abs(regauged.snapshots[n].samples
                                 - t0.snapshots[n].samples)) < 1e-10
        r0 = schrodinger_residual(t0, v0, 1.0)
        r1 = schrodinger_residual(regauged, v0, 1.0)
        assert np.max(np.abs(r0 - r1)) < 1e-6

    def test_too_few_snapshots(self):
        grid = build_spatial_grid(-10, 10, 1024)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        k = free_kernel(1.0, 0.05, 1.0, grid)
        trace = evolve(k, psi, 1)
        with pytest.raises(ValueError, match="3 snapshots"):
            schrodinger_residual(trace, None, 1.0)


class TestEnergyAndGalilean:
    def test_energy_conserved_free(self):
        # fully resolved chirp (pi dt N / X = 1.14 X) and 5.8 sigma margins
        # after spreading; anything less leaks tail energy into the window
        grid = build_spatial_grid(-29, 29, 4864)
        psi = gaussian_packet(grid, 0.0, math.sqrt(12.5), 0.0)
        k = free_kernel(1.0, 0.25, 1.0, grid)
        trace = evolve(k, psi, 100)
        e = [energy_expectation(s, None, 1.0) for s in trace.snapshots]
        assert abs(e[-1] - e[0]) / abs(e[0]) < 1e-4

    def test_energy_conserved_harmonic(self):
        grid = build_spatial_grid(-8, 8, 2048)
        omega = 0.5
        v = lambda x: 0.5 * omega**2 * x**2  # noqa: E731
        psi = gaussian_packet(grid, 0.7, 1.0 / math.sqrt(2 * omega), 0.0)
        k = analytic_short_time(1.0, v, 0.05, 1.0, grid)
        trace = evolve(k, psi, 100)
        e = [energy_expectation(s, v, 1.0) for s in trace.snapshots]
        assert abs(e[-1] - e[0]) / abs(e[0]) < 1e-4

    def test_galilean_phase_covariance(self):
        grid = build_spatial_grid(-20, 20, 4096)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        u = 1.5
        boosted = galilean_boost(psi, u, 1.0)
        assert momentum_expectation(boosted) == pytest.approx(u, rel=1e-10)
        k = free_kernel(1.0, 0.2, 1.0, grid)
        trace = evolve(k, boosted, 5)
        t = trace.snapshots[-1].time_tag
        assert position_expectation(trace.snapshots[-1]) == pytest.approx(u * t, abs=1e-4)


class TestGaussianIntegrals:
    def test_unit_parameters(self):
        r0, r2 = gaussian_integral_check(1.0, 1.0, 0.1)
        assert r0 < 1e-8
        assert r2 < 1e-8

    def test_second_moment_scaling(self):
        # residuals stay tiny, so the implied moments scale with dt and 1/m
        for m, dt in ((1.0, 0.2), (2.0, 0.2), (1.0, 0.4)):
            r0, r2 = gaussian_integral_check(m, 1.0, dt)
            assert r0 < 1e-8 and r2 < 1e-8

    def test_truncation_warning(self):
        with pytest.warns(UserWarning, match="truncation"):
            gaussian_integral_check(1.0, 1.0, 0.1, half_width_sigmas=3.0)

    def test_real_axis_demo_fails(self):
        r0, r2 = gaussian_integral_real_axis_demo(1.0, 1.0, 0.1, half_width=30.0)
        assert r0 > 1e-3  # no contour rotation, no convergence


class TestCommutator:
    def test_gaussian_packet(self):
        grid = build_spatial_grid(-12, 12, 512)
        psi = gaussian_packet(grid, 0.3, 1.0, 1.0)
        assert commutator_check(psi) < 1e-6

    def test_windowed_plane_wave(self):
        grid = build_spatial_grid(-12, 12, 1024)
        x = grid.points
        window = np.exp(-(x / 3.0) ** 8)  # flat top, smooth decay
        psi = WaveFunction(grid, window * np.exp(2j * x))
        assert commutator_check(psi) < 1e-5

    def test_zero_state(self):
        grid = build_spatial_grid(-12, 12, 256)
        psi = WaveFunction(grid, np.zeros(256, dtype=complex))
        assert commutator_check(psi) == 0.0

    def test_boundary_leakage_rejected(self):
        grid = build_spatial_grid(-2, 2, 256)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)  # edge at 2 sigma
        with pytest.raises(ValueError, match="boundary leakage"):
            commutator_check(psi)


class TestExports:
    def test_trace_csv(self, tmp_path):
        grid = build_spatial_grid(-10, 10, 1024)
        psi = gaussian_packet(grid, 0.0, 1.0, 0.0)
        k = free_kernel(1.0, 0.05, 1.0, grid)
        trace = evolve(k, psi, 4)
        p = tmp_path / "trace.csv"
        trace_to_csv(trace, p, None, 1.0)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "t,norm,residual,x,p,H"
        assert len(lines) == 6

    def test_snapshot_csv(self, tmp_path):
        grid = build_spatial_grid(-10, 10, 64)
        psi = gaussian_packet(grid, 0.0, 2.0, 0.0)
        p = tmp_path / "snap.csv"
        snapshot_to_csv(psi, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "x,re_psi,im_psi"
        assert len(lines) == 65


def test_spectral_derivative_plane_wave():
    grid = build_spatial_grid(-math.pi, math.pi - 2 * math.pi / 128, 128)
    f = np.exp(3j * grid.points)
    df = spectral_derivative(grid, f)
    assert np.max(np.abs(df - 3j * f)) < 1e-10
