"""Verification campaign registry: every derived identity as a named check.

Each check runs a pinned desk-scale configuration and reports one binding
residual with its tolerance; compound checks normalize each subresidual by
its own tolerance and bind at 1. The registry backs the command line
(`verify <name>`, `run <cfg>`, `list-checks`) and the acceptance suite.
"""

from __future__ import annotations

import math
import platform
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import composition, inference
from .calibration import SlitGeometry, fringe_spacing, infer_eta
from .classical import (
    action_number,
    classical_action_along,
    discrete_stationary_path,
    euler_lagrange_residual,
)
from .density import (
    ActionDensity,
    free_particle,
    gaussian_field,
    gaussian_short_time,
    marginal_over_endpoints,
)
from .evolution import evolve, gaussian_packet, schrodinger_residual, commutator_check
from .grids import action_grid_from_extent, build_spatial_grid
from .path_oracle import LatticePathEnsemble, equivalence_check
from .propagator import (
    action_phase_integral,
    analytic_short_time,
    band_limited_packets,
    compose_kernels,
    free_kernel,
    kernel_relative_l2_error,
    normalization_recursion_check,
)

FREE = free_particle()


@dataclass(frozen=True)
class CheckResult:
    name: str
    description: str
    residual: float
    tolerance: float
    passed: bool
    runtime_seconds: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "runtime_seconds": round(self.runtime_seconds, 3),
            "details": self.details,
        }


@dataclass(frozen=True)
class CheckDef:
    name: str
    description: str
    tolerance: float
    runner: Callable[[float], tuple[float, dict]]

    def run(self, tolerance: float | None = None) -> CheckResult:
        tol = self.tolerance if tolerance is None else tolerance
        start = time.perf_counter()
        residual, details = self.runner(tol)
        elapsed = time.perf_counter() - start
        return CheckResult(self.name, self.description, residual, tol,
                           residual <= tol, elapsed, details)


def _normalized(parts: dict[str, tuple[float, float]]) -> tuple[float, dict]:
    """Bind compound subresiduals at their own tolerances, normalized to 1."""
    details = {}
    worst = 0.0
    for key, (residual, tol) in parts.items():
        details[key] = {"residual": residual, "tolerance": tol}
        worst = max(worst, residual / tol)
    return worst, details


# -- individual checks ---------------------------------------------------------


def _check_semigroup(tol):
    grid = build_spatial_grid(-20, 20, 512)
    half = free_kernel(1.0, 0.5, 1.0, grid)
    whole = free_kernel(1.0, 1.0, 1.0, grid)
    composed = compose_kernels(half, half)
    packets = band_limited_packets(grid, count=8, sigma=1.0, max_momentum=8.0)
    residual = kernel_relative_l2_error(composed, whole, packets)
    return residual, {"grid_count": 512, "extent": 40.0, "dt_each": 0.5,
                      "probe_packets": len(packets)}


def _check_gaussian_kernel(tol):
    dt, rate, eta = 0.5, 1.0, 1.0
    worst = 0.0
    for a, b in ((0.0, 1.0), (-0.7, 0.4), (0.3, 0.3)):
        g = gaussian_short_time(a, b, dt, FREE, sigma2_rate=rate)
        s_cl = (b - a) ** 2 / (2 * dt)
        expect = g.total_mass() * np.exp(1j * eta * s_cl - rate * dt * eta**2 / 2)
        got = action_phase_integral(g, eta)
        worst = max(worst, abs(got - expect) / abs(expect))
    return worst, {"dt": dt, "sigma2_rate": rate, "eta": eta}


def _gaussian_pair():
    grid1 = action_grid_from_extent(-8.0, 8.0, 513)
    s1 = np.exp(-grid1.values**2 / 2) / math.sqrt(2 * math.pi)
    g1 = ActionDensity(grid1, s1, 0.0, 1.0, 1.0, mean_hint=0.0)
    spacing = grid1.spacing
    n_half = int(math.ceil(8 * math.sqrt(2) / spacing))
    grid2 = action_grid_from_extent(-n_half * spacing, n_half * spacing,
                                    2 * n_half + 1)
    s2 = np.exp(-grid2.values**2 / 4) / math.sqrt(4 * math.pi)
    g2 = ActionDensity(grid2, s2, 0.0, 1.0, 1.0, mean_hint=0.0)
    return g1, g2


def _exponential_pair():
    grid = action_grid_from_extent(0.0, 6.0, 601)
    x = (grid.values - grid.values[0]) / 6.0
    window = np.sin(math.pi * x) ** 2
    g1 = ActionDensity(grid, np.exp(-grid.values) * window, 0, 0, 1.0)
    g2 = ActionDensity(grid, np.exp(-1.7 * grid.values) * window, 0, 0, 1.0)
    return g1, g2


def _check_variance_additivity(tol):
    worst = 0.0
    details = {}
    for label, (g1, g2) in (("gaussian", _gaussian_pair()),
                            ("exponential_window", _exponential_pair())):
        composed = composition.convolve_densities(g1, g2)
        report = composition.check_variance_additivity(g1, g2, composed)
        details[label] = report.additivity_residual
        worst = max(worst, report.additivity_residual)
    return worst, details


def _check_levy_linearity(tol):
    spatial = build_spatial_grid(-8, 8, 257)
    one = gaussian_field(0.0, spatial, 0.5, FREE, sigma2_rate=1.0,
                         locality_sigma=0.25)
    marg_t = marginal_over_endpoints(one)
    marg_2t = composition.convolve_densities(marg_t, marg_t)
    from .density import variance_action

    # the window is set by the wider (2T) marginal: at 5/sigma its
    # characteristic function is ~4e-6, comfortably above the round-off
    # floor that a tighter window would amplify through the logarithm
    sigma = math.sqrt(variance_action(marg_2t))
    ks = np.linspace(-5.0 / sigma, 5.0 / sigma, 81)
    psi_t = composition.levy_exponent(marg_t, 0.5, ks)
    psi_2t = composition.levy_exponent(marg_2t, 1.0, ks)
    residual = float(np.max(np.abs(psi_t - psi_2t)))
    return residual, {"k_max": 5.0 / sigma, "sigma": sigma}


def _check_unitarity(tol):
    grid = build_spatial_grid(-25, 25, 4096)
    psi = gaussian_packet(grid, 0.0, 4.0, 0.0)
    kernel = free_kernel(1.0, 0.25, 1.0, grid)
    trace = evolve(kernel, psi, 100)
    residual = float(np.max(np.abs(trace.norms / trace.norms[0] - 1.0)))
    return residual, {"steps": 100, "dt": 0.25, "grid_count": 4096}


def _schrodinger_ratio(potential, grid, sigma0, dts, steps=6):
    res = []
    for dt in dts:
        psi = gaussian_packet(grid, 0.0, sigma0, 0.0)
        kernel = analytic_short_time(1.0, potential, dt, 1.0, grid)
        trace = evolve(kernel, psi, steps)
        res.append(float(np.median(schrodinger_residual(trace, potential, 1.0))))
    return res[0] / res[1]


def _check_schrodinger(tol):
    omega = 0.5
    harm_v = lambda x: 0.5 * omega**2 * x**2  # noqa: E731
    harm_grid = build_spatial_grid(-8, 8, 2048)
    ratio_harm = _schrodinger_ratio(harm_v, harm_grid, 1.0 / math.sqrt(2 * omega),
                                    (0.1, 0.05))
    free_grid = build_spatial_grid(-10, 10, 4096)
    ratio_free = _schrodinger_ratio(None, free_grid, 1.0, (0.1, 0.05))
    worst, details = _normalized({
        "harmonic_ratio_minus_2": (abs(ratio_harm - 2.0), 0.2),
        "free_ratio_minus_2": (abs(ratio_free - 2.0), 0.2),
    })
    details["harmonic_ratio"] = ratio_harm
    details["free_ratio"] = ratio_free
    return worst, details


def _check_commutator(tol):
    grid = build_spatial_grid(-12, 12, 512)
    worst = 0.0
    for x0, sigma0, p0 in ((0.0, 1.0, 0.0), (0.3, 1.0, 1.0), (-0.5, 1.1, 2.0)):
        worst = max(worst, commutator_check(gaussian_packet(grid, x0, sigma0, p0)))
    return worst, {"grid_count": 512}


def _check_euler_lagrange(tol):
    from .density import harmonic

    harm = harmonic()
    total = math.pi / 3
    residuals = [euler_lagrange_residual(
        discrete_stationary_path(0.0, 1.0, n, total / n, harm))
        for n in (32, 64, 128)]
    orders = [math.log2(residuals[i] / residuals[i + 1]) for i in range(2)]
    order = sum(orders) / len(orders)
    free_path = discrete_stationary_path(0.0, 1.0, 64, 1.0 / 64, FREE)
    straight = np.linspace(0.0, 1.0, 65)
    straightness = float(np.max(np.abs(free_path.positions - straight)))
    worst, details = _normalized({
        "harmonic_order_minus_2": (abs(order - 2.0), 0.3),
        "free_straightness": (straightness, 1e-12),
    })
    details["measured_order"] = order
    return worst, details


def _check_classical_action(tol):
    path = discrete_stationary_path(0.0, 1.0, 64, 1.0 / 64, FREE)
    residual = abs(classical_action_along(path) - 0.5)
    return residual, {"segments": 64}


def _check_path_oracle(tol):
    positions = np.linspace(-1.0, 1.0, 5)
    ensemble = LatticePathEnsemble(3, positions, -0.5, 0.5, 0.25, FREE)
    residual = equivalence_check(ensemble)
    return residual, {"paths": ensemble.path_count}


def _check_double_slit(tol):
    geometries = [(1.0, 1.0, 200.0), (2.0, 0.5, 150.0), (0.7, 2.0, 400.0),
                  (3.0, 0.2, 120.0), (1.5, 1.5, 999.0)]
    rows = [(p, d, big_d, fringe_spacing(SlitGeometry(p, d, big_d), 1.0))
            for p, d, big_d in geometries]
    eta, spread = infer_eta(rows)
    reference = fringe_spacing(SlitGeometry(1.0, 1.0, 10.0, far_field_min_ratio=10.0), 1.0)
    worst, details = _normalized({
        "eta_spread": (spread, 1e-12),
        "eta_bias": (abs(eta - 1.0), 1e-12),
        "reference_spacing": (abs(reference - 20 * math.pi), 1e-9),
    })
    details["eta"] = eta
    details["spacing_p1_d1_D10"] = reference
    return worst, details


def _check_action_number(tol):
    hbar_si = 1.054571817e-34
    action = 1e-3 * 1.0**2 * 1.0  # 1 g at 1 m/s over 1 s, in J s
    n = action_number(action, hbar_si)
    residual = abs(math.log10(n) - 31.0)
    return residual, {"action_number": n}


def _check_indistinguishability(tol):
    dts = np.logspace(-4, 0, 17)
    fixed = [inference.indistinguishability_ratio_fixed(1.0, 0.0, dt, 1.0)
             for dt in dts]
    diffusive = [inference.indistinguishability_ratio_diffusive(1.0, 0.0, dt, 1.0)
                 for dt in dts]
    slope_fixed = float(np.polyfit(np.log(dts), np.log(fixed), 1)[0])
    slope_diff = float(np.polyfit(np.log(dts), np.log(diffusive), 1)[0])
    worst, details = _normalized({
        "fixed_slope_minus_1": (abs(slope_fixed - 1.0), 0.01),
        "diffusive_slope_minus_half": (abs(slope_diff - 0.5), 0.01),
    })
    details["slope_fixed"] = slope_fixed
    details["slope_diffusive"] = slope_diff
    return worst, details


def _check_cramer_rao(tol):
    from .density import field_from_rows
    from .grids import build_action_grid

    sp = build_spatial_grid(0, 1, 9)
    grid = build_action_grid(0.0, 1.0, 1025, half_width_sigmas=12.0)
    row = np.exp(-grid.values**2 / 2) / math.sqrt(2 * math.pi)
    fld = field_from_rows(sp, grid, np.tile(row, (9, 1)), a=0.0, duration=1.0)
    information = inference.fisher_information(fld, 0.8)
    delta_eta = 1.0 / math.sqrt(information)  # saturating estimator spread
    product, ok = inference.cramer_rao_check(information, delta_eta)
    residual = max(0.0, 1.0 - product)
    return residual, {"information": information, "product": product,
                      "saturating": ok}


def _check_normalization_recursion(tol):
    residual = max(normalization_recursion_check(1.0, 1.0, float(dt))
                   for dt in np.logspace(-4, 0, 33))
    return residual, {"dt_range": [1e-4, 1.0]}


CHECKS: dict[str, CheckDef] = {}


def _register(name, description, tolerance, runner):
    CHECKS[name] = CheckDef(name, description, tolerance, runner)


_register(
    "semigroup",
    "free kernel over T1+T2 decomposed through any intermediate configuration "
    "matches the direct kernel on band-limited states (relative L2 < 1e-3)",
    1e-3, _check_semigroup)
_register(
    "gaussian-kernel",
    "phase integral of a Gaussian action density reproduces the closed form "
    "mass * exp(i S_cl/hbar - sigma^2 dt/(2 hbar^2)) to 1e-8 relative",
    1e-8, _check_gaussian_kernel)
_register(
    "variance-additivity",
    "variance additivity for convolution semigroups: Var(g1 * g2) = Var(g1) + "
    "Var(g2) for Gaussian and asymmetric test densities",
    1e-6, _check_variance_additivity)
_register(
    "levy-linearity",
    "Levy exponent psi(k) = log ghat_T(k)/T from T and 2T marginals agrees "
    "pointwise over |k| <= 5/sigma",
    1e-6, _check_levy_linearity)
_register(
    "unitarity",
    "100-step free evolution of a band-limited packet keeps |norm - 1| < 1e-6",
    1e-6, _check_unitarity)
_register(
    "schrodinger",
    "centered-time residual against H psi halves with dt (ratio 2 +- 0.2) for "
    "free and harmonic scenarios; normalized compound residual",
    1.0, _check_schrodinger)
_register(
    "commutator",
    "grid commutator [x, p] psi = i hbar psi on band-limited packets",
    1e-6, _check_commutator)
_register(
    "euler-lagrange",
    "stationary discrete paths satisfy the Euler-Lagrange equation at measured "
    "order 2.0 +- 0.3 in dt; free path exactly straight to 1e-12 (normalized)",
    1.0, _check_euler_lagrange)
_register(
    "classical-action",
    "mean action along the stationary trajectory equals the classical action: "
    "0.5 for unit free displacement over unit time, to 1e-12",
    1e-12, _check_classical_action)
_register(
    "path-oracle",
    "exact-binning coherent path sum equals the phase integral of the "
    "empirical action density on a 25-path lattice",
    1e-12, _check_path_oracle)
_register(
    "double-slit",
    "the fringe spacing is therefore 2 pi D/(eta p d): calibration closure "
    "across 5 geometries recovers eta to 1e-12 spread; reference 20 pi "
    "(normalized compound residual)",
    1.0, _check_double_slit)
_register(
    "action-number",
    "dimensionless action number for 1 g at 1 m/s over 1 s lands within one "
    "decade of 1e31",
    1.0, _check_action_number)
_register(
    "indistinguishability",
    "log-log slopes of the fixed-resolution and diffusive ratios measure "
    "1.00 +- 0.01 and 0.50 +- 0.01 over 4 decades (normalized)",
    1.0, _check_indistinguishability)
_register(
    "cramer-rao",
    "resolution product dA * d_eta >= 1 - 1e-9 at the saturating "
    "configuration of a Gaussian tilted family",
    1e-9, _check_cramer_rao)
_register(
    "normalization-recursion",
    "prefactor recursion N(2 dt) = N(dt)^2 sqrt(pi i hbar dt/m) uniquely "
    "fixed by the semigroup property, residual < 1e-12 across dt in [1e-4, 1]",
    1e-12, _check_normalization_recursion)


def run_checks(names: list[str] | None = None,
               tolerances: dict[str, float] | None = None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else names
    tolerances = tolerances or {}
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; valid names: {sorted(CHECKS)}")
    return [CHECKS[n].run(tolerances.get(n)) for n in names]


def environment_fingerprint() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
        "system": platform.system(),
    }
