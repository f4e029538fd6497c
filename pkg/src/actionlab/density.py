"""Densities of action states g(A; b, dt | a) and the emergent Lagrangian.

A density of action states records, for fixed endpoints and duration, how
much dynamical weight sits at each total action value A. It is not a
probability density: it is the reference measure that inference (see
`inference`) and propagator synthesis (see `propagator`) act on. The
short-time form is a Gaussian centered on the classical action of the
segment, with variance growing linearly in the duration.

Units are natural (hbar = 1) unless a caller supplies otherwise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .grids import ActionGrid, SpatialGrid, build_action_grid

DEFAULT_HBAR = 1.0
POINTS_PER_SIGMA = 8.0  # finest feature a grid must resolve


@dataclass(frozen=True)
class LagrangianSpec:
    """System specification: mass plus potential; kinetic term is universal.

    Only the potential distinguishes systems; the quadratic velocity
    dependence is fixed by Galilean invariance, so L(x, v) = m v^2 / 2 - V(x).
    """

    mass: float
    potential: Callable[[np.ndarray], np.ndarray] | None = None
    tag: str = "custom"

    def V(self, x):
        if self.potential is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.potential(np.asarray(x, dtype=float))

    def lagrangian(self, x, v):
        return 0.5 * self.mass * np.asarray(v, dtype=float) ** 2 - self.V(x)


def free_particle(mass: float = 1.0) -> LagrangianSpec:
    return LagrangianSpec(mass=mass, potential=None, tag="free")


def harmonic(mass: float = 1.0, omega: float = 1.0) -> LagrangianSpec:
    k = mass * omega * omega

    def V(x):
        return 0.5 * k * np.asarray(x, dtype=float) ** 2

    return LagrangianSpec(mass=mass, potential=V, tag="harmonic")


def custom(mass: float, potential: Callable) -> LagrangianSpec:
    return LagrangianSpec(mass=mass, potential=potential, tag="custom")


def classical_action(a: float, b: float, dt: float, lag: LagrangianSpec) -> float:
    """Midpoint-rule classical action of one segment: m(b-a)^2/(2 dt) - V((a+b)/2) dt."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v_mid = float(lag.V(0.5 * (a + b)))
    return lag.mass * (b - a) ** 2 / (2.0 * dt) - v_mid * dt


@dataclass(frozen=True)
class ActionDensity:
    """Sampled nonnegative density over an ActionGrid for fixed endpoints.

    `mean_hint` optionally carries an analytically tracked mean (first
    cumulants add under composition), avoiding cancellation in the
    additivity diagnostics.
    """

    grid: ActionGrid
    samples: np.ndarray
    a: float
    b: float | None
    duration: float
    mass: float = 1.0
    hbar: float = DEFAULT_HBAR
    sigma2_rate: float = DEFAULT_HBAR**2
    mean_hint: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.count,):
            raise ValueError("samples must match the action grid")
        if np.min(s) < 0:
            raise ValueError(f"negative density sample: min = {np.min(s)}")
        if not np.all(np.isfinite(s)):
            raise ValueError("density samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def total_mass(self) -> float:
        return float(self.grid.integrate(self.samples))


def total_mass(g: ActionDensity) -> float:
    return g.total_mass()


def mean_action(g: ActionDensity) -> float:
    """First moment of A under g, by trapezoid."""
    mass = g.total_mass()
    if mass <= 0:
        raise ValueError("zero total mass")
    return float(g.grid.integrate(g.grid.values * g.samples)) / mass


def variance_action(g: ActionDensity) -> float:
    """Second central moment of A under g, by trapezoid."""
    mass = g.total_mass()
    if mass <= 0:
        raise ValueError("zero total mass")
    mu = float(g.grid.integrate(g.grid.values * g.samples)) / mass
    return float(g.grid.integrate((g.grid.values - mu) ** 2 * g.samples)) / mass


def _gaussian_samples(grid: ActionGrid, mean: float, var: float) -> np.ndarray:
    return np.exp(-((grid.values - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def gaussian_short_time(a: float, b: float, dt: float, lag: LagrangianSpec,
                        sigma2_rate: float = DEFAULT_HBAR**2,
                        grid: ActionGrid | None = None,
                        hbar: float = DEFAULT_HBAR) -> ActionDensity:
    """Short-time density: unit-mass Gaussian at the segment's classical action.

    Mean = L(xbar, v) * dt with xbar = (a+b)/2, v = (b-a)/dt; variance =
    sigma2_rate * dt. The auto-built grid spans 8 sigma at 8 points per
    sigma; a supplied grid must resolve the Gaussian at least that well.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sigma2_rate <= 0:
        raise ValueError(f"sigma2_rate must be positive, got {sigma2_rate}")
    var = sigma2_rate * dt
    sigma = math.sqrt(var)
    mean = classical_action(a, b, dt, lag)
    if grid is None:
        count = int(2 * 8 * POINTS_PER_SIGMA) + 1
        grid = build_action_grid(mean, sigma, count)
    elif grid.spacing > sigma / POINTS_PER_SIGMA:
        raise ValueError(
            f"variance underflow: grid spacing {grid.spacing:.3g} cannot resolve "
            f"sigma {sigma:.3g} at >= {POINTS_PER_SIGMA:g} points per stddev")
    return ActionDensity(grid, _gaussian_samples(grid, mean, var), a, b, dt,
                         mass=lag.mass, hbar=hbar, sigma2_rate=sigma2_rate,
                         mean_hint=mean)


def delta_density(grid: ActionGrid, a0: float, a: float = 0.0, b: float | None = None,
                  duration: float = 0.0, **kw) -> ActionDensity:
    """Narrowest resolvable spike at A = a0: a Gaussian of width 2 grid spacings."""
    sigma = 2.0 * grid.spacing
    return ActionDensity(grid, _gaussian_samples(grid, a0, sigma * sigma), a, b,
                         duration, mean_hint=a0, **kw)


def grid_spike(grid: ActionGrid, a0: float, a: float = 0.0, b: float | None = None,
               duration: float = 0.0, **kw) -> ActionDensity:
    """Unit-mass Kronecker spike at the node nearest a0.

    This is the exact identity element of the discrete convolution; use
    `delta_density` when a resolvable (smooth) spike is wanted instead.
    """
    idx = int(np.argmin(np.abs(grid.values - a0)))
    if idx in (0, grid.count - 1):
        raise ValueError("spike must sit at an interior node")
    samples = np.zeros(grid.count)
    samples[idx] = 1.0 / grid.spacing
    return ActionDensity(grid, samples, a, b, duration,
                         mean_hint=float(grid.values[idx]), **kw)


@dataclass(frozen=True)
class EndpointDensityField:
    """One action density per final endpoint b, shared origin and duration.

    Stored as a (n_b, n_A) array; rows may be identically zero where
    locality makes the transition weight negligible.
    """

    spatial: SpatialGrid
    action: ActionGrid
    samples: np.ndarray  # (spatial.count, action.count)
    a: float
    duration: float
    mass: float = 1.0
    hbar: float = DEFAULT_HBAR
    sigma2_rate: float = DEFAULT_HBAR**2

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.spatial.count, self.action.count):
            raise ValueError("field samples must be (spatial.count, action.count)")
        if np.min(s) < 0:
            raise ValueError(f"negative field sample: min = {np.min(s)}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def density_at(self, i: int) -> ActionDensity:
        return ActionDensity(self.action, self.samples[i], self.a,
                             float(self.spatial.points[i]), self.duration,
                             mass=self.mass, hbar=self.hbar,
                             sigma2_rate=self.sigma2_rate)

    def row_masses(self) -> np.ndarray:
        return self.action.integrate(self.samples, axis=1)

    def total_mass(self) -> float:
        return float(self.spatial.integrate(self.row_masses()))


def gaussian_field(a: float, spatial: SpatialGrid, dt: float, lag: LagrangianSpec,
                   sigma2_rate: float = DEFAULT_HBAR**2,
                   hbar: float = DEFAULT_HBAR,
                   locality_sigma: float | None = None,
                   action_grid: ActionGrid | None = None) -> EndpointDensityField:
    """Short-time field over every final endpoint on the spatial grid.

    `locality_sigma` applies a Gaussian endpoint envelope exp(-(b-a)^2 /
    (2 locality_sigma^2)) so distant transitions carry negligible weight;
    the envelope is smooth, keeping every later quadrature spectrally
    accurate.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    var = sigma2_rate * dt
    sigma = math.sqrt(var)
    b = spatial.points
    means = np.array([classical_action(a, bb, dt, lag) for bb in b])
    live = np.ones(spatial.count, dtype=bool)
    if locality_sigma is not None:
        # rows beyond 8 envelope widths carry mass < 1.3e-14 and are zeroed;
        # the auto grid then only needs to cover the surviving means
        live = np.abs(b - a) <= 8.0 * locality_sigma
        if not np.any(live):
            raise ValueError("locality envelope excludes every endpoint")
    if action_grid is None:
        lo = means[live].min() - 8.0 * sigma
        hi = means[live].max() + 8.0 * sigma
        count = max(int(math.ceil((hi - lo) / (sigma / POINTS_PER_SIGMA))) + 1, 16)
        spacing = (hi - lo) / (count - 1)
        action_grid = ActionGrid(np.linspace(lo, hi, count), spacing, count)
    elif action_grid.spacing > sigma / POINTS_PER_SIGMA:
        raise ValueError("action grid cannot resolve the short-time Gaussian")
    rows = np.zeros((spatial.count, action_grid.count))
    rows[live] = np.exp(
        -((action_grid.values[None, :] - means[live][:, None]) ** 2) / (2 * var))
    rows[live] /= math.sqrt(2 * math.pi * var)
    if locality_sigma is not None:
        envelope = np.exp(-((b[live] - a) ** 2) / (2 * locality_sigma**2))
        rows[live] *= envelope[:, None]
    return EndpointDensityField(spatial, action_grid, rows, a, dt,
                                mass=lag.mass, hbar=hbar, sigma2_rate=sigma2_rate)


def field_from_rows(spatial: SpatialGrid, action: ActionGrid, rows: np.ndarray,
                    a: float, duration: float, **kw) -> EndpointDensityField:
    """Assemble a field from raw per-endpoint rows (testing and composition)."""
    return EndpointDensityField(spatial, action, rows, a, duration, **kw)


def marginal_over_endpoints(f: EndpointDensityField) -> ActionDensity:
    """Integrate the field over its final endpoints: gtilde(A) = int db g(A; b | a)."""
    marg = f.spatial.integrate(f.samples, axis=0)
    g = ActionDensity(f.action, marg, f.a, None, f.duration,
                      mass=f.mass, hbar=f.hbar, sigma2_rate=f.sigma2_rate)
    if g.total_mass() <= 0:
        raise ValueError("zero total mass")
    return g


def emergent_lagrangian(builder: Callable[[float, float, float], ActionDensity],
                        x: float, v: float, dt0: float = 0.1,
                        tol: float = 1e-10, max_refine: int = 24) -> float:
    """Rate of mean-action accumulation, Richardson-extrapolated over dt -> 0.

    `builder(a, b, dt)` must return the short-time density for the segment.
    The first-order term in dt is eliminated by pairing successive halvings;
    iteration stops when consecutive extrapolants agree to `tol`.
    """
    est_prev = mean_action(builder(x, x + v * dt0, dt0)) / dt0
    rich_prev = None
    dt = dt0
    for _ in range(max_refine):
        dt *= 0.5
        est = mean_action(builder(x, x + v * dt, dt)) / dt
        rich = 2.0 * est - est_prev
        if rich_prev is not None and abs(rich - rich_prev) < tol * (1.0 + abs(rich)):
            return rich
        est_prev, rich_prev = est, rich
    raise RuntimeError(f"emergent Lagrangian did not converge after {max_refine} refinements")


# -- export -------------------------------------------------------------------


def density_to_csv(g: ActionDensity, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["A", "g"])
        for A, s in zip(g.grid.values, g.samples):
            writer.writerow([repr(float(A)), repr(float(s))])


def density_metadata(g: ActionDensity) -> str:
    return json.dumps({
        "a": g.a, "b": g.b, "dt": g.duration,
        "m": g.mass, "hbar": g.hbar, "sigma2_rate": g.sigma2_rate,
    }, sort_keys=True)
