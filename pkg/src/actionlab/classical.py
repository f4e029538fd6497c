"""Stationary-phase machinery: discrete stationary paths, Euler-Lagrange
residuals, the classical-action identity, and concentration diagnostics.

In the regime where many resolution quanta of action separate alternatives,
propagator composition is dominated by intermediate points where the
summed mean-action derivative vanishes. Iterating that condition over a
time lattice gives a discrete trajectory whose continuum limit satisfies
d/dt (dL/dv) = dL/dx; the mean action accumulated along it is the
classical action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .density import LagrangianSpec

NEWTON_MAX_ITER = 200
STATIONARITY_TOL = 1e-10
# regular paths at desk-scale segment counts condition like O(N^2) <~ 1e4;
# at a focal time the smallest eigenvalue collapses and the condition
# number jumps past 1e5 already for 32 segments
CAUSTIC_CONDITION_LIMIT = 1e5


@dataclass(frozen=True)
class DiscretePath:
    """Positions x_0..x_N on a uniform time lattice with fixed endpoints."""

    times: np.ndarray
    positions: np.ndarray
    dt: float
    lagrangian: LagrangianSpec

    @property
    def segments(self) -> int:
        return self.positions.size - 1


def _potential_derivative(lag: LagrangianSpec, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    step = h * (1.0 + np.abs(x))
    return (lag.V(x + step) - lag.V(x - step)) / (2 * step)


def _potential_second(lag: LagrangianSpec, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    step = h * (1.0 + np.abs(x))
    return (lag.V(x + step) - 2 * lag.V(x) + lag.V(x - step)) / step**2


def stationary_midpoint(a: float, c: float, t1: float, t2: float,
                        mean_action: Callable[[float, float, float], float],
                        fd_step: float | None = None) -> float:
    """Intermediate point b* where d/db [Abar(b,t1|a) + Abar(c,t2|b)] = 0.

    `mean_action(start, end, duration)` supplies the mean action of one
    leg. The derivative is taken by central differences; the root search
    scans the bracket [min(a,c)-|c-a|, max(a,c)+|c-a|] for sign changes
    and refines each with safeguarded Newton, keeping the root nearest the
    chord midpoint when several stationary points coexist.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("leg durations must be positive")
    span = abs(c - a)
    if span == 0:
        span = 1.0
    lo, hi = min(a, c) - span, max(a, c) + span
    h = fd_step if fd_step is not None else span / 100.0

    def grad(b):
        return (mean_action(a, b + h, t1) - mean_action(a, b - h, t1)
                + mean_action(b + h, c, t2) - mean_action(b - h, c, t2)) / (2 * h)

    mesh = np.linspace(lo, hi, 129)
    vals = np.array([grad(b) for b in mesh])
    roots = []
    for i in range(len(mesh) - 1):
        if vals[i] == 0.0:
            roots.append(float(mesh[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(_safeguarded_newton(grad, mesh[i], mesh[i + 1]))
    if vals[-1] == 0.0:
        roots.append(float(mesh[-1]))
    if not roots:
        raise ValueError(f"no stationary point in bracket [{lo}, {hi}]")
    center = 0.5 * (a + c)
    return min(roots, key=lambda r: abs(r - center))


def _safeguarded_newton(f: Callable[[float], float], lo: float, hi: float,
                        tol: float = 1e-13, max_iter: int = 100) -> float:
    """Newton iteration with a FD slope, falling back to bisection on escape."""
    f_lo, f_hi = f(lo), f(hi)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0.0 or (hi - lo) < tol * (1 + abs(x)):
            return x
        if f_lo * fx < 0:
            hi, f_hi = x, fx
        else:
            lo, f_lo = x, fx
        h = 1e-7 * (1 + abs(x))
        slope = (f(x + h) - f(x - h)) / (2 * h)
        if slope != 0:
            candidate = x - fx / slope
            if lo < candidate < hi:
                x = candidate
                continue
        x = 0.5 * (lo + hi)
    return x


def _discrete_gradient(x: np.ndarray, dt: float, lag: LagrangianSpec) -> np.ndarray:
    """d/dx_j of sum_k [m (x_{k+1}-x_k)^2 / (2 dt) - V(midpoint_k) dt], interior j."""
    m = lag.mass
    mid = 0.5 * (x[:-1] + x[1:])
    vprime = _potential_derivative(lag, mid)
    kinetic = m * (2 * x[1:-1] - x[:-2] - x[2:]) / dt
    potential = -0.5 * (vprime[:-1] + vprime[1:]) * dt
    return kinetic + potential


def discrete_stationary_path(a: float, b: float, n_segments: int, dt: float,
                             lag: LagrangianSpec,
                             tol: float = STATIONARITY_TOL) -> DiscretePath:
    """Damped Newton solve of the two-term stationarity conditions.

    Initialization is the straight chord; each interior node couples only
    to its neighbors, so the Jacobian is tridiagonal. A nearly singular
    Jacobian is reported as a caustic (focal time) rather than solved.
    """
    if n_segments < 2:
        raise ValueError("need at least 2 segments (one interior point)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_interior = n_segments - 1
    x = np.linspace(a, b, n_segments + 1)
    m = lag.mass
    for _ in range(NEWTON_MAX_ITER):
        mid = 0.5 * (x[:-1] + x[1:])
        vsecond = _potential_second(lag, mid)
        diag = 2 * m / dt - 0.25 * (vsecond[:-1] + vsecond[1:]) * dt
        off = -m / dt - 0.25 * vsecond[1:-1] * dt
        jac = np.diag(diag)
        if n_interior > 1:
            jac += np.diag(off, 1) + np.diag(off, -1)
        # near a focal time the stationarity operator loses rank: reject
        # before trusting any solution, including an already stationary one
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > CAUSTIC_CONDITION_LIMIT:
            raise RuntimeError(
                f"caustic: stationarity Jacobian condition {cond:.3e} signals "
                "a focal time; no unique stationary path")
        grad = _discrete_gradient(x, dt, lag)
        if np.max(np.abs(grad)) < tol:
            times = dt * np.arange(n_segments + 1)
            return DiscretePath(times, x, dt, lag)
        step = np.linalg.solve(jac, grad)
        base = np.max(np.abs(grad))
        lam = 1.0
        for _ in range(40):
            trial = x.copy()
            trial[1:-1] -= lam * step
            if np.max(np.abs(_discrete_gradient(trial, dt, lag))) < base:
                x = trial
                break
            lam *= 0.5
        else:
            raise RuntimeError("stationary path line search stalled")
    raise RuntimeError(f"no convergence in {NEWTON_MAX_ITER} Newton iterations")


def euler_lagrange_residual(path: DiscretePath) -> float:
    """max over interior nodes of |d/dt (dL/dv) - dL/dx| by central differences."""
    x = path.positions
    if x.size < 3:
        raise ValueError("path must have at least one interior node")
    m = path.lagrangian.mass
    accel = (x[2:] - 2 * x[1:-1] + x[:-2]) / path.dt**2
    force = -_potential_derivative(path.lagrangian, x[1:-1])
    return float(np.max(np.abs(m * accel - force)))


def classical_action_along(path: DiscretePath) -> float:
    """Midpoint-rule action sum over the path's segments."""
    x = path.positions
    v = np.diff(x) / path.dt
    mid = 0.5 * (x[:-1] + x[1:])
    return float(np.sum(path.lagrangian.lagrangian(mid, v)) * path.dt)


def concentration_check(builder: Callable[[float], object], scale: float) -> float:
    """Relative action width sqrt(Var A)/mean A of the system scaled by `scale`."""
    from .density import mean_action, variance_action

    if scale < 1:
        raise ValueError("scale must be >= 1")
    g = builder(scale)
    mean = mean_action(g)
    if mean == 0:
        raise ValueError("zero mean action; relative width undefined")
    return math.sqrt(max(variance_action(g), 0.0)) / abs(mean)


def action_number(action: float, hbar: float) -> float:
    """Dimensionless action in resolution quanta: A / hbar."""
    if hbar <= 0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    return action / hbar
