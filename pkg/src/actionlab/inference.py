"""Maximum-entropy tilting of action densities and its information geometry.

Given a field g(A; b | a) and a multiplier eta conjugate to the mean
action, the tilted joint probability is

    P(A, b | a) = g(A; b | a) exp(-eta A) / Z(eta; a),

an exponential family in eta. Its Fisher information equals the variance
of A under the tilted marginal, which feeds the resolution bound
dA * d_eta >= 1 and the indistinguishability diagnostics. All tilting is
done in the log domain so large eta*A spans survive.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .density import EndpointDensityField

OVERFLOW_GUARD = 700.0  # exp argument ceiling even before log-domain rescue


@dataclass(frozen=True)
class MaxEntModel:
    """Tilt parameter with its partition value, tilted moments, and resolution."""

    eta: float
    log_z: float
    mean_action: float
    var_action: float

    @property
    def z(self) -> float:
        return math.exp(self.log_z) if self.log_z < OVERFLOW_GUARD else math.inf

    @property
    def resolution(self) -> float:
        """Minimal operationally distinguishable action difference, 1/eta."""
        if self.eta == 0:
            return math.inf
        return 1.0 / self.eta

    @property
    def naturalness(self) -> float:
        """Dimensionless eta * sigma_A; order unity in the physically relevant regime."""
        return self.eta * math.sqrt(max(self.var_action, 0.0))

    def to_json(self) -> str:
        return json.dumps({
            "eta": self.eta, "log_z": self.log_z, "z": self.z,
            "mean_action": self.mean_action, "var_action": self.var_action,
            "resolution": self.resolution, "naturalness": self.naturalness,
        }, sort_keys=True)


def _log_weights(field: EndpointDensityField) -> tuple[np.ndarray, np.ndarray]:
    w_b = field.spatial.trapezoid_weights()
    w_a = field.action.trapezoid_weights()
    return np.log(w_b), np.log(w_a)


def _check_guard(field: EndpointDensityField, eta: float) -> None:
    lo, hi = field.action.extent
    if abs(eta) * max(abs(lo), abs(hi)) >= OVERFLOW_GUARD:
        raise ValueError(
            f"|eta| * action extent = {abs(eta) * max(abs(lo), abs(hi)):.3g} "
            f"exceeds the overflow guard {OVERFLOW_GUARD:g}")


def log_partition(field: EndpointDensityField, eta: float) -> float:
    """log Z(eta; a) = log int db int dA g(A; b | a) exp(-eta A)."""
    _check_guard(field, eta)
    with np.errstate(divide="ignore"):
        log_g = np.log(field.samples)
    log_wb, log_wa = _log_weights(field)
    arg = log_g - eta * field.action.values[None, :] + log_wb[:, None] + log_wa[None, :]
    log_z = float(logsumexp(arg))
    if not np.isfinite(log_z):
        raise ValueError("partition value underflowed even in log domain")
    return log_z


def maxent_tilt(field: EndpointDensityField, eta: float) -> tuple[EndpointDensityField, MaxEntModel]:
    """Tilted probability field P = g exp(-eta A)/Z and its summary model.

    Negative and zero eta are admitted with a warning: the exponential
    family is defined for all real eta, the positive default merely matches
    the physically calibrated branch.
    """
    if eta <= 0:
        warnings.warn(f"nonpositive eta = {eta}; tilt is formal", stacklevel=2)
    log_z = log_partition(field, eta)
    with np.errstate(divide="ignore"):
        log_g = np.log(field.samples)
    log_p = log_g - eta * field.action.values[None, :] - log_z
    p = np.exp(log_p)
    tilted = EndpointDensityField(field.spatial, field.action, p, field.a,
                                  field.duration, mass=field.mass,
                                  hbar=field.hbar, sigma2_rate=field.sigma2_rate)
    total = tilted.total_mass()
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"tilted field mass {total} deviates from 1 beyond 1e-10")
    a_vals = field.action.values
    marginal = field.spatial.integrate(p, axis=0)
    mean = float(field.action.integrate(a_vals * marginal))
    var = float(field.action.integrate((a_vals - mean) ** 2 * marginal))
    return tilted, MaxEntModel(eta, log_z, mean, var)


def fisher_information(field: EndpointDensityField, eta: float) -> float:
    """I(eta) for the tilted exponential family: the variance of A."""
    _, model = maxent_tilt(field, eta)
    return model.var_action


def fisher_information_fd(field: EndpointDensityField, eta: float,
                          step: float | None = None) -> float:
    """Finite-difference oracle: I(eta) = int P (d_eta log P)^2 dA.

    Independent route through central differences of the tilted marginal's
    log, for cross-checking `fisher_information`.
    """
    if step is None:
        _, model = maxent_tilt(field, eta)
        step = 1e-4 / max(math.sqrt(model.var_action), 1e-6)
    tilt0, _ = maxent_tilt(field, eta)
    tilt_p, _ = maxent_tilt(field, eta + step)
    tilt_m, _ = maxent_tilt(field, eta - step)
    marg0 = field.spatial.integrate(tilt0.samples, axis=0)
    marg_p = field.spatial.integrate(tilt_p.samples, axis=0)
    marg_m = field.spatial.integrate(tilt_m.samples, axis=0)
    live = marg0 > marg0.max() * 1e-280
    score = np.zeros_like(marg0)
    score[live] = (np.log(marg_p[live]) - np.log(marg_m[live])) / (2 * step)
    return float(field.action.integrate(marg0 * score**2))


def solve_eta(field: EndpointDensityField, target_mean: float,
              bracket: tuple[float, float] = (1e-6, 1e6),
              tol: float = 1e-12, max_iter: int = 200) -> float:
    """Invert the mean-action constraint: find eta with mean_A(eta) = target.

    The map eta -> mean_A is strictly decreasing (its derivative is -Var(A)),
    so bisection with doubling bracket expansion is exact-safe. The bracket
    is clamped to the overflow guard for the field's action extent.
    """
    lo, hi = bracket
    a_lo, a_hi = field.action.extent
    eta_cap = 0.99 * OVERFLOW_GUARD / max(abs(a_lo), abs(a_hi), 1e-300)
    lo, hi = min(lo, eta_cap), min(hi, eta_cap)

    def mean_at(eta):
        return maxent_tilt(field, eta)[1].mean_action

    f_lo, f_hi = mean_at(lo) - target_mean, mean_at(hi) - target_mean
    tries = 0
    while f_lo * f_hi > 0 and tries < 60:
        if f_lo < 0:  # need smaller eta to raise the mean
            lo *= 0.5
            f_lo = mean_at(lo) - target_mean
        else:
            hi *= 2.0
            f_hi = mean_at(hi) - target_mean
        tries += 1
    if f_lo * f_hi > 0:
        raise ValueError("could not bracket the target mean action")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = mean_at(mid) - target_mean
        if f_mid == 0 or (hi - lo) < tol * (1 + abs(mid)):
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def cramer_rao_check(information: float, delta_eta: float) -> tuple[float, bool]:
    """Product dA * d_eta with dA = sqrt(I); passes when >= 1 - 1e-9."""
    if information <= 0:
        raise ValueError(f"information must be positive, got {information}")
    if delta_eta <= 0:
        raise ValueError(f"delta_eta must be positive, got {delta_eta}")
    product = math.sqrt(information) * delta_eta
    return product, product >= 1.0 - 1e-9


def indistinguishability_ratio_fixed(l1: float, l2: float, dt: float, eta: float) -> float:
    """|L1 - L2| dt * eta: action separation against the fixed resolution 1/eta."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return abs(l1 - l2) * dt * eta


def indistinguishability_ratio_diffusive(l1: float, l2: float, dt: float, beta: float) -> float:
    """|L1 - L2| sqrt(dt / beta): separation against the diffusive width sqrt(beta dt)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return abs(l1 - l2) * math.sqrt(dt / beta)
