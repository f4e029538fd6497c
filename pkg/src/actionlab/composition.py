"""Composition of action densities: convolution in action, quadrature over
intermediate endpoints, and the semigroup diagnostics built on them.

Sequential processes add their actions, so composing two legs convolves
their action profiles and integrates out the shared intermediate point:

    g(A; c, T1+T2 | a) = int db int dA' g(A'; b, T1 | a) g(A-A'; c, T2 | b)

Convolutions run over the fast Fourier transform with full zero padding;
`direct=True` routes through the O(n^2) quadrature oracle instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .density import ActionDensity, EndpointDensityField
from .grids import ActionGrid

EDGE_MASS_TOLERANCE = 1e-10
EDGE_GUARD_NODES = 4
NEGATIVE_CLIP = 1e-12  # convolution ripple below this fraction of the peak is zeroed


@dataclass(frozen=True)
class CompositionReport:
    """Residuals of the additivity identities for one composition."""

    variance_in_parts: float
    variance_composed: float
    additivity_residual: float
    levy_linearity_residual: float | None = None

    def to_json(self) -> str:
        return json.dumps({
            "variance_in_parts": self.variance_in_parts,
            "variance_composed": self.variance_composed,
            "additivity_residual": self.additivity_residual,
            "levy_linearity_residual": self.levy_linearity_residual,
        }, sort_keys=True)


def _output_grid(g1: ActionGrid, g2: ActionGrid) -> ActionGrid:
    da = g1.spacing
    if abs(g2.spacing - da) > 1e-12 * da:
        raise ValueError("grid mismatch: action spacings differ")
    lo = g1.values[0] + g2.values[0]
    count = g1.count + g2.count - 1
    values = lo + da * np.arange(count)
    return ActionGrid(values, da, count)


def _clip_ripple(samples: np.ndarray) -> np.ndarray:
    peak = samples.max(initial=0.0)
    floor = -NEGATIVE_CLIP * peak
    if samples.min(initial=0.0) < floor:
        raise ValueError("convolution produced significantly negative values")
    return np.where(samples < 0, 0.0, samples)


def _check_edge_mass(grid: ActionGrid, samples: np.ndarray) -> None:
    total = float(grid.integrate(samples))
    if total <= 0:
        return
    k = EDGE_GUARD_NODES
    edge = (samples[:k].sum() + samples[-k:].sum()) * grid.spacing
    if edge > EDGE_MASS_TOLERANCE * total:
        raise ValueError(
            f"aliasing detected: edge mass fraction {edge / total:.3e} exceeds "
            f"{EDGE_MASS_TOLERANCE:g}; widen the action grids")


def convolve_densities(g1: ActionDensity, g2: ActionDensity,
                       direct: bool = False) -> ActionDensity:
    """Action convolution of two densities sharing one intermediate point.

    The output grid spans the sum of the input supports at the common
    spacing, which is exactly the support of the discrete convolution, so
    no wrap-around can occur; the edge-mass guard still verifies that.
    """
    out_grid = _output_grid(g1.grid, g2.grid)
    da = g1.grid.spacing
    if direct:
        conv = _accel.direct_convolve(g1.samples, g2.samples, da)
    else:
        n = out_grid.count
        conv = np.fft.irfft(np.fft.rfft(g1.samples, n) * np.fft.rfft(g2.samples, n), n) * da
    conv = _clip_ripple(conv)
    _check_edge_mass(out_grid, conv)
    hint = None
    if g1.mean_hint is not None and g2.mean_hint is not None:
        hint = g1.mean_hint + g2.mean_hint
    return ActionDensity(out_grid, conv, g1.a, g2.b, g1.duration + g2.duration,
                         mass=g1.mass, hbar=g1.hbar, sigma2_rate=g1.sigma2_rate,
                         mean_hint=hint)


def compose_fields(first: EndpointDensityField,
                   second: Sequence[EndpointDensityField] | Callable[[int], EndpointDensityField],
                   ) -> EndpointDensityField:
    """Compose a field over T1 with a family over T2 keyed by intermediate point.

    `second` maps each spatial index b (or is a sequence indexed by it) to
    the field launched from that point. Rows of `first` with negligible
    mass are skipped, which is where the locality envelope pays off.
    """
    sp = first.spatial
    getter = second.__getitem__ if hasattr(second, "__getitem__") else second
    ref = getter(0)
    if ref.spatial is not sp and not np.array_equal(ref.spatial.points, sp.points):
        raise ValueError("grid mismatch: fields must share the spatial grid")
    out_grid = _output_grid(first.action, ref.action)
    n = out_grid.count
    w_b = sp.trapezoid_weights()
    row_masses = first.row_masses()
    mass_floor = 1e-14 * max(row_masses.max(initial=0.0), 1e-300)
    first_ft = np.fft.rfft(first.samples, n, axis=1)
    acc = np.zeros((sp.count, n // 2 + 1), dtype=complex)
    for ib in range(sp.count):
        if row_masses[ib] <= mass_floor:
            continue
        leg = getter(ib)
        if abs(leg.a - sp.points[ib]) > 1e-9 * (1 + abs(leg.a)):
            raise ValueError("second family must be keyed by the intermediate point")
        if leg.action.count != ref.action.count or \
           abs(leg.action.spacing - ref.action.spacing) > 1e-12 * ref.action.spacing:
            raise ValueError("grid mismatch in second family")
        acc += (w_b[ib] * first_ft[ib])[None, :] * np.fft.rfft(leg.samples, n, axis=1)
    rows = np.fft.irfft(acc, n, axis=1) * first.action.spacing
    rows = _clip_ripple(rows)
    _check_edge_mass(out_grid, rows.sum(axis=0))
    return EndpointDensityField(sp, out_grid, rows, first.a,
                                first.duration + ref.duration,
                                mass=first.mass, hbar=first.hbar,
                                sigma2_rate=first.sigma2_rate)


def compose_fields_translation_invariant(first: EndpointDensityField,
                                         leg: EndpointDensityField) -> EndpointDensityField:
    """Fast composition when every leg is a spatially shifted copy of `leg`.

    For a translation-invariant second family the endpoint integral becomes a
    convolution over space as well, so the whole composition is one 2-D FFT.
    `leg` may be launched from any grid point; its rows are reindexed by the
    offset (final - initial). Spatial trapezoid end-weights are replaced by
    full weights, which is exact whenever the edge rows carry no mass (the
    locality envelope guarantees that, and the edge-mass guard verifies it).
    """
    sp = first.spatial
    out_grid = _output_grid(first.action, leg.action)
    n_b = sp.count
    i0 = int(np.argmin(np.abs(sp.points - leg.a)))
    if abs(sp.points[i0] - leg.a) > 1e-9 * (1 + abs(leg.a)):
        raise ValueError("leg origin must lie on the spatial grid")
    leg_masses = leg.action.integrate(leg.samples, axis=1)
    floor = 1e-13 * leg_masses.max(initial=0.0)
    if leg_masses[0] > floor or leg_masses[-1] > floor:
        raise ValueError("leg rows reach the spatial boundary; enlarge the grid "
                         "or tighten the locality envelope")
    n_pad = 1 << int(math.ceil(math.log2(2 * n_b)))
    bank = np.zeros((n_pad, leg.action.count))
    for j in range(n_b):
        k = j - i0  # offset in grid nodes
        bank[k % n_pad] = leg.samples[j]
    n_a = out_grid.count
    ft = np.fft.rfftn(first.samples * sp.spacing, (n_pad, n_a), axes=(0, 1)) \
        * np.fft.rfftn(bank, (n_pad, n_a), axes=(0, 1))
    rows = np.fft.irfftn(ft, (n_pad, n_a), axes=(0, 1))[:n_b] * first.action.spacing
    rows = _clip_ripple(rows)
    _check_edge_mass(out_grid, rows.sum(axis=0))
    return EndpointDensityField(sp, out_grid, rows, first.a,
                                first.duration + leg.duration,
                                mass=first.mass, hbar=first.hbar,
                                sigma2_rate=first.sigma2_rate)


def iterate_short_time(builder: Callable[[float, float], EndpointDensityField],
                       n_steps: int, dt: float, origin: float = 0.0,
                       translation_invariant: bool = False) -> EndpointDensityField:
    """n_steps - 1 applications of the composition law on builder(origin, dt)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    current = builder(origin, dt)
    if n_steps == 1:
        return current
    if translation_invariant:
        center = float(current.spatial.points[current.spatial.count // 2])
        leg = builder(center, dt)
        for _ in range(n_steps - 1):
            current = compose_fields_translation_invariant(current, leg)
        return current
    legs = [builder(float(b), dt) for b in current.spatial.points]
    for _ in range(n_steps - 1):
        current = compose_fields(current, legs)
    return current


def _variance(g: ActionDensity) -> float:
    mass = g.total_mass()
    if mass <= 0:
        raise ValueError("zero total mass")
    mu = g.mean_hint
    if mu is None:
        mu = float(g.grid.integrate(g.grid.values * g.samples)) / mass
    ex2 = float(g.grid.integrate((g.grid.values - mu) ** 2 * g.samples)) / mass
    exc = float(g.grid.integrate((g.grid.values - mu) * g.samples)) / mass
    return ex2 - exc * exc


def check_variance_additivity(g1: ActionDensity, g2: ActionDensity,
                              composed: ActionDensity,
                              wavenumbers: np.ndarray | None = None) -> CompositionReport:
    """Residual of Var(composed) = Var(g1) + Var(g2), scaled by the parts."""
    v1, v2 = _variance(g1), _variance(g2)
    if v1 <= 0 or v2 <= 0:
        raise ValueError("zero variance inputs")
    vc = _variance(composed)
    residual = abs(vc - v1 - v2) / (v1 + v2)
    levy = None
    if wavenumbers is not None:
        psi_parts = levy_exponent(g1, g1.duration, wavenumbers) * g1.duration \
            + levy_exponent(g2, g2.duration, wavenumbers) * g2.duration
        psi_comp = levy_exponent(composed, composed.duration, wavenumbers) * composed.duration
        levy = float(np.max(np.abs(psi_comp - psi_parts)))
    return CompositionReport(v1 + v2, vc, residual, levy)


def levy_exponent(g: ActionDensity, duration: float,
                  wavenumbers: np.ndarray) -> np.ndarray:
    """psi(k) = log ghat(k) / T with ghat the unit-mass characteristic function.

    The logarithm takes the principal branch with the phase unwrapped along
    the supplied wavenumber ordering, so psi is continuous in k.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    ks = np.asarray(wavenumbers, dtype=float)
    mass = g.total_mass()
    if mass <= 0:
        raise ValueError("zero total mass")
    phases = np.exp(1j * ks[:, None] * g.grid.values[None, :])
    ghat = g.grid.integrate(phases * g.samples[None, :], axis=1) / mass
    mod = np.abs(ghat)
    if np.any(mod < 1e-12):
        raise ValueError("characteristic function magnitude below 1e-12; log undefined")
    # unwrap outward from the smallest |k|, where the phase is unambiguous
    anchor = int(np.argmin(np.abs(ks)))
    raw = np.angle(ghat)
    phase = np.empty_like(raw)
    phase[anchor:] = np.unwrap(raw[anchor:])
    phase[:anchor + 1] = np.unwrap(raw[:anchor + 1][::-1])[::-1]
    return (np.log(mod) + 1j * phase) / duration
