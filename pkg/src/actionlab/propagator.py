"""Propagator synthesis: the unit-modulus character chi(A) = exp(i eta A)
turns a density of action states into a complex kernel

    K(b | a) = int dA g(A; b | a) exp(i eta A),

and the analytic short-time kernel provides the closed form the synthesis
must reproduce. Composition through an intermediate configuration, the
completeness relation on band-limited states, and the normalization
recursion N(2 dt) = N(dt)^2 sqrt(pi i hbar dt / m) are all checked here.

Branch convention: (i)^(-1/2) takes the principal value exp(-i pi/4),
matching the standard short-time kernel.
"""

from __future__ import annotations

import cmath
import json
import math
import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .density import ActionDensity, EndpointDensityField
from .grids import SpatialGrid

PHASE_SAMPLING_LIMIT = math.pi / 4  # max tolerable eta * dA per action-grid step
BAND_LIMIT_FRACTION = 0.8  # certified spectral content, as a fraction of Nyquist


@dataclass(frozen=True)
class Character:
    """Unit-modulus multiplicative weight over action values."""

    eta: float

    def __call__(self, action):
        return character_eval(self, action)


def character_eval(chi: Character, action):
    """exp(i eta A) as cos + i sin; |value| = 1 for every real A."""
    phase = chi.eta * np.asarray(action, dtype=float)
    return np.cos(phase) + 1j * np.sin(phase)


@dataclass(frozen=True)
class Kernel:
    """Complex propagator matrix indexed (final b, initial a) on a SpatialGrid."""

    grid: SpatialGrid
    matrix: np.ndarray
    duration: float
    hbar: float
    provenance: str = "analytic-short-time"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.grid.count, self.grid.count):
            raise ValueError("kernel matrix must be square on its grid")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("kernel entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def action_phase_integral(g: ActionDensity, eta: float) -> complex:
    """int dA g(A) exp(i eta A) by trapezoid, guarded against phase undersampling."""
    if abs(eta) * g.grid.spacing > PHASE_SAMPLING_LIMIT + 1e-12:
        raise ValueError(
            f"phase undersampling: eta * dA = {abs(eta) * g.grid.spacing:.3g} "
            f"exceeds {PHASE_SAMPLING_LIMIT:.3g}")
    phases = np.exp(1j * eta * g.grid.values)
    return complex(g.grid.integrate(g.samples * phases))


def kernel_from_density(field: EndpointDensityField, eta: float) -> np.ndarray:
    """One kernel column K(b | a) for the field's fixed origin a."""
    if abs(eta) * field.action.spacing > PHASE_SAMPLING_LIMIT + 1e-12:
        raise ValueError(
            f"phase undersampling: eta * dA = {abs(eta) * field.action.spacing:.3g} "
            f"exceeds {PHASE_SAMPLING_LIMIT:.3g}")
    phases = np.exp(1j * eta * field.action.values)
    return np.asarray(field.action.integrate(field.samples * phases[None, :], axis=1))


def kernel_from_fields(fields: Sequence[EndpointDensityField], eta: float,
                       grid: SpatialGrid, duration: float, hbar: float) -> Kernel:
    """Assemble a full kernel from one field per initial grid point."""
    cols = [kernel_from_density(f, eta) for f in fields]
    return Kernel(grid, np.stack(cols, axis=1), duration, hbar,
                  provenance="from-density")


def short_time_prefactor(m: float, hbar: float, dt: float) -> complex:
    """N(dt) = (m / (2 pi i hbar dt))^(1/2), principal branch."""
    return complex(np.sqrt(m / (2j * math.pi * hbar * dt)))


def analytic_short_time(m: float, potential: Callable | None, dt: float,
                        hbar: float, grid: SpatialGrid) -> Kernel:
    """Midpoint-rule short-time kernel N(dt) exp(i S_cl / hbar).

    S_cl = m (b-a)^2 / (2 dt) - V((a+b)/2) dt. Negative dt yields the
    backward kernel on the principal branch, so K(a, -dt | b) is the
    entrywise conjugate of K(b, dt | a) for real potentials.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    b = grid.points[:, None]
    a = grid.points[None, :]
    s_cl = m * (b - a) ** 2 / (2.0 * dt)
    if potential is not None:
        s_cl = s_cl - potential((a + b) / 2.0) * dt
    pref = short_time_prefactor(m, hbar, dt)
    return Kernel(grid, pref * np.exp(1j * s_cl / hbar), dt, hbar,
                  provenance="analytic-short-time")


def free_kernel(m: float, dt: float, hbar: float, grid: SpatialGrid) -> Kernel:
    return analytic_short_time(m, None, dt, hbar, grid)


def compose_kernels(second: Kernel, first: Kernel) -> Kernel:
    """K(c | a) = int db K2(c | b) K1(b | a) by trapezoid over the shared grid."""
    if second.grid.count != first.grid.count or \
            not np.array_equal(second.grid.points, first.grid.points):
        raise ValueError("kernel grids differ")
    if abs(second.hbar - first.hbar) > 1e-15 * first.hbar:
        raise ValueError("kernel hbar values differ")
    w = first.grid.trapezoid_weights()
    matrix = second.matrix @ (w[:, None] * first.matrix)
    return Kernel(first.grid, matrix, first.duration + second.duration,
                  first.hbar, provenance="composed")


def band_limited_packets(grid: SpatialGrid, count: int = 8,
                         sigma: float | None = None,
                         max_momentum: float | None = None) -> list[np.ndarray]:
    """Gaussian probe packets with spectral content below 80% of Nyquist.

    Centers stay in the middle third of the grid. `max_momentum` caps the
    carrier wavenumber; pick it so that transport over the kernel duration
    keeps the packets clear of the spatial boundary.
    """
    lo, hi = grid.extent
    span = hi - lo
    if sigma is None:
        sigma = span / 20.0
    k_max = BAND_LIMIT_FRACTION * math.pi / grid.spacing
    if max_momentum is None:
        max_momentum = 0.4 * k_max
    centers = np.linspace(lo + 0.35 * span, hi - 0.35 * span, max(count // 2, 2))
    momenta = np.linspace(0.0, min(max_momentum, k_max), max(count - count // 2, 2))
    packets = []
    for x0 in centers:
        for k0 in momenta:
            psi = np.exp(-((grid.points - x0) ** 2) / (4 * sigma**2)
                         + 1j * k0 * grid.points)
            norm = math.sqrt(float(grid.integrate(np.abs(psi) ** 2)))
            packets.append(psi / norm)
            if len(packets) == count:
                return packets
    return packets


def apply_matrix(kernel: Kernel, psi: np.ndarray) -> np.ndarray:
    w = kernel.grid.trapezoid_weights()
    return kernel.matrix @ (w * psi)


def apply_adjoint(kernel: Kernel, psi: np.ndarray) -> np.ndarray:
    w = kernel.grid.trapezoid_weights()
    return kernel.matrix.conj().T @ (w * psi)


def completeness_check(kernel: Kernel, packets: Sequence[np.ndarray] | None = None) -> float:
    """Worst relative residual of U-dagger U = identity on band-limited packets.

    The continuum statement int db K*(c | b) K(b | a) = delta(c - a) has no
    pointwise meaning on a grid; the certified discrete statement is that
    the evolution preserves every state whose spectral content stays below
    80% of the grid Nyquist wavenumber. Degenerate kernels simply report a
    large residual, no exception.
    """
    if packets is None:
        packets = band_limited_packets(kernel.grid)
    w = kernel.grid.trapezoid_weights()
    worst = 0.0
    for psi in packets:
        out = apply_adjoint(kernel, apply_matrix(kernel, psi))
        num = math.sqrt(float(np.sum(w * np.abs(out - psi) ** 2)))
        den = math.sqrt(float(np.sum(w * np.abs(psi) ** 2)))
        worst = max(worst, num / den)
    return worst


def kernel_relative_l2_error(test: Kernel, reference: Kernel,
                             packets: Sequence[np.ndarray] | None = None) -> float:
    """Relative L2 distance of two kernels as operators on band-limited packets."""
    if packets is None:
        packets = band_limited_packets(reference.grid)
    w = reference.grid.trapezoid_weights()
    worst = 0.0
    for psi in packets:
        diff = apply_matrix(test, psi) - apply_matrix(reference, psi)
        ref = apply_matrix(reference, psi)
        num = math.sqrt(float(np.sum(w * np.abs(diff) ** 2)))
        den = math.sqrt(float(np.sum(w * np.abs(ref) ** 2)))
        worst = max(worst, num / den)
    return worst


def time_reversal_residual(m: float, potential: Callable | None, dt: float,
                           hbar: float, grid: SpatialGrid) -> float:
    """Entrywise residual of K*(b, dt | a) = K(a, -dt | b)."""
    forward = analytic_short_time(m, potential, dt, hbar, grid)
    backward = analytic_short_time(m, potential, -dt, hbar, grid)
    diff = forward.matrix.conj() - backward.matrix.T
    return float(np.max(np.abs(diff)) / np.max(np.abs(forward.matrix)))


def normalization_recursion_check(m: float, hbar: float, dt: float) -> float:
    """Residual of N(2 dt) = N(dt)^2 sqrt(pi i hbar dt / m), principal branch."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n_dt = short_time_prefactor(m, hbar, dt)
    n_2dt = short_time_prefactor(m, hbar, 2 * dt)
    rhs = n_dt**2 * cmath.sqrt(1j * math.pi * hbar * dt / m)
    return abs(n_2dt - rhs) / abs(n_2dt)


# -- binary export -------------------------------------------------------------
#
# v1 layout: header <u4 count> <f8 dt> <f4 hbar>      (16 bytes)
# v2 layout: header <u4 version=2> <u4 count> <f8 dt> (16 bytes) then <f8 hbar>
# followed by the row-major complex128 matrix, little-endian (re, im) pairs.
# v2 widens hbar to f64 and carries the version tag first; the reader
# disambiguates via the exact file size each layout implies.


def write_kernel(kernel: Kernel, path, version: int = 2) -> None:
    count = kernel.grid.count
    with open(path, "wb") as fh:
        if version == 2:
            fh.write(struct.pack("<IId", 2, count, kernel.duration))
            fh.write(struct.pack("<d", kernel.hbar))
        elif version == 1:
            fh.write(struct.pack("<Idf", count, kernel.duration, kernel.hbar))
        else:
            raise ValueError(f"unknown kernel file version {version}")
        fh.write(np.ascontiguousarray(kernel.matrix, dtype="<c16").tobytes())
    lo, hi = kernel.grid.extent
    sidecar = {
        "version": version, "count": count, "dt": kernel.duration,
        "hbar": kernel.hbar, "provenance": kernel.provenance,
        "grid": {"min": lo, "max": hi, "count": count},
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def read_kernel(path, grid: SpatialGrid | None = None) -> Kernel:
    """Read a kernel file; the grid comes from the JSON sidecar unless given."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise ValueError("unrecognized kernel file layout: truncated header")
    first = struct.unpack_from("<I", raw, 0)[0]
    if first == 2 and len(raw) == 24 + 16 * struct.unpack_from("<I", raw, 4)[0] ** 2:
        count = struct.unpack_from("<I", raw, 4)[0]
        dt = struct.unpack_from("<d", raw, 8)[0]
        hbar = struct.unpack_from("<d", raw, 16)[0]
        offset = 24
        provenance = "from-density"
    elif len(raw) == 16 + 16 * first**2:
        count = first
        dt, hbar = struct.unpack_from("<df", raw, 4)
        offset = 16
        provenance = "from-density"
    else:
        raise ValueError("unrecognized kernel file layout")
    matrix = np.frombuffer(raw, dtype="<c16", offset=offset).reshape(count, count)
    if grid is None:
        with open(str(path) + ".json") as fh:
            side = json.load(fh)
        from .grids import build_spatial_grid

        grid = build_spatial_grid(side["grid"]["min"], side["grid"]["max"], count)
        provenance = side.get("provenance", provenance)
    return Kernel(grid, matrix.copy(), dt, float(hbar), provenance=provenance)
