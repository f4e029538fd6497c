"""Brute-force lattice-path enumeration: the independent oracle.

A finite time lattice with a finite menu of interior positions realizes
the change of variables from paths to action values explicitly: counting
paths per action bin builds the empirical density of action states, and
the phase-weighted path sum must equal the phase integral against that
density. With one bin per distinct action value the identity is an exact
finite rearrangement, so agreement to round-off is the non-circularity
check for the whole grid pipeline.

The measure weight per path is (position spacing)^(interior slices),
mimicking a time-sliced measure; any global rescaling cancels in the
equivalence residual, so it is a gauge choice and is documented as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .density import ActionDensity, LagrangianSpec, classical_action
from .grids import MIN_ACTION_COUNT, ActionGrid, action_grid_from_extent

PATH_COUNT_GUARD = 10**7


@dataclass(frozen=True)
class LatticePathEnsemble:
    """All paths a -> b over `n_segments` steps through a fixed position menu."""

    n_segments: int
    positions: np.ndarray
    a: float
    b: float
    dt: float
    lagrangian: LagrangianSpec
    hbar: float = 1.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a nonempty 1-D sequence")
        if self.n_segments < 1:
            raise ValueError("need at least one segment")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if pos.size > 1:
            spacings = np.diff(pos)
            if np.any(spacings <= 0) or np.ptp(spacings) > 1e-12 * spacings[0]:
                raise ValueError("positions must be uniformly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def interior_slices(self) -> int:
        return self.n_segments - 1

    @property
    def path_count(self) -> int:
        return self.positions.size ** self.interior_slices

    @property
    def spacing(self) -> float:
        if self.positions.size < 2:
            return 1.0
        return float(self.positions[1] - self.positions[0])

    @property
    def measure_weight(self) -> float:
        """Uniform per-path weight (spacing)^(interior slices), a gauge choice."""
        return self.spacing ** self.interior_slices

    @property
    def duration(self) -> float:
        return self.dt * self.n_segments


def _check_guard(ensemble: LatticePathEnsemble) -> None:
    if ensemble.path_count > PATH_COUNT_GUARD:
        raise ValueError(
            f"path count {ensemble.path_count} exceeds the guard {PATH_COUNT_GUARD}")


def path_actions(ensemble: LatticePathEnsemble) -> np.ndarray:
    """Exact segment-rule actions of every path, in enumeration order."""
    _check_guard(ensemble)
    lag = ensemble.lagrangian
    if ensemble.n_segments == 1:
        return np.array([classical_action(ensemble.a, ensemble.b, ensemble.dt, lag)])
    pos = ensemble.positions
    v_a = np.asarray(lag.V((ensemble.a + pos) / 2.0), dtype=float)
    v_b = np.asarray(lag.V((pos + ensemble.b) / 2.0), dtype=float)
    v_mid = np.asarray(lag.V((pos[:, None] + pos[None, :]) / 2.0), dtype=float)
    return _accel.lattice_actions(pos, ensemble.a, ensemble.b, ensemble.n_segments,
                                  lag.mass, ensemble.dt, v_a, v_mid, v_b)


def enumerate_paths(ensemble: LatticePathEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """(paths, actions): every path's positions (including endpoints) and action."""
    actions = path_actions(ensemble)
    n = ensemble.path_count
    n_int = ensemble.interior_slices
    paths = np.empty((n, ensemble.n_segments + 1))
    paths[:, 0] = ensemble.a
    paths[:, -1] = ensemble.b
    if n_int:
        idx = np.unravel_index(np.arange(n), (ensemble.positions.size,) * n_int)
        for d in range(n_int):
            paths[:, d + 1] = ensemble.positions[idx[d]]
    return paths, actions


def exact_binning_grid(ensemble: LatticePathEnsemble, pad_nodes: int = 2) -> ActionGrid:
    """Uniform action grid whose nodes hit every distinct path action exactly.

    Works when the distinct actions are (numerically) commensurate, which
    holds for free and polynomial-potential lattices with rational
    parameters; raises otherwise.
    """
    distinct = np.unique(path_actions(ensemble))
    if distinct.size == 1:
        spacing = max(abs(distinct[0]), 1.0)
    else:
        gaps = np.diff(distinct)
        spacing = gaps.min()
        ratios = gaps / spacing
        if np.any(np.abs(ratios - np.round(ratios)) > 1e-9):
            raise ValueError("path actions are not commensurate; no exact grid")
    lo = distinct[0] - pad_nodes * spacing
    count = int(round((distinct[-1] - distinct[0]) / spacing)) + 1 + 2 * pad_nodes
    if count < MIN_ACTION_COUNT:
        extra = MIN_ACTION_COUNT - count
        count = MIN_ACTION_COUNT
        lo -= spacing * ((extra + 1) // 2)
    return action_grid_from_extent(lo, lo + spacing * (count - 1), count)


def histogram_g(ensemble: LatticePathEnsemble, bins: ActionGrid) -> ActionDensity:
    """Empirical density: per-node path measure divided by the bin width."""
    actions = path_actions(ensemble)
    if actions.min() < bins.values[0] - bins.spacing / 2 or \
            actions.max() > bins.values[-1] + bins.spacing / 2:
        raise ValueError("coverage violation: bins do not span the action range")
    idx = np.rint((actions - bins.values[0]) / bins.spacing).astype(int)
    counts = np.bincount(idx, minlength=bins.count).astype(float)
    samples = counts * ensemble.measure_weight / bins.spacing
    return ActionDensity(bins, samples, ensemble.a, ensemble.b, ensemble.duration,
                         mass=ensemble.lagrangian.mass, hbar=ensemble.hbar)


def path_sum_propagator(ensemble: LatticePathEnsemble, hbar: float | None = None) -> complex:
    """Coherent sum over all paths: weight * sum exp(i S / hbar)."""
    h = ensemble.hbar if hbar is None else hbar
    return _accel.phase_sum(path_actions(ensemble), ensemble.measure_weight, h)


def equivalence_check(ensemble: LatticePathEnsemble, hbar: float | None = None,
                      bins: ActionGrid | None = None) -> float:
    """|path sum - sum_j mass_j exp(i A*_j / hbar)| with A*_j the bin mean.

    Without `bins` each distinct action value is its own bin, making the
    comparison an exact rearrangement of the finite sum. Coarse bins show
    the midpoint-rule O(dA^2) discretization instead.
    """
    h = ensemble.hbar if hbar is None else hbar
    actions = path_actions(ensemble)
    w = ensemble.measure_weight
    direct = _accel.phase_sum(actions, w, h)
    if bins is None:
        values, counts = np.unique(actions, return_counts=True)
        masses = counts * w
    else:
        idx = np.rint((actions - bins.values[0]) / bins.spacing).astype(int)
        if idx.min() < 0 or idx.max() >= bins.count:
            raise ValueError("coverage violation: bins do not span the action range")
        masses = np.bincount(idx, minlength=bins.count) * w
        sums = np.bincount(idx, weights=actions, minlength=bins.count) * w
        live = masses > 0
        values = np.zeros(bins.count)
        values[live] = sums[live] / masses[live]
        values, masses = values[live], masses[live]
    binned = complex(np.sum(masses * np.exp(1j * values / h)))
    return abs(direct - binned)
