"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

Set ACTIONLAB_DISABLE_NUMBA=1 to force the numpy path (same results,
useful for debugging and for benchmarks/bench_accel.py). The two paths
must agree to float64 round-off; the test suite exercises both.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ACTIONLAB_DISABLE_NUMBA", "0") not in ("0", "", "false", "False")

if not _DISABLED:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA


# -- lattice path actions -----------------------------------------------------
#
# Paths x0=a, x1, ..., x_nseg=b with each interior point drawn from `pos`.
# Segment rule: S += m*(x1-x0)**2/(2*dt) - V((x0+x1)/2)*dt.
# Potential values arrive pre-tabulated (v_a[i] at midpoint (a+pos[i])/2,
# v_mid[i,j] at (pos[i]+pos[j])/2, v_b[i] at (pos[i]+b)/2) so the inner
# loop is pure arithmetic. Path order: earliest slice varies slowest.


def _lattice_actions_numpy(pos, a, b, nseg, m, dt, v_a, v_mid, v_b):
    npos = pos.size
    acc = m * (pos - a) ** 2 / (2 * dt) - v_a * dt  # trailing digit = current endpoint
    if nseg > 2:
        seg = m * (pos[None, :] - pos[:, None]) ** 2 / (2 * dt) - v_mid * dt
        for _ in range(nseg - 2):
            acc = (acc.reshape(-1, npos)[:, :, None] + seg[None, :, :]).reshape(-1)
    last = m * (b - pos) ** 2 / (2 * dt) - v_b * dt
    return (acc.reshape(-1, npos) + last[None, :]).reshape(-1)


def _phase_sum_numpy(actions, weight, inv_hbar):
    return weight * complex(np.sum(np.exp(1j * actions * inv_hbar)))


if HAVE_NUMBA:

    @njit(cache=True)
    def _lattice_actions_njit(pos, a, b, nseg, m, dt, v_a, v_mid, v_b):
        npos = pos.size
        n_interior = nseg - 1
        total = npos ** n_interior
        out = np.empty(total, np.float64)
        idx = np.empty(n_interior, np.int64)
        for flat in range(total):
            rem = flat
            for d in range(n_interior - 1, -1, -1):
                idx[d] = rem % npos
                rem //= npos
            i0 = idx[0]
            s = m * (pos[i0] - a) ** 2 / (2 * dt) - v_a[i0] * dt
            for d in range(1, n_interior):
                i, j = idx[d - 1], idx[d]
                s += m * (pos[j] - pos[i]) ** 2 / (2 * dt) - v_mid[i, j] * dt
            ilast = idx[n_interior - 1]
            s += m * (b - pos[ilast]) ** 2 / (2 * dt) - v_b[ilast] * dt
            out[flat] = s
        return out

    @njit(cache=True)
    def _phase_sum_njit(actions, weight, inv_hbar):
        re = 0.0
        im = 0.0
        for k in range(actions.size):
            ph = actions[k] * inv_hbar
            re += np.cos(ph)
            im += np.sin(ph)
        return weight * (re + 1j * im)


def lattice_actions(pos, a, b, nseg, m, dt, v_a, v_mid, v_b):
    """Actions of all len(pos)**(nseg-1) lattice paths."""
    if nseg < 2:
        raise ValueError("need at least one interior slice (nseg >= 2)")
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    v_a = np.ascontiguousarray(v_a, dtype=np.float64)
    v_mid = np.ascontiguousarray(v_mid, dtype=np.float64)
    v_b = np.ascontiguousarray(v_b, dtype=np.float64)
    args = (pos, float(a), float(b), int(nseg), float(m), float(dt), v_a, v_mid, v_b)
    if USING_NUMBA:
        return _lattice_actions_njit(*args)
    return _lattice_actions_numpy(*args)


def phase_sum(actions, weight, hbar):
    """weight * sum_k exp(i * actions_k / hbar)."""
    actions = np.ascontiguousarray(actions, dtype=np.float64)
    if USING_NUMBA:
        return complex(_phase_sum_njit(actions, float(weight), 1.0 / float(hbar)))
    return _phase_sum_numpy(actions, float(weight), 1.0 / float(hbar))


# -- direct convolution (slow oracle for the FFT path) ------------------------


def _direct_convolve_numpy(f, g, dv):
    return np.convolve(f, g) * dv


if HAVE_NUMBA:

    @njit(cache=True)
    def _direct_convolve_njit(f, g, dv):
        n, m = f.size, g.size
        out = np.zeros(n + m - 1, np.float64)
        for i in range(n):
            fi = f[i]
            if fi == 0.0:
                continue
            for j in range(m):
                out[i + j] += fi * g[j]
        return out * dv


def direct_convolve(f, g, dv):
    """O(n*m) convolution scaled by the grid spacing dv; oracle for the FFT path."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    if USING_NUMBA:
        return _direct_convolve_njit(f, g, float(dv))
    return _direct_convolve_numpy(f, g, float(dv))
