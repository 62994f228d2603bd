"""Fundamental solutions of a(x) y'' + b(x) y' + (c(x) - mu^2) y = 0.

Two integration paths:

* :func:`fundamental_pair` wraps an adaptive embedded Runge-Kutta 5(4) run
  (scipy ``solve_ivp``) on the first-order complex system, with dense output.
  This is the reference path used by point evaluators and polish steps.
* :func:`propagate_batch` advances many spectral parameters at once with a
  fixed-step fifth-order scheme, recording the 2x2 solution matrix at a
  requested set of abscissae. Sweeps over contours and rectangles use it;
  its step count scales with max |mu| so accuracy tracks the reference path.

Both depend on mu only through mu^2, so values at -mu and at mu coincide
exactly, and conjugating mu conjugates the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .util import SolverError

__all__ = ["MU_MAX", "FundamentalPair", "fundamental_pair", "propagate_batch",
           "wkb_matrix", "wkb_branches"]

MU_MAX = 200.0

# Dormand-Prince 5th-order coefficients (fixed-step propagation)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])


@dataclass
class FundamentalPair:
    """Dense fundamental system normalized at x = 0.

    y1(0) = 1, y1'(0) = 0 and y2(0) = 0, y2'(0) = 1. ``eval`` returns the
    stacked values (y1, y1', y2, y2') at the query points.
    """

    mu: complex
    _sol: object

    def eval(self, x):
        out = self._sol(np.atleast_1d(np.asarray(x, dtype=float)))
        if np.ndim(x) == 0:
            return out[:, 0]
        return out

    def endpoint(self):
        return self.eval(1.0)

    def wronskian(self, x):
        y1, y1p, y2, y2p = self.eval(x)
        return y1 * y2p - y2 * y1p


def _check_mu(mu):
    if abs(mu) > MU_MAX:
        raise SolverError(
            f"|mu| = {abs(mu):.3g} exceeds mu_max = {MU_MAX:g}; "
            "use asymptotic seeds beyond this range")


def fundamental_pair(spec, mu, tol=1e-10):
    """Integrate the fundamental system at parameter ``mu`` with dense output."""
    _check_mu(mu)
    mu2 = complex(mu) ** 2

    def rhs(x, y):
        ax = spec.a_at(x)
        px = (mu2 - spec.c_at(x)) / ax
        qx = -spec.b_at(x) / ax
        return np.array([y[1], px * y[0] + qx * y[1],
                         y[3], px * y[2] + qx * y[3]])

    sol = solve_ivp(rhs, (0.0, 1.0), np.array([1, 0, 0, 1], dtype=complex),
                    method="RK45", rtol=tol, atol=tol * 1e-2, dense_output=True)
    if sol.status != 0:
        raise SolverError(f"integration failed at mu={mu}: {sol.message} "
                          f"(mu_max = {MU_MAX:g})")
    return FundamentalPair(mu=complex(mu), _sol=sol.sol)


def steps_for(mus, per_mu=24, minimum=400):
    m = float(np.max(np.abs(mus))) if np.size(mus) else 0.0
    return int(max(minimum, np.ceil(per_mu * m)))


class _ReversedSpec:
    """Coefficients of the equation after the substitution x -> 1 - x."""

    def __init__(self, spec):
        self._spec = spec

    def a_at(self, x):
        return self._spec.a_at(1.0 - np.asarray(x))

    def b_at(self, x):
        return -self._spec.b_at(1.0 - np.asarray(x))

    def c_at(self, x):
        return self._spec.c_at(1.0 - np.asarray(x))


def propagate_batch_reversed(spec, mus, x_record, n_steps=None, per_mu=24):
    """Fundamental matrix integrated from x = 1 leftward.

    Returns records in the reversed coordinate s = 1 - x at the requested
    original abscissae ``x_record`` (increasing); row r of the output
    corresponds to x_record[r]. The second column is the solution with
    v(1) = 0, dv/ds(1) = 1; its x-derivative is minus the recorded one.
    """
    x_record = np.asarray(x_record, dtype=float)
    s_record = np.sort(1.0 - x_record)
    rec = propagate_batch(_ReversedSpec(spec), mus, s_record,
                          n_steps=n_steps, per_mu=per_mu)
    return rec[::-1]


def propagate_batch(spec, mus, x_record, n_steps=None, per_mu=24):
    """Fixed-step propagation of the 2x2 fundamental matrix for many mu.

    Returns an array of shape (len(x_record), 4, len(mus)) holding
    (y1, y1', y2, y2') at each recorded abscissa. ``x_record`` must be an
    increasing array within [0, 1] whose first entry may be > 0; recording
    starts from x = 0 regardless.
    """
    mus = np.asarray(mus, dtype=complex)
    # growth is exp(|Re mu| * length); near the imaginary axis large moduli
    # are harmless, so the batch path gates on the real part
    if mus.size and (float(np.max(np.abs(mus.real))) > MU_MAX
                     or float(np.max(np.abs(mus))) > 6.0 * MU_MAX):
        raise SolverError(f"batch contains parameters beyond mu_max = {MU_MAX:g}")
    x_record = np.asarray(x_record, dtype=float)
    if x_record.ndim != 1 or np.any(np.diff(x_record) <= 0):
        raise ValueError("x_record must be strictly increasing")
    n_total = n_steps or steps_for(mus, per_mu=per_mu)
    mu2 = mus ** 2

    # build the global step grid: record points are forced grid points
    marks = np.union1d(np.array([0.0, 1.0]), x_record)
    grid = [0.0]
    for lo, hi in zip(marks[:-1], marks[1:]):
        k = max(1, int(np.ceil((hi - lo) * n_total)))
        grid.append(lo + (hi - lo) * (np.arange(1, k + 1) / k))
    grid = np.concatenate([np.atleast_1d(g) for g in grid])
    record_idx = np.searchsorted(grid, x_record)

    # coefficient values at every stage abscissa, shared across the batch
    x_stage = grid[:-1, None] + np.diff(grid)[:, None] * _DP_C[None, :]
    a_st = np.asarray(spec.a_at(x_stage), dtype=float) + np.zeros_like(x_stage)
    b_st = np.asarray(spec.b_at(x_stage), dtype=float) + np.zeros_like(x_stage)
    c_st = np.asarray(spec.c_at(x_stage), dtype=float) + np.zeros_like(x_stage)

    n_mu = mus.size
    y = np.zeros((4, n_mu), dtype=complex)
    y[0] = 1.0
    y[3] = 1.0
    out = np.empty((len(x_record), 4, n_mu), dtype=complex)
    next_rec = 0
    rec_set = {}
    for j, gi in enumerate(record_idx):
        rec_set.setdefault(int(gi), []).append(j)
    if 0 in rec_set:
        for j in rec_set[0]:
            out[j] = y

    ks = [None] * 7
    for i in range(len(grid) - 1):
        h = grid[i + 1] - grid[i]
        for s in range(7):
            ys = y
            if s:
                acc = _DP_A[s][0] * ks[0]
                for m in range(1, s):
                    if _DP_A[s][m] != 0.0:
                        acc = acc + _DP_A[s][m] * ks[m]
                ys = y + h * acc
            p = (mu2[None, :] - c_st[i, s]) / a_st[i, s]
            q = -b_st[i, s] / a_st[i, s]
            k = np.empty_like(ys)
            k[0] = ys[1]
            k[1] = p * ys[0] + q * ys[1]
            k[2] = ys[3]
            k[3] = p * ys[2] + q * ys[3]
            ks[s] = k
        acc = _DP_B[0] * ks[0]
        for m in range(1, 7):
            if _DP_B[m] != 0.0:
                acc = acc + _DP_B[m] * ks[m]
        y = y + h * acc
        gi = i + 1
        if gi in rec_set:
            for j in rec_set[gi]:
                out[j] = y
    return out


# ---------------------------------------------------------------------------
# large-parameter (Birkhoff) reference form

@dataclass(frozen=True)
class WkbFrame:
    """Large-parameter frame at one (mu, x): amplitude matrix, phase diagonal
    and the two branch values with derivatives."""

    mu: complex
    x: float
    B: np.ndarray       # [[sqrt a, sqrt a], [1/sqrt a, -1/sqrt a]], det = -2
    w: np.ndarray       # diag(1/sqrt a, -1/sqrt a)
    y_plus: complex
    dy_plus: complex
    y_minus: complex
    dy_minus: complex


def wkb_frame_matrices(spec, x):
    """Amplitude matrix B(x) and phase diagonal w(x) of the large-mu form."""
    ra = np.sqrt(spec.a_at(x))
    B = np.array([[ra, ra], [1.0 / ra, -1.0 / ra]])
    w = np.array([1.0 / ra, -1.0 / ra])
    return B, w


def wkb_matrix(spec, mu, x):
    """Frame evaluation: branch values/derivatives plus (B, w) at ``x``."""
    B, w = wkb_frame_matrices(spec, x)
    yp, dyp, ym, dym = wkb_branches(spec, mu, x)
    return WkbFrame(mu=complex(mu), x=float(x), B=B, w=w,
                    y_plus=yp, dy_plus=dyp, y_minus=ym, dy_minus=dym)


def wkb_branches(spec, mu, x):
    """Values and derivatives of the two large-mu branches at ``x``.

    y+-(x) = sqrt(a) * exp(+-mu * int_0^x dxi/sqrt(a) - int_0^x b/(2a) dxi),
    differentiated exactly.
    """
    from .problem import _panel_quad

    mu = complex(mu)
    x = float(x)
    phase = _panel_quad(lambda s: 1.0 / np.sqrt(spec.a_at(s)), 0.0, x) if x > 0 else 0.0
    damp = _panel_quad(lambda s: spec.b_at(s) / (2.0 * spec.a_at(s)), 0.0, x) if x > 0 else 0.0
    ax = spec.a_at(x)
    ra = np.sqrt(ax)
    # a'(x) via the exact derivative of the coefficient expression
    from .exprcore import diff_expr, eval_expr
    ap = eval_expr(diff_expr(spec.a), x)
    vals = []
    for sign in (+1.0, -1.0):
        e = np.exp(sign * mu * phase - damp)
        v = ra * e
        dv = e * (ap / (2.0 * ra) + sign * mu - spec.b_at(x) / (2.0 * ra))
        vals.append((v, dv))
    (yp, dyp), (ym, dym) = vals
    return yp, dyp, ym, dym
