"""Independent Crank-Nicolson reference solver and comparison utilities.

Segment one (0 < t <= omega) marches the interior with Crank-Nicolson rows
while the first and last rows impose the stationary nonlocal forms, the
derivative form using one-sided second-order stencils. Later segments
switch the boundary rows to the time-shift recursion

    u(0, t) = -delta0 u(1, t - omega),   u(1, t) = -u(0, t - omega) / delta1,

reading history from stored slices. Interior values are continuous across
segment joins; only the boundary values jump, so each segment stores its
own starting slice (right limits) while the previous segment keeps the left
limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .util import SolverError

__all__ = ["FdGrid", "ErrorReport", "fd_solve", "compare_grids", "pde_residual"]


@dataclass
class FdGrid:
    x: np.ndarray
    omega: float
    segments: list = field(default_factory=list)  # dicts: t0, t, U
    meta: dict = field(default_factory=dict)

    @property
    def t_end(self):
        return self.segments[-1]["t"][-1] if self.segments else 0.0

    def segment_of(self, t):
        """Index of the segment owning time t (segments are right-closed)."""
        if t < 0 or t > self.t_end + 1e-12:
            raise ValueError(f"time {t} outside the computed range")
        k = int(np.ceil(t / self.omega - 1e-12)) - 1
        return min(max(k, 0), len(self.segments) - 1)

    def sample(self, t):
        """Solution slice at time t (linear interpolation within a segment)."""
        seg = self.segments[self.segment_of(t)]
        tt = seg["t"]
        if t <= tt[0]:
            return seg["U"][0].copy()
        j = int(np.searchsorted(tt, t)) - 1
        j = min(j, len(tt) - 2)
        w = (t - tt[j]) / (tt[j + 1] - tt[j])
        return (1 - w) * seg["U"][j] + w * seg["U"][j + 1]


@dataclass
class ErrorReport:
    sup: float
    l2: float
    argmax: tuple            # (x, t)
    slices: list             # (t, sup at that t)

    def to_dict(self):
        return {"sup": self.sup, "l2": self.l2,
                "argmax_x": self.argmax[0], "argmax_t": self.argmax[1],
                "slices": [{"t": t, "sup": s} for t, s in self.slices]}


def _spatial_matrix(spec, x):
    """Interior-row discretization of a d_xx + b d_x + c."""
    n = len(x)
    h = x[1] - x[0]
    a = spec.a_at(x)
    b = spec.b_at(x)
    c = spec.c_at(x)
    main = np.zeros(n)
    lower = np.zeros(n - 1)
    upper = np.zeros(n - 1)
    main[1:-1] = -2.0 * a[1:-1] / h ** 2 + c[1:-1]
    lower[:-1] = a[1:-1] / h ** 2 - b[1:-1] / (2 * h)
    upper[1:] = a[1:-1] / h ** 2 + b[1:-1] / (2 * h)
    return sp.diags([lower, main, upper], [-1, 0, 1], format="lil")


def _boundary_rows_stationary(spec, n, h):
    """Rows imposing the two stationary nonlocal forms."""
    row_val = np.zeros(n)
    row_val[0] = spec.alpha0
    row_val[-1] = spec.beta0
    row_der = np.zeros(n)
    # one-sided three-point first derivatives, second order
    row_der[0] += spec.alpha1 * (-1.5 / h)
    row_der[1] += spec.alpha1 * (2.0 / h)
    row_der[2] += spec.alpha1 * (-0.5 / h)
    row_der[-1] += spec.beta1 * (1.5 / h)
    row_der[-2] += spec.beta1 * (-2.0 / h)
    row_der[-3] += spec.beta1 * (0.5 / h)
    return row_val, row_der


def fd_solve(spec, nx=200, dt=1e-4, t_end=None):
    """Crank-Nicolson reference solution up to ``t_end`` (default omega).

    ``dt`` is snapped so every segment takes an integer number of steps.
    """
    if nx < 20:
        raise ValueError("nx must be at least 20")
    omega = spec.omega
    t_end = omega if t_end is None else float(t_end)
    if dt > omega / 10:
        raise ValueError("dt must be at most omega/10")
    n_seg_steps = int(np.ceil(omega / dt - 1e-12))
    dt = omega / n_seg_steps
    n_segments = int(np.ceil(t_end / omega - 1e-12))

    x = np.linspace(0.0, 1.0, nx + 1)
    h = x[1] - x[0]
    n = nx + 1
    A = _spatial_matrix(spec, x)
    ident = sp.identity(n, format="lil")
    M_imp = (ident - 0.5 * dt * A).tolil()
    M_exp = (ident + 0.5 * dt * A).tolil()
    for M in (M_imp, M_exp):
        M[0, :] = 0.0
        M[-1, :] = 0.0

    row_val, row_der = _boundary_rows_stationary(spec, n, h)
    M1 = M_imp.copy()
    M1[0, :] = row_val
    M1[-1, :] = row_der
    M1 = M1.tocsc()
    if abs(spec.regularity_constant) < 1e-12:
        raise SolverError("stationary boundary rows are singular for this spec")
    lu_stationary = splu(M1)

    Mk = M_imp.copy()
    Mk[0, 0] = 1.0
    Mk[-1, -1] = 1.0
    lu_dirichlet = splu(Mk.tocsc())
    M_exp = M_exp.tocsr()

    grid = FdGrid(x=x, omega=omega,
                  meta={"nx": nx, "dt": dt, "scheme": "crank-nicolson",
                        "segment_steps": n_seg_steps})
    u = np.asarray(spec.phi_at(x), dtype=float) + np.zeros(n)

    n_rannacher = 2  # CN rings on the boundary jump; start segments implicitly

    for k in range(n_segments):
        t0 = k * omega
        tt = t0 + dt * np.arange(n_seg_steps + 1)
        if k > 0:
            prev = grid.segments[k - 1]["U"]
            u = u.copy()
            u[0] = -spec.delta0 * prev[0][-1]
            u[-1] = -prev[0][0] / spec.delta1

        def prev_boundary(j_frac):
            """Shift-recursion boundary values at offset j_frac * dt."""
            prev = grid.segments[k - 1]["U"]
            j0 = int(np.floor(j_frac))
            w = j_frac - j0
            j1 = min(j0 + 1, n_seg_steps)
            right = (1 - w) * prev[j0][-1] + w * prev[j1][-1]
            left = (1 - w) * prev[j0][0] + w * prev[j1][0]
            return -spec.delta0 * right, -left / spec.delta1

        U = np.empty((n_seg_steps + 1, n))
        U[0] = u
        for j in range(1, n_seg_steps + 1):
            if k == 0:
                rhs = M_exp @ u
                rhs[0] = 0.0
                rhs[-1] = 0.0
                u = lu_stationary.solve(rhs)
            elif j <= n_rannacher:
                # two backward-Euler half steps; the implicit matrix at
                # step dt/2 coincides with the Crank-Nicolson one
                for m in (0.5, 1.0):
                    rhs = u.copy()
                    rhs[0], rhs[-1] = prev_boundary(j - 1 + m)
                    u = lu_dirichlet.solve(rhs)
            else:
                rhs = M_exp @ u
                rhs[0], rhs[-1] = prev_boundary(float(j))
                u = lu_dirichlet.solve(rhs)
            U[j] = u
        grid.segments.append({"t0": t0, "t": tt, "U": U})
        if tt[-1] >= t_end - 1e-12:
            break
    return grid


def _slices_of(obj):
    """Uniform access: yields (t, x, values) rows for grids and solutions."""
    if isinstance(obj, FdGrid):
        for seg in obj.segments:
            for j, t in enumerate(seg["t"]):
                yield float(t), obj.x, seg["U"][j]
    else:
        for j, t in enumerate(obj.t):
            yield float(t), obj.x, obj.u[j]


def compare_grids(a, b, jump_band=None):
    """Error norms between two solutions on the common window.

    The x grids must coincide; values of ``b`` are interpolated in t only.
    Times within ``jump_band`` of a segment boundary are excluded (the
    boundary values are double valued there).
    """
    ax = a.x if not isinstance(a, FdGrid) else a.x
    bx = b.x if not isinstance(b, FdGrid) else b.x
    if len(ax) != len(bx) or np.max(np.abs(np.asarray(ax) - np.asarray(bx))) > 1e-12:
        raise ValueError("x grids differ; interpolation is allowed in t only")

    def t_range(obj):
        if isinstance(obj, FdGrid):
            return 0.0, obj.t_end
        return float(np.min(obj.t)), float(np.max(obj.t))

    lo = max(t_range(a)[0], t_range(b)[0])
    hi = min(t_range(a)[1], t_range(b)[1])
    if lo > hi:
        raise ValueError("time windows are disjoint")

    omega = a.omega if isinstance(a, FdGrid) else (
        b.omega if isinstance(b, FdGrid) else None)
    if jump_band is None:
        bands = [g.meta.get("dt", 1e-4) for g in (a, b) if isinstance(g, FdGrid)]
        jump_band = max(bands) if bands else 0.0

    def b_sample(t):
        if isinstance(b, FdGrid):
            return b.sample(t)
        j = int(np.searchsorted(b.t, t))
        if j == 0 or abs(b.t[j - 1] - t) < 1e-14:
            jj = min(j, len(b.t) - 1) if abs(b.t[min(j, len(b.t) - 1)] - t) < abs(b.t[j - 1] - t) else j - 1
            return b.u[max(jj, 0)]
        if j >= len(b.t):
            return b.u[-1]
        w = (t - b.t[j - 1]) / (b.t[j] - b.t[j - 1])
        return (1 - w) * b.u[j - 1] + w * b.u[j]

    sup = 0.0
    argmax = (np.nan, np.nan)
    sq = 0.0
    count = 0
    slices = []
    for t, xs, va in _slices_of(a):
        if t < lo - 1e-12 or t > hi + 1e-12:
            continue
        if omega is not None and jump_band > 0:
            k = round(t / omega)
            if k >= 1 and abs(t - k * omega) < jump_band:
                continue
        diff = np.abs(va - b_sample(t))
        m = float(np.max(diff))
        slices.append((t, m))
        sq += float(np.sum(diff ** 2))
        count += diff.size
        if m > sup:
            sup = m
            argmax = (float(xs[int(np.argmax(diff))]), t)
    if count == 0:
        raise ValueError("no comparable time slices in the common window")
    return ErrorReport(sup=sup, l2=float(np.sqrt(sq / count)), argmax=argmax,
                       slices=slices)


def pde_residual(grid, spec):
    """Max interior residual of the equation under centered stencils.

    Works on an :class:`FdGrid` (per segment) or any object with dense
    ``x``, ``t``, ``u`` arrays; rows next to segment joins are skipped.
    """
    if isinstance(grid, FdGrid):
        chunks = [(seg["t"], seg["U"]) for seg in grid.segments]
        x = grid.x
    else:
        chunks = [(np.asarray(grid.t, float), np.asarray(grid.u, float))]
        x = np.asarray(grid.x, float)
    if len(x) < 41:
        raise ValueError("grid too coarse for second differences")
    h = x[1] - x[0]
    a = spec.a_at(x)[1:-1]
    b = spec.b_at(x)[1:-1]
    c = spec.c_at(x)[1:-1]
    worst = 0.0
    for tt, U in chunks:
        if len(tt) < 3:
            continue
        dt = np.diff(tt)
        for j in range(1, len(tt) - 1):
            u0 = U[j]
            uxx = (u0[2:] - 2 * u0[1:-1] + u0[:-2]) / h ** 2
            ux = (u0[2:] - u0[:-2]) / (2 * h)
            ut = (U[j + 1][1:-1] - U[j - 1][1:-1]) / (dt[j - 1] + dt[j])
            res = a * uxx + b * ux + c * u0[1:-1] - ut
            worst = max(worst, float(np.max(np.abs(res))))
    return worst
