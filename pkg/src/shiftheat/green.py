"""Characteristic determinants, Green's kernels and the boundary interpolant.

Two kernel kinds share one construction:

* ``nonlocal``  - boundary forms U1 y = alpha0 y(0) + beta0 y(1) and
  U2 y = alpha1 y'(0) + beta1 y'(1) (first spectral problem);
* ``dirichlet`` - U1 y = y(0), U2 y = y(1) (second spectral problem).

Kernels are normalized so that the x-derivative jumps by -1/a(xi) across
x = xi; applying the spatial operator to the integral of K against f then
returns -f. Everything is built from the normalized fundamental pair by
variation of parameters plus a 2x2 boundary correction; no closed forms are
assumed.
"""

from __future__ import annotations

import numpy as np

from .exprcore import eval_expr
from .odeint import (fundamental_pair, propagate_batch,
                     propagate_batch_reversed)
from .util import SingularParameterError, panel_nodes

__all__ = [
    "char_det",
    "char_det_batch",
    "char_det_scale",
    "green_kernel",
    "apply_kernel",
    "kernel_apply_batch",
    "q_function",
    "q_apply_batch",
    "QFunction",
    "KernelEvaluator",
]

DET_THRESHOLD = 1e-12
_UNIFORM_BREAKS = 8  # uniform panel breakpoints in the xi quadrature
_PANEL_ORDER = 16


def _boundary_matrix(spec, kind, e1, e1p, e2, e2p):
    """Boundary-form matrix applied to the normalized pair, given endpoint data."""
    if kind == "nonlocal":
        m11 = spec.alpha0 + spec.beta0 * e1
        m12 = spec.beta0 * e2
        m21 = spec.beta1 * e1p
        m22 = spec.alpha1 + spec.beta1 * e2p
    elif kind == "dirichlet":
        m11 = np.ones_like(e1)
        m12 = np.zeros_like(e2)
        m21 = e1
        m22 = e2
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return m11, m12, m21, m22


def _det_scale(spec, kind, e1, e1p, e2, e2p):
    """Magnitude scale of the determinant before cancellation.

    Built from the form weights and solution magnitudes rather than the
    matrix entries, so it stays positive when every entry vanishes at once
    (periodic-type eigenvalues).
    """
    if kind == "nonlocal":
        r1 = abs(spec.alpha0) + abs(spec.beta0) * (np.abs(e1) + np.abs(e2))
        r2 = abs(spec.alpha1) + abs(spec.beta1) * (np.abs(e1p) + np.abs(e2p))
    else:
        r1 = 1.0 + 0.0 * np.abs(e1)
        r2 = np.abs(e1) + np.abs(e2)
    return r1 * r2 + 1e-300


def char_det(spec, param, kind="nonlocal", tol=1e-10):
    """Determinant of the boundary forms on the fundamental pair at ``param``."""
    pair = fundamental_pair(spec, param, tol=tol)
    e1, e1p, e2, e2p = pair.endpoint()
    m11, m12, m21, m22 = _boundary_matrix(spec, kind, e1, e1p, e2, e2p)
    return complex(m11 * m22 - m12 * m21)


def char_det_batch(spec, params, kind="nonlocal", n_steps=None, per_mu=24):
    """Vectorized determinant sweep. Returns (det, scale) arrays."""
    params = np.asarray(params, dtype=complex)
    rec = propagate_batch(spec, params, np.array([1.0]), n_steps=n_steps, per_mu=per_mu)
    e1, e1p, e2, e2p = rec[0]
    m11, m12, m21, m22 = _boundary_matrix(spec, kind, e1, e1p, e2, e2p)
    det = m11 * m22 - m12 * m21
    scale = _det_scale(spec, kind, e1, e1p, e2, e2p)
    return det, scale


def char_det_scale(spec, param, kind="nonlocal", tol=1e-10):
    """(det, cancellation-aware scale) at a single parameter, adaptive path."""
    pair = fundamental_pair(spec, param, tol=tol)
    e1, e1p, e2, e2p = pair.endpoint()
    m11, m12, m21, m22 = _boundary_matrix(spec, kind, e1, e1p, e2, e2p)
    det = m11 * m22 - m12 * m21
    scale = _det_scale(spec, kind, e1, e1p, e2, e2p)
    return complex(det), float(scale)


def _as_callable(spec, f):
    if callable(f):
        return f
    if isinstance(f, tuple) and len(f) == 2:
        xi, vals = np.asarray(f[0], float), np.asarray(f[1])
        from scipy.interpolate import CubicSpline
        return CubicSpline(xi, vals)
    # assume an expression AST
    return lambda x: eval_expr(f, x)


class KernelEvaluator:
    """Green's kernel fixed at one spectral parameter.

    Exposes pointwise values/derivatives and an efficient ``apply`` that
    integrates the kernel against a function on a grid of x values.
    """

    def __init__(self, spec, param, kind, pair, det, scale):
        self.spec = spec
        self.param = complex(param)
        self.kind = kind
        self.pair = pair
        self.det = det
        self.scale = scale

    def _corrections(self, xi):
        """Boundary-correction coefficients c1(xi), c2(xi)."""
        y1x, y1px, y2x, y2px = self.pair.eval(xi)
        e1, e1p, e2, e2p = self.pair.endpoint()
        w = self.spec.wronskian_at(xi)
        axi = self.spec.a_at(xi)
        k0_1 = -(y1x * e2 - y2x * e1) / (axi * w)
        k0p_1 = -(y1x * e2p - y2x * e1p) / (axi * w)
        if self.kind == "nonlocal":
            r1 = -self.spec.beta0 * k0_1
            r2 = -self.spec.beta1 * k0p_1
        else:
            r1 = np.zeros_like(k0_1)
            r2 = -k0_1
        m11, m12, m21, m22 = _boundary_matrix(self.spec, self.kind, e1, e1p, e2, e2p)
        c1 = (m22 * r1 - m12 * r2) / self.det
        c2 = (m11 * r2 - m21 * r1) / self.det
        return c1, c2

    def value(self, x, xi):
        return self._point(x, xi)[0]

    def deriv_x(self, x, xi):
        return self._point(x, xi)[1]

    def _point(self, x, xi):
        y1x, y1px, y2x, y2px = self.pair.eval(float(x))
        y1s, y1ps, y2s, y2ps = self.pair.eval(float(xi))
        w = self.spec.wronskian_at(float(xi))
        denom = self.spec.a_at(float(xi)) * w
        if x > xi:
            k0 = -(y1s * y2x - y2s * y1x) / denom
            k0p = -(y1s * y2px - y2s * y1px) / denom
        else:
            k0 = 0.0
            k0p = 0.0
        c1, c2 = self._corrections(float(xi))
        return (k0 + c1 * y1x + c2 * y2x, k0p + c1 * y1px + c2 * y2px)

    def apply(self, f, x_grid):
        """Integrate the kernel against ``f``; returns (u, u_x) on ``x_grid``.

        ``f`` may be a callable, an expression AST, or a (xi, values) pair.
        Composite Gauss-Legendre panels are split at every grid point (the
        kernel's derivative kink) and at uniform breakpoints.
        """
        f = _as_callable(self.spec, f)
        x_grid = np.asarray(x_grid, dtype=float)
        edges = np.union1d(np.linspace(0.0, 1.0, _UNIFORM_BREAKS + 1), x_grid)
        xi, wq, _ = panel_nodes(edges, _PANEL_ORDER)
        y1s, y1ps, y2s, y2ps = self.pair.eval(xi)
        w = self.spec.wronskian_at(xi)
        ft = np.asarray(f(xi)) / (self.spec.a_at(xi) * w)
        per_panel1 = (wq * y1s * ft).reshape(len(edges) - 1, _PANEL_ORDER).sum(axis=1)
        per_panel2 = (wq * y2s * ft).reshape(len(edges) - 1, _PANEL_ORDER).sum(axis=1)
        F1e = np.concatenate([[0.0], np.cumsum(per_panel1)])
        F2e = np.concatenate([[0.0], np.cumsum(per_panel2)])
        idx = np.searchsorted(edges, x_grid)
        F1x, F2x = F1e[idx], F2e[idx]

        e1, e1p, e2, e2p = self.pair.endpoint()
        ik1 = e1 * F2e[-1] - e2 * F1e[-1]      # integral of K0(1, xi) f
        ikp1 = e1p * F2e[-1] - e2p * F1e[-1]
        if self.kind == "nonlocal":
            r1 = -self.spec.beta0 * ik1
            r2 = -self.spec.beta1 * ikp1
        else:
            r1 = 0.0
            r2 = -ik1
        m11, m12, m21, m22 = _boundary_matrix(self.spec, self.kind, e1, e1p, e2, e2p)
        c1 = (m22 * r1 - m12 * r2) / self.det
        c2 = (m11 * r2 - m21 * r1) / self.det

        y1x, y1px, y2x, y2px = self.pair.eval(x_grid)
        u = y1x * (F2x + c1) + y2x * (c2 - F1x)
        ux = y1px * (F2x + c1) + y2px * (c2 - F1x)
        return u, ux


def green_kernel(spec, param, kind="nonlocal", tol=1e-10):
    """Construct the kernel evaluator; fails near the spectrum."""
    pair = fundamental_pair(spec, param, tol=tol)
    e1, e1p, e2, e2p = pair.endpoint()
    m11, m12, m21, m22 = _boundary_matrix(spec, kind, e1, e1p, e2, e2p)
    det = m11 * m22 - m12 * m21
    scale = _det_scale(spec, kind, e1, e1p, e2, e2p)
    if abs(det) < DET_THRESHOLD * max(1.0, scale):
        raise SingularParameterError(
            f"parameter {param} is too close to the {kind} spectrum "
            f"(|det| = {abs(det):.3g}, scale = {scale:.3g})")
    return KernelEvaluator(spec, param, kind, pair, complex(det), float(scale))


def apply_kernel(kernel, f, x_grid):
    """Module-level alias for :meth:`KernelEvaluator.apply`."""
    return kernel.apply(f, x_grid)


# ---------------------------------------------------------------------------
# batched kernel application over many spectral parameters

def kernel_apply_batch(spec, params, f, x_grid, kind="nonlocal",
                       n_steps=None, per_mu=24, det_floor=DET_THRESHOLD):
    """Integrate the kernel at every parameter in ``params`` against ``f``.

    Returns (u, ux) with shape (len(params), len(x_grid)). One fixed-step
    batch propagation serves all parameters; the xi quadrature uses panels
    split at every grid point and at uniform breakpoints.
    """
    f = _as_callable(spec, f)
    params = np.asarray(params, dtype=complex)
    x_grid = np.asarray(x_grid, dtype=float)
    edges = np.union1d(np.linspace(0.0, 1.0, _UNIFORM_BREAKS + 1), x_grid)
    xi, wq, _ = panel_nodes(edges, _PANEL_ORDER)
    record = np.union1d(xi, np.union1d(edges, [0.0, 1.0]))
    rec = propagate_batch(spec, params, record, n_steps=n_steps, per_mu=per_mu)

    pos_xi = np.searchsorted(record, xi)
    pos_x = np.searchsorted(record, x_grid)
    y1s, y1ps, y2s, y2ps = (rec[pos_xi, i, :] for i in range(4))  # (nxi, nmu)
    w = spec.wronskian_at(xi)
    fvals = np.asarray(f(xi), dtype=complex)
    ft = ((fvals / spec.a_at(xi)) / w)[:, None]

    n_panels = len(edges) - 1
    pp1 = (wq[:, None] * y1s * ft).reshape(n_panels, _PANEL_ORDER, -1).sum(axis=1)
    pp2 = (wq[:, None] * y2s * ft).reshape(n_panels, _PANEL_ORDER, -1).sum(axis=1)
    zeros = np.zeros((1, params.size), dtype=complex)
    F1e = np.concatenate([zeros, np.cumsum(pp1, axis=0)], axis=0)
    F2e = np.concatenate([zeros, np.cumsum(pp2, axis=0)], axis=0)
    idx = np.searchsorted(edges, x_grid)
    F1x, F2x = F1e[idx], F2e[idx]                                 # (nx, nmu)

    iend = np.searchsorted(record, 1.0)
    e1, e1p, e2, e2p = rec[iend]
    m11, m12, m21, m22 = _boundary_matrix(spec, kind, e1, e1p, e2, e2p)
    det = m11 * m22 - m12 * m21
    scale = _det_scale(spec, kind, e1, e1p, e2, e2p)
    bad = np.abs(det) < det_floor * np.maximum(1.0, scale)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularParameterError(
            f"parameter {params[k]} too close to the {kind} spectrum")

    ik1 = e1 * F2e[-1] - e2 * F1e[-1]
    ikp1 = e1p * F2e[-1] - e2p * F1e[-1]
    if kind == "nonlocal":
        r1 = -spec.beta0 * ik1
        r2 = -spec.beta1 * ikp1
    else:
        r1 = np.zeros_like(ik1)
        r2 = -ik1
    c1 = (m22 * r1 - m12 * r2) / det
    c2 = (m11 * r2 - m21 * r1) / det

    y1x, y1px, y2x, y2px = (rec[pos_x, i, :] for i in range(4))   # (nx, nmu)
    u = y1x * (F2x + c1[None, :]) + y2x * (c2[None, :] - F1x)
    ux = y1px * (F2x + c1[None, :]) + y2px * (c2[None, :] - F1x)
    return u.T, ux.T


# ---------------------------------------------------------------------------
# boundary interpolant Q

class QFunction:
    """Homogeneous solution interpolating prescribed endpoint values."""

    def __init__(self, spec, lam, p, q, pair, c1, c2):
        self.spec = spec
        self.lam = complex(lam)
        self.p = p
        self.q = q
        self.pair = pair
        self._c1 = c1
        self._c2 = c2

    def __call__(self, x):
        y1, _, y2, _ = self.pair.eval(x)
        return self._c1 * y1 + self._c2 * y2

    def deriv(self, x):
        _, y1p, _, y2p = self.pair.eval(x)
        return self._c1 * y1p + self._c2 * y2p


def q_function(spec, lam, p, q, tol=1e-10):
    """Build Q(., lam, p, q) with Q(0) = p, Q(1) = q; fails on the Dirichlet spectrum."""
    pair = fundamental_pair(spec, lam, tol=tol)
    e1, _, e2, _ = pair.endpoint()
    scale = max(1.0, abs(e1))
    if abs(e2) < DET_THRESHOLD * scale:
        raise SingularParameterError(
            f"lambda = {lam} lies on the Dirichlet spectrum (y2(1) = {e2:.3g})")
    c1 = p
    c2 = (q - p * e1) / e2
    return QFunction(spec, lam, p, q, pair, c1, c2)


def q_apply_batch(spec, lams, p, q, x_grid, n_steps=None, per_mu=24):
    """Q values (and x-derivatives) for many parameters on a grid.

    ``p`` and ``q`` are scalars or arrays matching ``lams``. Returns (Q, Qx)
    of shape (len(lams), len(x_grid)).

    Uses the two-sided basis Q = p v(x)/v(0) + q y2(x)/y2(1), where v is
    integrated backward from x = 1: each ratio follows a single growth
    direction, so the evaluation stays stable for large |Re lambda| where
    the one-sided combination of y1 and y2 cancels catastrophically.
    """
    lams = np.asarray(lams, dtype=complex)
    p = np.broadcast_to(np.asarray(p, dtype=complex), lams.shape)
    q = np.broadcast_to(np.asarray(q, dtype=complex), lams.shape)
    x_grid = np.asarray(x_grid, dtype=float)
    record = np.union1d(x_grid, [0.0, 1.0])
    fwd = propagate_batch(spec, lams, record, n_steps=n_steps, per_mu=per_mu)
    rev = propagate_batch_reversed(spec, lams, record, n_steps=n_steps,
                                   per_mu=per_mu)
    iend = np.searchsorted(record, 1.0)
    e2 = fwd[iend, 2, :]
    v0 = rev[0, 2, :]          # v(0) in original coordinates
    scale = np.maximum(1.0, np.abs(fwd[iend, 0, :]))
    bad = (np.abs(e2) < DET_THRESHOLD * scale) | (np.abs(v0) < DET_THRESHOLD * scale)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularParameterError(f"lambda = {lams[k]} on the Dirichlet spectrum")
    pos_x = np.searchsorted(record, x_grid)
    y2x = fwd[pos_x, 2, :]
    y2px = fwd[pos_x, 3, :]
    vx = rev[np.searchsorted(record, x_grid), 2, :]
    vpx = -rev[np.searchsorted(record, x_grid), 3, :]   # d/dx = -d/ds
    Q = (p[None, :] * vx / v0[None, :] + q[None, :] * y2x / e2[None, :]).T
    Qx = (p[None, :] * vpx / v0[None, :] + q[None, :] * y2px / e2[None, :]).T
    return Q, Qx
