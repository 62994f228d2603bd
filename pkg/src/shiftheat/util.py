"""Shared error types, quadrature tables and the worker-pool helper."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = [
    "SolverError",
    "SingularParameterError",
    "GeometryError",
    "BudgetExhaustedError",
    "NonFiniteIntegrandError",
    "gauss_nodes",
    "panel_nodes",
    "ordered_map",
    "thread_count",
]


class SolverError(RuntimeError):
    """Base class for numerical failures (exit code 2 territory)."""


class SingularParameterError(SolverError):
    """Spectral parameter too close to the spectrum for a kernel build."""


class GeometryError(SolverError):
    """Contour parameters are inconsistent (e.g. radius below the corner)."""


class BudgetExhaustedError(SolverError):
    """Subdivision or iteration budget ran out before convergence."""


class NonFiniteIntegrandError(SolverError):
    def __init__(self, node, value):
        super().__init__(f"integrand not finite at node {node!r}: {value!r}")
        self.node = node


_GAUSS_CACHE = {}


def gauss_nodes(order):
    """Gauss-Legendre nodes/weights on [-1, 1], cached."""
    if order not in _GAUSS_CACHE:
        _GAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GAUSS_CACHE[order]


def panel_nodes(edges, order=16):
    """Composite Gauss-Legendre nodes and weights over consecutive panels.

    ``edges`` is an increasing array of panel boundaries. Returns flat arrays
    (nodes, weights, panel_index).
    """
    edges = np.asarray(edges, dtype=float)
    gx, gw = gauss_nodes(order)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halfs[:, None] * gx[None, :]).ravel()
    weights = (halfs[:, None] * gw[None, :]).ravel()
    panel = np.repeat(np.arange(len(mids)), order)
    return nodes, weights, panel


def thread_count(requested=None):
    """Resolve the worker count: SHIFTHEAT_THREADS overrides, then the
    requested value, then 1."""
    env = os.environ.get("SHIFTHEAT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    if requested:
        return max(1, int(requested))
    return 1


def ordered_map(fn, items, threads=None):
    """Map ``fn`` over ``items`` with a bounded pool, preserving order.

    The reduction order is the submission order, so results are deterministic
    for any worker count.
    """
    n = thread_count(threads)
    items = list(items)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
