"""Integration paths in the spectral plane and quadrature along them.

The hat contour consists of a vertical segment Re z = c for
|Im z| <= c(1+sqrt(2)) continued by rays at arguments +-3pi/8; the segment
corners c(1 +- i(1+sqrt2)) lie exactly on those rays (tan(3pi/8) = 1+sqrt2),
and every hat point satisfies Re z >= c. On the rays Re z^2 <= -|z|^2/sqrt2,
so factors exp(z^2 t) decay like a Gaussian, which drives truncation-radius
selection. The hyperbola branch Re z^2 = c is parameterized as
z(s) = sqrt(c) (cosh s + i sinh s), satisfying the constraint exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .util import GeometryError, NonFiniteIntegrandError, gauss_nodes

__all__ = [
    "LineSeg",
    "ArcSeg",
    "HyperbolaSeg",
    "ContourPath",
    "QuadratureRule",
    "build_contour",
    "contour_quadrature",
    "integrate",
    "truncation_radius",
    "HAT_RAY_ANGLE",
    "hat_corner_modulus",
]

HAT_RAY_ANGLE = 3.0 * np.pi / 8.0
_CHAIN_TOL = 1e-12


def hat_corner_modulus(c):
    """Modulus of the hat segment corners c(1 +- i(1+sqrt2))."""
    return c * np.sqrt(4.0 + 2.0 * np.sqrt(2.0))


@dataclass(frozen=True)
class LineSeg:
    z0: complex
    z1: complex

    def point(self, s):
        return self.z0 + (self.z1 - self.z0) * s

    def velocity(self, s):
        return (self.z1 - self.z0) * np.ones_like(s)

    @property
    def start(self):
        return self.z0

    @property
    def end(self):
        return self.z1


@dataclass(frozen=True)
class ArcSeg:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)


@dataclass(frozen=True)
class HyperbolaSeg:
    """Piece of the branch Re z^2 = c with sign * Re z > 0, s in [s0, s1]."""

    c: float
    s0: float
    s1: float
    sign: float = 1.0

    def point(self, s):
        u = self.s0 + (self.s1 - self.s0) * s
        rc = np.sqrt(self.c)
        return self.sign * (rc * np.cosh(u) + 1j * rc * np.sinh(u))

    def velocity(self, s):
        u = self.s0 + (self.s1 - self.s0) * s
        rc = np.sqrt(self.c)
        return self.sign * (self.s1 - self.s0) * (rc * np.sinh(u) + 1j * rc * np.cosh(u))

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)


@dataclass(frozen=True)
class ContourPath:
    segments: tuple
    closed: bool = False

    def __post_init__(self):
        segs = self.segments
        for a, b in zip(segs[:-1], segs[1:]):
            if abs(a.end - b.start) > _CHAIN_TOL * max(1.0, abs(a.end)):
                raise GeometryError(
                    f"segments do not chain: {a.end} -> {b.start}")
        if self.closed:
            gap = abs(segs[-1].end - segs[0].start)
            if gap > _CHAIN_TOL * max(1.0, abs(segs[0].start)):
                raise GeometryError(f"closed path does not return to start (gap {gap:.3g})")


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray  # includes dz direction factors
    path: ContourPath = field(repr=False, default=None)


def build_contour(kind, c, R, extra=None):
    """Construct one of the named paths.

    kind: 'hat_right' (upward), 'hat_full' (closed, counterclockwise),
    'hyperbola_right' (upward), or 'circle_arc' with extra=(theta0, theta1)
    (full counterclockwise circle when extra is None).
    """
    if kind == "circle_arc":
        th = extra if extra is not None else (0.0, 2.0 * np.pi)
        closed = abs((th[1] - th[0]) % (2 * np.pi)) < 1e-14 and th[1] != th[0]
        return ContourPath((ArcSeg(0.0, R, th[0], th[1]),), closed=closed)

    if c <= 0:
        raise GeometryError("contour parameter c must be positive")

    if kind == "hyperbola_right":
        if R * R < c:
            raise GeometryError(f"radius {R} below hyperbola vertex sqrt(c)")
        # |z|^2 = c cosh(2s) = R^2
        sR = 0.5 * np.arccosh(R * R / c)
        return ContourPath((HyperbolaSeg(c, -sR, sR, +1.0),))

    corner = hat_corner_modulus(c)
    if kind in ("hat_right", "hat_full"):
        if R < corner:
            raise GeometryError(
                f"radius {R:.6g} below the hat corner modulus {corner:.6g}")
        eta = 1.0 + np.sqrt(2.0)
        lo_corner = c * (1.0 - 1j * eta)
        hi_corner = c * (1.0 + 1j * eta)
        # rays start at the segment corners, which sit exactly on the
        # +-3pi/8 rays; starting further out would disconnect the path
        right = (
            LineSeg(R * np.exp(-1j * HAT_RAY_ANGLE), lo_corner),
            LineSeg(lo_corner, hi_corner),
            LineSeg(hi_corner, R * np.exp(1j * HAT_RAY_ANGLE)),
        )
        if kind == "hat_right":
            return ContourPath(right)
        left = tuple(LineSeg(-s.z0, -s.z1) for s in right)
        arcs_up = ArcSeg(0.0, R, HAT_RAY_ANGLE, np.pi - HAT_RAY_ANGLE)
        arcs_dn = ArcSeg(0.0, R, np.pi + HAT_RAY_ANGLE, 2 * np.pi - HAT_RAY_ANGLE)
        return ContourPath(right + (arcs_up,) + left + (arcs_dn,), closed=True)

    raise GeometryError(f"unknown contour kind {kind!r}")


def _panels_for(seg, base):
    """Panel edges (in parameter space) and per-panel order for a segment."""
    order = max(8, base // 3)
    if isinstance(seg, ArcSeg):
        n = max(1, int(np.ceil(abs(seg.theta1 - seg.theta0) / (np.pi / 6))))
    elif isinstance(seg, HyperbolaSeg):
        n = max(2, int(np.ceil(abs(seg.s1 - seg.s0) / 0.4)))
    else:
        # geometric grading toward the far end keeps decaying-tail rays cheap
        r0, r1 = abs(seg.z0), abs(seg.z1)
        big, small = max(r0, r1), min(max(r0, r1, 1e-12), max(min(r0, r1), 1e-12))
        n = max(2, int(np.ceil(2.0 + 1.5 * np.log2(max(big / max(small, 1e-12), 1.0)))))
        n = min(n, 24)
    return np.linspace(0.0, 1.0, n + 1), order


def contour_quadrature(path: ContourPath, nodes_per_segment=48):
    """Gauss-Legendre rule along the path with dz factors folded into weights."""
    if nodes_per_segment < 4:
        raise ValueError("nodes_per_segment must be at least 4")
    all_nodes = []
    all_weights = []
    for seg in path.segments:
        edges, order = _panels_for(seg, nodes_per_segment)
        gx, gw = gauss_nodes(order)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            s = mid + half * gx
            all_nodes.append(seg.point(s))
            all_weights.append(half * gw * seg.velocity(s))
    return QuadratureRule(np.concatenate(all_nodes), np.concatenate(all_weights), path)


def integrate(rule: QuadratureRule, integrand):
    """Sum w_k f(z_k) in node order; rejects non-finite integrand values."""
    try:
        vals = np.asarray(integrand(rule.nodes), dtype=complex)
        if vals.shape != rule.nodes.shape:
            raise TypeError
    except Exception:
        vals = np.array([integrand(z) for z in rule.nodes], dtype=complex)
    if not np.all(np.isfinite(vals)):
        k = int(np.argmin(np.isfinite(vals)))
        raise NonFiniteIntegrandError(rule.nodes[k], vals[k])
    return complex(np.add.reduce(rule.weights * vals))


def graded_hat_rule(c, R, t_max, eps=1e-8, order=16, re_cap=None):
    """Quadrature on the right hat with panels graded by the phase of e^{z^2 t}.

    One rule serves every t in (0, t_max]: along the rays the factor
    e^{z^2 t} is negligible outside |z|^2 <= L/(t sqrt2/2) with
    L = ln(1/eps) + margin, so the live phase is bounded and panel widths
    can grow once the Gaussian has died at the largest time.

    ``re_cap`` bends the rays into vertical tails at Re z = re_cap. Kernel
    construction loses roughly exp(2 Re z) of precision to exponential
    cancellation, so solvers cap the real part; the deformation stays inside
    the analyticity region Re z >= c and exp(z^2 t) still decays like a
    Gaussian in Im z along the tails.
    """
    L = np.log(1.0 / eps) + 12.0
    budget = 8.0
    corner = hat_corner_modulus(c)
    if R < corner:
        raise GeometryError(f"radius {R:.6g} below the hat corner modulus {corner:.6g}")
    gx, gw = gauss_nodes(order)
    cos_a = np.cos(HAT_RAY_ANGLE)

    if re_cap is not None and re_cap < 1.2 * c:
        re_cap = 1.2 * c
    sigma_bend = R if re_cap is None or re_cap >= R * cos_a else re_cap / cos_a

    # ray panel edges in the modulus parameter
    def live_step(s, rate_scale):
        t_live = min(t_max, L / max(np.sqrt(2.0) / 2.0 * s * s - c * c, 1e-12))
        return max(min(budget / (np.sqrt(2.0) * t_live * rate_scale), s), 1e-3)

    edges = [corner]
    while edges[-1] < sigma_bend:
        s = edges[-1]
        edges.append(min(sigma_bend, s + live_step(s, s)))
    edges = np.asarray(edges)

    nodes, weights = [], []

    def add_line(z0, z1, par_edges):
        for lo, hi in zip(par_edges[:-1], par_edges[1:]):
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            s = mid + half * gx
            nodes.append(z0 + (z1 - z0) * s)
            weights.append(half * gw * (z1 - z0))

    eta = 1.0 + np.sqrt(2.0)
    lo_c = c * (1.0 - 1j * eta)
    hi_c = c * (1.0 + 1j * eta)
    dn = np.exp(-1j * HAT_RAY_ANGLE)
    up = np.exp(1j * HAT_RAY_ANGLE)

    # vertical tail edges (in Im z), present only when the cap bends the ray
    tail = sigma_bend < R
    if tail:
        y0 = sigma_bend * np.sin(HAT_RAY_ANGLE)
        y1 = np.sqrt(max(R * R - (sigma_bend * cos_a) ** 2, y0 * y0))
        tedges = [y0]
        while tedges[-1] < y1:
            s = tedges[-1]
            tedges.append(min(y1, s + live_step(s, s)))
        tedges = np.asarray(tedges)
        xr = sigma_bend * cos_a

    par = (edges - corner) / max(sigma_bend - corner, 1e-300)
    if tail:
        tpar = (tedges - y0) / max(y1 - y0, 1e-300)
        add_line(xr - 1j * y1, xr - 1j * y0, 1.0 - tpar[::-1])
    add_line(sigma_bend * dn, lo_c, 1.0 - par[::-1])
    add_line(lo_c, hi_c, np.linspace(0.0, 1.0, 4))
    add_line(hi_c, sigma_bend * up, par)
    if tail:
        add_line(xr + 1j * y0, xr + 1j * y1, tpar)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), None)


def hat_rule_zero_time(c, R, order=16, width=8.0):
    """Hat quadrature for integrands without the e^{z^2 t} factor.

    Used for the t -> 0 limits, where decay comes solely from the
    interpolant's own exponential falloff (rate ~ x per unit modulus along
    the rays); fixed-width panels resolve that phase.
    """
    corner = hat_corner_modulus(c)
    if R < corner:
        raise GeometryError(f"radius {R:.6g} below the hat corner modulus {corner:.6g}")
    gx, gw = gauss_nodes(order)
    n_ray = max(2, int(np.ceil((R - corner) / width)))
    redges = np.linspace(corner, R, n_ray + 1)

    nodes, weights = [], []

    def add_line(z0, z1, par_edges):
        for lo, hi in zip(par_edges[:-1], par_edges[1:]):
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            s = mid + half * gx
            nodes.append(z0 + (z1 - z0) * s)
            weights.append(half * gw * (z1 - z0))

    eta = 1.0 + np.sqrt(2.0)
    lo_c = c * (1.0 - 1j * eta)
    hi_c = c * (1.0 + 1j * eta)
    par = (redges - corner) / (R - corner)
    add_line(R * np.exp(-1j * HAT_RAY_ANGLE), lo_c, 1.0 - par[::-1])
    add_line(lo_c, hi_c, np.linspace(0.0, 1.0, 4))
    add_line(hi_c, R * np.exp(1j * HAT_RAY_ANGLE), par)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), None)


def graded_hyperbola_rule(c, R, t_max, order=16, budget=4.0):
    """Quadrature on the right hyperbola branch, graded by e^{z^2 t} phase.

    Along Re z^2 = c the modulus of e^{z^2 t} is constant; the oscillation
    rate in the branch parameter grows like cosh, so edges are spaced
    uniformly in the phase c t sinh(2s).
    """
    if R * R < c:
        raise GeometryError("radius below the hyperbola vertex")
    sR = 0.5 * np.arccosh(R * R / c)
    phase_end = c * t_max * np.sinh(2 * sR)
    n_half = max(3, int(np.ceil(phase_end / budget)))
    ph = np.linspace(0.0, phase_end, n_half + 1)
    s_half = 0.5 * np.arcsinh(ph / (c * t_max))
    # keep kernel variation resolved near the vertex too
    s_half = np.union1d(s_half, np.linspace(0.0, min(sR, 1.0), 4))
    edges = np.concatenate([-s_half[::-1], s_half[1:]])
    gx, gw = gauss_nodes(order)
    rc = np.sqrt(c)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        s = mid + half * gx
        nodes.append(rc * (np.cosh(s) + 1j * np.sinh(s)))
        weights.append(half * gw * rc * (np.sinh(s) + 1j * np.cosh(s)))
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), None)


def truncation_radius(t, eps, growth_order=0):
    """Smallest R with exp(-(sqrt2/2) t R^2) R^g <= eps, by bisection."""
    if t <= 0 or not (0 < eps < 1):
        raise ValueError("need t > 0 and eps in (0, 1)")
    kappa = np.sqrt(2.0) / 2.0 * t

    def f(R):
        return -kappa * R * R + growth_order * np.log(max(R, 1e-300)) - np.log(eps)

    # start past the hump of R^g exp(-kappa R^2)
    lo = max(1e-9, np.sqrt(growth_order / (2.0 * kappa)) if growth_order else 1e-9)
    hi = max(2.0 * lo, 1.0)
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("truncation radius out of range")
    if f(lo) <= 0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi
