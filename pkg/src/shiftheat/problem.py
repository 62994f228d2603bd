"""Problem instances and hypothesis checking.

A :class:`ProblemSpec` bundles the equation coefficients a, b, c on [0, 1],
the nonlocal boundary weights (alpha0, beta0) and (alpha1, beta1), the
time-shift couplings delta0, delta1 with the shift omega, and the initial
datum phi. Boundary forms follow the convention

    l2 f = alpha0 * f(0) + beta0 * f(1)
    l3 f = alpha1 * f'(0) + beta1 * f'(1)

i.e. derivatives are taken first and then evaluated at the reflected point,
so the regularity constant reads a(0)*alpha0*beta1 + a(1)*beta0*alpha1.
The alternative reading (chain-rule sign on the beta term) is documented in
the README; it is not what this package implements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exprcore import ExprAst, diff_expr, eval_expr, parse_expr

__all__ = [
    "ProblemSpec",
    "ValidationReport",
    "validate",
    "compatibility_residuals",
    "spatial_operator",
]

COMPAT_TOL = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    a: ExprAst
    b: ExprAst
    c: ExprAst
    phi: ExprAst
    alpha0: float
    alpha1: float
    beta0: float
    beta1: float
    delta0: float
    delta1: float
    omega: float

    @staticmethod
    def from_strings(a="1", b="0", c="0", phi="0", alpha0=1.0, alpha1=1.0,
                     beta0=-1.0, beta1=-1.0, delta0=1.0, delta1=1.0, omega=0.5):
        return ProblemSpec(
            a=parse_expr(a), b=parse_expr(b), c=parse_expr(c), phi=parse_expr(phi),
            alpha0=float(alpha0), alpha1=float(alpha1),
            beta0=float(beta0), beta1=float(beta1),
            delta0=float(delta0), delta1=float(delta1), omega=float(omega),
        )

    def with_phi(self, phi):
        if isinstance(phi, str):
            phi = parse_expr(phi)
        return ProblemSpec(self.a, self.b, self.c, phi, self.alpha0, self.alpha1,
                           self.beta0, self.beta1, self.delta0, self.delta1, self.omega)

    # coefficient evaluation (scalar or array x)
    def a_at(self, x):
        return eval_expr(self.a, x)

    def b_at(self, x):
        return eval_expr(self.b, x)

    def c_at(self, x):
        return eval_expr(self.c, x)

    def phi_at(self, x):
        return eval_expr(self.phi, x)

    @cached_property
    def phi_d1(self):
        return diff_expr(self.phi)

    @cached_property
    def phi_d2(self):
        return diff_expr(self.phi_d1)

    @cached_property
    def regularity_constant(self):
        return (self.a_at(0.0) * self.alpha0 * self.beta1
                + self.a_at(1.0) * self.beta0 * self.alpha1)

    @cached_property
    def sqrt_a_scale(self):
        """Integral of 1/sqrt(a) over [0, 1] (Gauss-Legendre, 64 panels x 8)."""
        return _panel_quad(lambda x: 1.0 / np.sqrt(self.a_at(x)), 0.0, 1.0)

    @cached_property
    def drift_integral(self):
        """Integral of b/(2a) over [0, 1]."""
        return _panel_quad(lambda x: self.b_at(x) / (2.0 * self.a_at(x)), 0.0, 1.0)

    @cached_property
    def _drift_cum_spline(self):
        from scipy.interpolate import CubicSpline
        edges = np.linspace(0.0, 1.0, 513)
        nodes, weights = np.polynomial.legendre.leggauss(8)
        mids = 0.5 * (edges[:-1] + edges[1:])
        halfs = 0.5 * np.diff(edges)
        xs = mids[:, None] + halfs[:, None] * nodes[None, :]
        vals = self.b_at(xs) / self.a_at(xs) + np.zeros_like(xs)
        per_panel = halfs * (vals @ weights)
        cum = np.concatenate([[0.0], np.cumsum(per_panel)])
        return CubicSpline(edges, cum)

    def wronskian_at(self, x):
        """Wronskian of the normalized fundamental pair: exp(-int_0^x b/a).

        Exact by the Abel identity, so kernel assembly never forms the
        catastrophically cancelling product y1 y2' - y2 y1'.
        """
        return np.exp(-self._drift_cum_spline(x))


def _panel_quad(f, lo, hi, panels=64, order=8):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0
    for i in range(panels):
        mid = 0.5 * (edges[i] + edges[i + 1])
        half = 0.5 * (edges[i + 1] - edges[i])
        total += half * np.sum(weights * np.asarray(f(mid + half * nodes)))
    return total


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = field(default_factory=tuple)  # (name, passed, measured)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def measured(self, name):
        for n, _, v in self.checks:
            if n == name:
                return v
        raise KeyError(name)

    def lines(self):
        out = []
        for name, ok, value in self.checks:
            out.append(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.6g}")
        out.append(f"verdict: {'pass' if self.passed else 'fail'}")
        return out


def compatibility_residuals(spec: ProblemSpec):
    """Boundary-form residuals (l2 phi, l3 phi) of the initial datum."""
    phi0 = spec.phi_at(0.0)
    phi1 = spec.phi_at(1.0)
    dphi0 = eval_expr(spec.phi_d1, 0.0)
    dphi1 = eval_expr(spec.phi_d1, 1.0)
    r2 = spec.alpha0 * phi0 + spec.beta0 * phi1
    r3 = spec.alpha1 * dphi0 + spec.beta1 * dphi1
    return (r2, r3)


def validate(spec: ProblemSpec, n_samples: int = 64) -> ValidationReport:
    """Check every solvability hypothesis; failures are report rows, not errors."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    xs = np.linspace(0.0, 1.0, n_samples)
    a_min = float(np.min(spec.a_at(xs)))
    a_ends = spec.a_at(0.0) * spec.a_at(1.0)
    r2, r3 = compatibility_residuals(spec)
    checks = (
        ("a_positive_min", a_min > 0.0, a_min),
        ("a_endpoint_product", abs(a_ends) > 1e-12, a_ends),
        ("delta_product", abs(spec.delta0 * spec.delta1) > 1e-12,
         spec.delta0 * spec.delta1),
        ("regularity_constant", abs(spec.regularity_constant) > 1e-12,
         spec.regularity_constant),
        ("omega_positive", spec.omega > 0.0, spec.omega),
        ("compat_value_form", abs(r2) <= COMPAT_TOL, r2),
        ("compat_derivative_form", abs(r3) <= COMPAT_TOL, r3),
    )
    return ValidationReport(checks)


def spatial_operator(spec: ProblemSpec, f: ExprAst):
    """Return the vectorized map x -> a f'' + b f' + c f for an AST ``f``."""
    d1 = diff_expr(f)
    d2 = diff_expr(d1)

    def op(x):
        return (spec.a_at(x) * eval_expr(d2, x)
                + spec.b_at(x) * eval_expr(d1, x)
                + spec.c_at(x) * eval_expr(f, x))

    return op


def spatial_operator_ast(spec: ProblemSpec, f: ExprAst) -> ExprAst:
    """a f'' + b f' + c f as an expression tree (composable)."""
    from .exprcore import BinOp
    d1 = diff_expr(f)
    d2 = diff_expr(d1)
    return BinOp("add",
                 BinOp("add", BinOp("mul", spec.a, d2),
                       BinOp("mul", spec.b, d1)),
                 BinOp("mul", spec.c, f))
