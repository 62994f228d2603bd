"""Executable acceptance battery shared by the test suite and `report`.

Every criterion returns a :class:`CriterionResult` with its measured value
and pinned tolerance; the reference problem throughout has unit diffusivity,
periodic-type boundary weights alpha = (1, 1), beta = (-1, -1), unit shift
couplings and omega = 1/2.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import green, spectrum
from .contours import (build_contour, contour_quadrature, hat_rule_zero_time,
                       integrate, truncation_radius)
from .exprcore import parse_expr
from .oracle import fd_solve
from .problem import ProblemSpec
from .solver_contour import default_traces, solve_contour
from .solver_residue import (a_operator_family, expansion_partial_sum,
                             group_records, solve_residue,
                             stationary_form_residuals, _group_values)

__all__ = ["CriterionResult", "AcceptanceContext", "CRITERIA", "run_criteria"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  criterion {self.number:2d} ({self.name}): {self.detail} [{self.seconds:.1f}s]"


class AcceptanceContext:
    """Memoized shared state (spectra, traces, oracle runs)."""

    def __init__(self):
        self.x21 = np.linspace(0.0, 1.0, 21)
        self.t5 = np.array([0.1, 0.2, 0.3, 0.4, 0.5])

    @cached_property
    def p0_sin(self):
        return ProblemSpec.from_strings(phi="sin(2*pi*x)")

    @cached_property
    def p0_cos(self):
        return ProblemSpec.from_strings(phi="cos(2*pi*x)")

    @cached_property
    def p0_poly(self):
        return ProblemSpec.from_strings(phi="x^2*(1-x)^2")

    @cached_property
    def var_spec(self):
        return ProblemSpec.from_strings(a="1+0.1*x", phi="sin(2*pi*x)")

    @cached_property
    def spectrum6(self):
        return spectrum.locate_eigenvalues(self.p0_sin, 6)

    @cached_property
    def spectrum80(self):
        return spectrum.locate_eigenvalues(self.p0_sin, 80)

    @cached_property
    def var_spectrum(self):
        return spectrum.locate_eigenvalues(self.var_spec, 30)

    @cached_property
    def cos_traces(self):
        return default_traces(self.p0_cos, k_segments=3)

    @cached_property
    def fd_cos(self):
        return fd_solve(self.p0_cos, nx=200, dt=2.5e-4, t_end=1.0)

    @cached_property
    def residue_cos(self):
        recs, meta = self.spectrum80
        return solve_residue(self.p0_cos, self.x21, self.t5, n_pairs=20,
                             records=recs, meta=meta)

    @cached_property
    def existence_cos(self):
        return solve_contour(self.p0_cos, self.x21, self.t5,
                             traces=self.cos_traces)


def _c1_spectrum_exactness(ctx):
    recs, meta = ctx.spectrum6
    exact = sorted([2j * np.pi * n * s for n in (1, 2, 3) for s in (1, -1)],
                   key=lambda z: (abs(z), np.angle(z)))
    err = max(abs(r.mu - e) for r, e in zip(recs, exact))
    chi_ok = all(r.chi == 2 for r in recs)
    ok = err <= 1e-8 and chi_ok and len(recs) == 6
    return ok, f"max |mu - 2 nu pi i| = {err:.2e} (tol 1e-8), chi all 2: {chi_ok}"


def _c2_asymptotic_consistency(ctx):
    recs, meta = ctx.var_spectrum
    y = np.array([r.nu * abs(r.mu - r.seed) for r in recs])
    nu = np.array([r.nu for r in recs], dtype=float)
    slope = float(np.polyfit(nu, y, 1)[0])
    drift = slope * len(recs)
    # the printed-constant failure mode is a linear trend of ~86 here;
    # allow small-scale fluctuation around a bounded level
    bound = max(0.25 * float(np.max(y)), 1e-3)
    ok = drift <= bound and bool(np.max(y) < 1.0)
    return ok, (f"nu*dist in [{y.min():.2e}, {y.max():.2e}] (bounded), "
                f"trend {drift:.2e} <= {bound:.2e}")


def _c3_green_identities(ctx):
    spec = ctx.p0_sin
    fs = [parse_expr(s) for s in ("sin(pi*x)", "x^2*(1-x)^2", "exp(x)")]
    params = [1.1 + 0.7j, 1.7 - 1.3j, 2.3 + 2.9j, 3.0 + 1.0j, 0.5 + 4.0j,
              4.2 - 0.8j, 1.0 + 7.3j, 2.0 + 9.1j, 4.8 + 3.3j, 0.3 + 11.2j]
    spots = np.array([0.137, 0.304, 0.5, 0.711, 0.864])
    h = 2e-4
    worst = 0.0
    for kind in ("nonlocal", "dirichlet"):
        for mu in params:
            kern = green.green_kernel(spec, mu, kind, tol=1e-12)
            for f in fs:
                cluster = np.unique(np.concatenate(
                    [spots + k * h for k in (-2, -1, 0, 1, 2)]))
                u, ux = kern.apply(f, cluster)
                for x0 in spots:
                    i = np.searchsorted(cluster, x0)
                    uxx = (-u[i + 2] + 16 * u[i + 1] - 30 * u[i]
                           + 16 * u[i - 1] - u[i - 2]) / (12 * h * h)
                    res = (spec.a_at(x0) * uxx + spec.b_at(x0) * ux[i]
                           + (spec.c_at(x0) - mu * mu) * u[i]
                           + _evalf(f, x0))
                    worst = max(worst, abs(complex(res)))
    ok = worst <= 1e-6
    return ok, f"max |L (int K f) + f| = {worst:.2e} (tol 1e-6)"


def _evalf(ast, x):
    from .exprcore import eval_expr
    return eval_expr(ast, x)


def _c4_kernel_evenness(ctx):
    spec = ctx.p0_sin
    rng = np.random.RandomState(7)
    mus = [1.3 + 0.9j, 2.2 - 1.4j, 0.7 + 4.6j, 3.4 + 2.1j, 1.0 + 9.4j,
           2.8 - 7.7j, 0.4 + 14.9j, 4.1 + 0.3j, 1.9 + 11.8j, 3.3 - 3.2j]
    worst = 0.0
    for mu in mus:
        kp = green.green_kernel(spec, mu, "nonlocal")
        km = green.green_kernel(spec, -mu, "nonlocal")
        for _ in range(10):
            x, xi = rng.uniform(0.02, 0.98, 2)
            worst = max(worst, abs(kp.value(x, xi) - km.value(x, xi)))
    ok = worst <= 1e-12
    return ok, f"sup |G1(x,xi,-mu) - G1(x,xi,mu)| = {worst:.2e} (tol 1e-12)"


def _c5_expansion_reconstruction(ctx):
    recs, meta = ctx.spectrum80
    spec = ctx.p0_poly
    dists = []
    for n in (5, 10, 20, 40):
        _, d = expansion_partial_sum(spec, spec.phi, n, ctx.x21,
                                     records=recs, meta=meta)
        dists.append(d)
    monotone = all(b <= a * 1.05 + 1e-12 for a, b in zip(dists, dists[1:]))
    ok = dists[-1] <= 1e-3 and monotone
    detail = ", ".join(f"N={n}: {d:.2e}" for n, d in zip((5, 10, 20, 40), dists))
    return ok, f"{detail} (tol 1e-3 at N=40, decreasing: {monotone})"


def _c6_exact_reproduction(ctx):
    spec = ctx.p0_sin
    recs, meta = ctx.spectrum6
    tg = np.array([0.05, 0.1, 0.25])
    sol = solve_residue(spec, ctx.x21, tg, n_pairs=3, records=recs, meta=meta)
    err_r = max(float(np.max(np.abs(
        sol.u[j] - np.exp(-4 * np.pi ** 2 * t) * np.sin(2 * np.pi * ctx.x21))))
        for j, t in enumerate(tg))
    fd = fd_solve(spec, nx=200, dt=1e-4, t_end=0.25)
    err_f = max(float(np.max(np.abs(
        fd.sample(t) - np.exp(-4 * np.pi ** 2 * t) * np.sin(2 * np.pi * fd.x))))
        for t in tg)
    ok = err_r <= 1e-6 and err_f <= 1e-4
    return ok, f"residue err {err_r:.2e} (tol 1e-6), oracle err {err_f:.2e} (tol 1e-4)"


def _c7_cross_method(ctx):
    spec = ctx.p0_cos
    recs, meta = ctx.spectrum80
    res = ctx.residue_cos
    con = solve_residue(spec, ctx.x21, ctx.t5, method="contour", h=meta.h)
    d1 = float(np.max(np.abs(res.u - con.u)))
    fd = ctx.fd_cos
    ix = np.searchsorted(fd.x, ctx.x21)
    d2 = max(float(np.max(np.abs(res.u[j] - fd.sample(t)[ix])))
             for j, t in enumerate(ctx.t5))
    exi = ctx.existence_cos
    d3 = float(np.max(np.abs(exi.u - res.u)))
    ok = d1 <= 1e-6 and d2 <= 5e-3 and d3 <= 1e-3
    return ok, (f"residue-vs-hat {d1:.2e} (1e-6), residue-vs-oracle {d2:.2e} "
                f"(5e-3), existence-vs-residue {d3:.2e} (1e-3)")


def _c8_continuation(ctx):
    spec = ctx.p0_cos
    traces = ctx.cos_traces
    jump_right = traces.starts[1][0]
    tg = np.array([0.55, 0.65, 0.75, 0.9, 1.0])
    sol = solve_contour(spec, ctx.x21, tg, traces=traces)
    fd = ctx.fd_cos
    ix = np.searchsorted(fd.x, ctx.x21)
    err = max(float(np.max(np.abs(sol.u[j] - fd.sample(t)[ix])))
              for j, t in enumerate(tg))
    ok = err <= 1e-2 and abs(jump_right - (-1.0)) <= 1e-6
    return ok, (f"sup vs oracle on (w, 2w] = {err:.2e} (tol 1e-2), "
                f"gamma0(w+) = {jump_right:+.6f} (expect -1)")


def _c9_component_identities(ctx):
    spec = ctx.p0_cos
    sol = ctx.existence_cos
    u2 = sol.components["u2"]
    u1 = sol.components["u1"]
    e_ends = max(float(np.max(np.abs(u2[:, 0] + spec.phi_at(0.0)))),
                 float(np.max(np.abs(u2[:, -1] + spec.phi_at(1.0)))))
    e_u1 = max(float(np.max(np.abs(u1[:, 0]))), float(np.max(np.abs(u1[:, -1]))))
    # u2 at t = 0 on an interior window, via a wide zero-time hat; the
    # two-sided interpolant evaluation is stable at any Re lambda
    rule = hat_rule_zero_time(1.0, 200.0)
    xs = ctx.x21[(ctx.x21 >= 0.2) & (ctx.x21 <= 0.8)]
    Q, _ = green.q_apply_batch(spec, rule.nodes, spec.phi_at(0.0) + 0j,
                               spec.phi_at(1.0) + 0j, xs)
    vals = -((rule.weights / rule.nodes) @ Q) / (np.pi * 1j)
    e_t0 = float(np.max(np.abs(vals)))
    ok = e_ends <= 1e-6 and e_t0 <= 1e-6 and e_u1 <= 1e-8
    return ok, (f"|u2(s,t)+phi(s)| = {e_ends:.2e} (1e-6), |u2(x,0)| on "
                f"[0.2,0.8] = {e_t0:.2e} (1e-6), |u1(s,t)| = {e_u1:.2e} (1e-8)")


def _c10_contour_calculus(ctx):
    t = 0.5
    R = truncation_radius(t, 1e-12, 0)
    gam = build_contour("hat_full", 0.7, R)
    rule = contour_quadrature(gam, 48)
    val = integrate(rule, lambda z: np.exp(z * z * t) / z) / (2j * np.pi)
    e1 = abs(val - 1.0)
    e2 = abs(integrate(rule, np.exp))
    circ = contour_quadrature(build_contour("circle_arc", 0.0, 1.0), 48)
    e3 = abs(integrate(circ, np.exp))
    ok = e1 <= 1e-8 and e2 <= 1e-10 and e3 <= 1e-10
    return ok, (f"hat residue err {e1:.2e} (1e-8), entire over hat {e2:.2e} "
                f"and circle {e3:.2e} (1e-10)")


def _c11_boundary_residuals(ctx):
    spec = ctx.p0_cos
    recs, meta = ctx.spectrum80
    r2, r3 = stationary_form_residuals(spec, ctx.t5, n_pairs=8,
                                       records=recs, meta=meta)
    e_stat = float(max(np.max(r2), np.max(r3)))
    # time-shift forms against the continued solution
    tg = np.array([0.12, 0.22, 0.32, 0.42])
    traces = ctx.cos_traces
    seg1 = solve_contour(spec, np.array([0.0, 1.0]), tg, traces=traces)
    seg2 = solve_contour(spec, np.array([0.0, 1.0]), tg + spec.omega,
                         traces=traces)
    l0 = np.abs(seg2.u[:, 0] + spec.delta0 * seg1.u[:, 1])
    l1 = np.abs(seg1.u[:, 0] + spec.delta1 * seg2.u[:, 1])
    e_shift = float(max(np.max(l0), np.max(l1)))
    ok = e_stat <= 1e-6 and e_shift <= 1e-3
    return ok, (f"stationary forms {e_stat:.2e} (1e-6), shift relations "
                f"{e_shift:.2e} (1e-3)")


def _c12_residue_chain(ctx):
    worst_chain = 0.0
    worst_close = 0.0
    var_recs, var_meta = ctx.var_spectrum
    # every group of the P0 enumeration; the first six complete orbits of
    # the variable-coefficient one (records come in sorted +- pairs)
    cases = ((ctx.p0_sin, ctx.spectrum6[0], ctx.spectrum6[1]),
             (ctx.var_spec, var_recs[:12], var_meta))
    for spec, recs, meta in cases:
        groups, zero_chi = group_records(recs, meta)
        xg = np.linspace(0.0, 1.0, 21)
        for grp in groups:
            # closure: the binomial combination annihilates each record
            for rec in grp:
                chi = rec.chi
                fields = a_operator_family(spec, rec, list(range(chi + 1)),
                                           spec.phi, xg)
                mu2 = rec.mu ** 2
                acc = np.zeros(len(xg), dtype=complex)
                for k in range(chi + 1):
                    acc = acc + (math.comb(chi, k) * (-mu2) ** (chi - k)
                                 * fields[k].values)
                worst_close = max(worst_close, float(np.max(np.abs(acc))))
            # chain: d/dt of the group component vs the extra mu^2 factor
            nodes, weights, V, _ = _group_values(spec, grp, spec.phi, xg, 64)
            t0, dt = 0.12, 2e-4
            vals = {}
            for tt in (t0 - dt, t0, t0 + dt):
                vals[tt] = (weights * nodes * np.exp(nodes ** 2 * tt)) @ V
            lhs = (vals[t0 + dt] - vals[t0 - dt]) / (2 * dt)
            rhs = (weights * nodes ** 3 * np.exp(nodes ** 2 * t0)) @ V
            worst_chain = max(worst_chain, float(np.max(np.abs(lhs - rhs))))
    ok = worst_chain <= 1e-5 and worst_close <= 1e-7
    return ok, (f"time-derivative relation {worst_chain:.2e} (1e-5), "
                f"closure {worst_close:.2e} (1e-7)")


def _c13_determinism(ctx):
    import os
    import tempfile

    from . import cli

    cfg = {
        "a": "1", "b": "0", "c": "0", "phi": "cos(2*pi*x)",
        "alpha0": 1.0, "alpha1": 1.0, "beta0": -1.0, "beta1": -1.0,
        "delta0": 1.0, "delta1": 1.0, "omega": 0.5,
        "method": "residue", "x_points": 11,
        "t_values": [0.1, 0.3, 0.5], "n_pairs": 4, "threads": 4,
    }
    with tempfile.TemporaryDirectory() as td:
        cpath = os.path.join(td, "cfg.json")
        import json
        with open(cpath, "w") as fh:
            json.dump(cfg, fh)
        outs = []
        for name in ("a.csv", "b.csv"):
            out = os.path.join(td, name)
            code = cli.main(["solve", "--config", cpath, "--out", out])
            assert code == 0, f"solve exited {code}"
            with open(out, "rb") as fh:
                outs.append(fh.read())
    ok = outs[0] == outs[1]
    return ok, f"byte-identical CSV across two runs (threads=4): {ok}"


CRITERIA = [
    (1, "spectrum exactness", _c1_spectrum_exactness, 10.0),
    (2, "asymptotic consistency", _c2_asymptotic_consistency, 60.0),
    (3, "kernel inverse identities", _c3_green_identities, 30.0),
    (4, "kernel evenness", _c4_kernel_evenness, None),
    (5, "expansion reconstruction", _c5_expansion_reconstruction, None),
    (6, "exact solution reproduction", _c6_exact_reproduction, None),
    (7, "cross-method agreement", _c7_cross_method, 300.0),
    (8, "continuation past omega", _c8_continuation, None),
    (9, "component identities", _c9_component_identities, None),
    (10, "contour calculus", _c10_contour_calculus, None),
    (11, "boundary-condition residuals", _c11_boundary_residuals, None),
    (12, "residue chain relations", _c12_residue_chain, None),
    (13, "determinism", _c13_determinism, None),
]


def run_criteria(numbers=None, ctx=None, verbose=True):
    """Run the requested criteria (all by default); returns results."""
    ctx = ctx or AcceptanceContext()
    results = []
    for num, name, fn, budget in CRITERIA:
        if numbers and num not in numbers:
            continue
        start = time.time()
        try:
            passed, detail = fn(ctx)
        except Exception as exc:  # a crash is a failed criterion, not a crash
            passed, detail = False, f"error: {exc!r}"
        elapsed = time.time() - start
        if passed and budget is not None and elapsed > budget:
            passed = False
            detail += f"; runtime {elapsed:.1f}s exceeded budget {budget:.0f}s"
        res = CriterionResult(num, name, passed, detail, elapsed)
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    return results
