import numpy as np
import pytest

from shiftheat.solver_contour import (default_traces, extend_traces,
                                      laplace_transforms, pq_values,
                                      solve_contour, ShiftedTraces)
from shiftheat.solver_residue import boundary_trace
from shiftheat.util import SingularParameterError


@pytest.fixture(scope="module")
def cos_traces(p0_cos):
    return default_traces(p0_cos, k_segments=3)


def _const_traces(spec, value=1.0):
    t = np.linspace(1e-3, spec.omega, 60)
    g = np.full_like(t, value)
    return ShiftedTraces(omega=spec.omega, t_base=t, seg0=(g,), seg1=(g,),
                         starts=((value, value),), jumps_signed=())


def test_shift_recursion_values(p0_cos):
    tg = np.linspace(1e-3 * p0_cos.omega, p0_cos.omega, 40)
    b0 = boundary_trace(p0_cos, 0, tg)
    b1 = boundary_trace(p0_cos, 1, tg)
    ext = extend_traces(p0_cos, b0, b1, 3)
    # gamma_0(t + w) = -delta0 gamma_1(t), gamma_1(t + w) = -gamma_0(t)/delta1
    np.testing.assert_allclose(ext.seg0[1], -p0_cos.delta0 * ext.seg1[0],
                               atol=1e-14)
    np.testing.assert_allclose(ext.seg1[1], -ext.seg0[0] / p0_cos.delta1,
                               atol=1e-14)
    # two-step composition: gamma_0(t + 2w) = (delta0/delta1) gamma_0(t)
    np.testing.assert_allclose(
        ext.seg0[2], (p0_cos.delta0 / p0_cos.delta1) * ext.seg0[0], atol=1e-14)


def test_jump_records(p0_cos, cos_traces):
    (t1, j0, j1) = cos_traces.jumps[0]
    assert t1 == pytest.approx(p0_cos.omega)
    # gamma_0(w+) = -phi(1) = -1, gamma_0(w-) ~ e^{-4 pi^2 w} ~ 0
    assert j0 == pytest.approx(1.0, abs=1e-6)
    assert cos_traces.starts[1][0] == pytest.approx(-1.0, abs=1e-9)


def test_laplace_closed_form(p0_cos):
    traces = _const_traces(p0_cos)
    lam = 1.3 + 0.4j
    A, B = laplace_transforms(p0_cos, traces, lam)
    exact = np.exp(lam ** 2 * p0_cos.omega) * (
        1 - np.exp(-lam ** 2 * p0_cos.omega)) / lam ** 2
    assert A == pytest.approx(exact, rel=1e-9)
    assert B == pytest.approx(p0_cos.delta1 * exact, rel=1e-9)


def test_laplace_zero_and_self_convergence(p0_cos, cos_traces):
    from shiftheat.solver_contour import _laplace_batch
    z = _const_traces(p0_cos, 0.0)
    A, B = laplace_transforms(p0_cos, z, 2.0 + 1.0j)
    assert A == 0 and B == 0
    lams = np.array([1.5 + 2.5j, 3.0 - 1.0j])
    A1, _ = _laplace_batch(p0_cos, cos_traces, lams, n=256)
    A2, _ = _laplace_batch(p0_cos, cos_traces, lams, n=512)
    assert np.abs(A1 - A2).max() <= 1e-10


def test_pq_direct_solve_and_printed_formula(p0_cos):
    lam = np.sqrt(np.log(2.0) / p0_cos.omega)  # e^{lam^2 w} = 2
    d = pq_values(p0_cos, lam, 1.0, 0.0)
    assert d.p == pytest.approx(2.0 / 3.0)
    assert d.q == pytest.approx(-1.0 / 3.0)
    # the printed closed form for q
    e = np.exp(lam ** 2 * p0_cos.omega)
    q_closed = (e * d.B - d.A) / (p0_cos.delta1 * e * e - p0_cos.delta0)
    assert d.q == pytest.approx(q_closed)
    z = pq_values(p0_cos, lam, 0.0, 0.0)
    assert z.p == 0 and z.q == 0


def test_pq_matches_true_transform(p0_cos, cos_traces):
    # for the reference cosine datum the full transform has a closed form
    # via the alternating shift recursion
    lam = 2.0 + 2.2j
    A, B = laplace_transforms(p0_cos, cos_traces, lam)
    d = pq_values(p0_cos, lam, A, B)
    l2 = lam ** 2
    w = p0_cos.omega
    p_exact = (1.0 / (1.0 + np.exp(-l2 * w))) * (
        1 - np.exp(-(l2 + 4 * np.pi ** 2) * w)) / (l2 + 4 * np.pi ** 2)
    assert d.p == pytest.approx(p_exact, rel=1e-6)
    assert d.q == pytest.approx(p_exact, rel=1e-6)


def test_pq_denominator_guard(p0_cos):
    # e^{2 lam^2 w} = delta0/delta1 = 1 at lam^2 = i pi / w
    lam = np.sqrt(np.pi / p0_cos.omega) * np.exp(1j * np.pi / 4)
    with pytest.raises(SingularParameterError):
        pq_values(p0_cos, lam, 1.0, 1.0)


def test_solution_on_first_segment(p0_cos, cos_traces, x21):
    tg = np.array([0.1, 0.3, 0.5])
    sol = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    for j, t in enumerate(tg):
        exact = np.exp(-4 * np.pi ** 2 * t) * np.cos(2 * np.pi * x21)
        assert np.abs(sol.u[j] - exact).max() <= 1e-3
    assert set(sol.components) == {"u1", "u2", "u3"}
    assert sol.imag_residual <= 1e-6


def test_zero_data_gives_zero(p0_cos, x21):
    spec = p0_cos.with_phi("0")
    traces = _const_traces(spec, 0.0)
    sol = solve_contour(spec, x21, np.array([0.2]), traces=traces)
    assert np.abs(sol.u).max() <= 1e-10
    for comp in sol.components.values():
        assert np.abs(comp).max() <= 1e-10


def test_component_endpoint_identities(p0_cos, cos_traces, x21):
    sol = solve_contour(p0_cos, x21, np.array([0.15, 0.4]), traces=cos_traces)
    u1, u2 = sol.components["u1"], sol.components["u2"]
    assert np.abs(u1[:, [0, -1]]).max() <= 1e-8
    assert np.abs(u2[:, 0] + p0_cos.phi_at(0.0)).max() <= 1e-6
    assert np.abs(u2[:, -1] + p0_cos.phi_at(1.0)).max() <= 1e-6


def test_continuation_against_traces(p0_cos, cos_traces, x21):
    tg = np.array([0.6, 0.8, 1.0])
    sol = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    np.testing.assert_allclose(sol.u[:, 0], cos_traces.eval(0, tg), atol=1e-2)
    np.testing.assert_allclose(sol.u[:, -1], cos_traces.eval(1, tg), atol=1e-2)


def test_truncation_self_convergence(p0_cos, cos_traces, x21):
    import shiftheat.solver_contour as sc
    import shiftheat.contours as ct
    tg = np.array([0.2, 0.4])
    base = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    orig = sc.graded_hyperbola_rule
    try:
        sc.graded_hyperbola_rule = lambda c, R, t_max, **kw: orig(
            c, 1.25 * R, t_max, **kw)
        wider = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    finally:
        sc.graded_hyperbola_rule = orig
    assert np.abs(base.u - wider.u).max() <= 1e-4


def test_domain_limits(p0_cos, cos_traces, x21):
    with pytest.raises(ValueError):
        solve_contour(p0_cos, x21, np.array([5.0]), traces=cos_traces)
    with pytest.raises(ValueError):
        solve_contour(p0_cos, x21, np.array([0.0, 0.1]), traces=cos_traces)


def test_u1_vanishes_at_small_times(p0_cos):
    traces = default_traces(p0_cos, k_segments=2, n_points=60)
    interior = np.linspace(0.2, 0.8, 7)
    ts = np.array([2.5e-4, 5e-4, 1e-3])
    sol = solve_contour(p0_cos, interior, ts, traces=traces)
    sups = [float(np.abs(sol.components["u1"][j]).max()) for j in range(3)]
    # linear-in-t approach to zero
    assert sups[0] < sups[1] < sups[2]
    assert sups[0] <= 0.02


def test_hat_truncation_stability(p0_cos, cos_traces, x21):
    import shiftheat.solver_contour as sc
    import shiftheat.contours as ct
    tg = np.array([0.05, 0.3])
    base = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    orig = ct.graded_hat_rule
    try:
        sc.graded_hat_rule = lambda c, R, t_max, eps=1e-8, **kw: orig(
            c, 1.25 * R, t_max, eps, **kw)
        wider = solve_contour(p0_cos, x21, tg, traces=cos_traces)
    finally:
        sc.graded_hat_rule = orig
    # u1 and u2 ride on the hat; their truncation is Gaussian-converged
    for comp in ("u1", "u2"):
        assert np.abs(base.components[comp]
                      - wider.components[comp]).max() <= 1e-8
