import numpy as np
import pytest

from shiftheat.contours import (ArcSeg, ContourPath, GeometryError, LineSeg,
                                build_contour, contour_quadrature,
                                graded_hat_rule, graded_hyperbola_rule,
                                hat_corner_modulus, hat_rule_zero_time,
                                integrate, truncation_radius)
from shiftheat.util import NonFiniteIntegrandError


def test_hat_geometry():
    c = 1.0
    assert hat_corner_modulus(c) == pytest.approx(np.sqrt(4 + 2 * np.sqrt(2)))
    # the segment corners lie exactly on the +-3pi/8 rays
    assert np.tan(3 * np.pi / 8) == pytest.approx(1 + np.sqrt(2))
    hat = build_contour("hat_right", c, 8.0)
    z0 = hat.segments[0].start
    assert np.angle(z0) == pytest.approx(-3 * np.pi / 8)
    assert abs(z0) == pytest.approx(8.0)
    with pytest.raises(GeometryError):
        build_contour("hat_right", c, 2.0)  # below the corner modulus


def test_hat_full_closes():
    gam = build_contour("hat_full", 0.7, 9.0)
    assert gam.closed
    ends = [s.end for s in gam.segments]
    starts = [s.start for s in gam.segments[1:]] + [gam.segments[0].start]
    for e, s in zip(ends, starts):
        assert abs(e - s) < 1e-12


def test_path_chaining_guard():
    with pytest.raises(GeometryError):
        ContourPath((LineSeg(0, 1), LineSeg(2, 3)))


def test_hyperbola_constraint_exact():
    hyp = build_contour("hyperbola_right", 1.0, 20.0)
    rule = contour_quadrature(hyp, 48)
    assert np.max(np.abs((rule.nodes ** 2).real - 1.0)) < 1e-12
    assert np.max(np.abs(rule.nodes)) <= 20.0 + 1e-9
    # upward orientation
    assert rule.nodes[0].imag < 0 < rule.nodes[-1].imag


def test_truncation_radius_values():
    R = truncation_radius(1.0, 1e-12, 0)
    assert R == pytest.approx(np.sqrt(12 * np.log(10) / (np.sqrt(2) / 2)),
                              rel=1e-4)
    assert truncation_radius(0.25, 1e-12, 0) == pytest.approx(2 * R, rel=1e-6)
    # nonincreasing in t
    rs = [truncation_radius(t, 1e-10, 0) for t in (0.05, 0.1, 0.5, 1.0)]
    assert rs == sorted(rs, reverse=True)
    # growth order shifts R upward
    assert truncation_radius(0.5, 1e-10, 2) > truncation_radius(0.5, 1e-10, 0)


def test_cauchy_integrals():
    circ = contour_quadrature(build_contour("circle_arc", 0.0, 1.0), 48)
    assert integrate(circ, lambda z: 1 / z) == pytest.approx(2j * np.pi,
                                                             abs=1e-10)
    assert abs(integrate(circ, np.exp)) < 1e-10
    assert integrate(circ, lambda z: np.zeros_like(z)) == 0


def test_closed_hat_residue_identity():
    t = 0.5
    R = truncation_radius(t, 1e-12, 0)
    rule = contour_quadrature(build_contour("hat_full", 0.7, R), 48)
    val = integrate(rule, lambda z: np.exp(z * z * t) / z) / (2j * np.pi)
    assert val == pytest.approx(1.0, abs=1e-8)
    rule2 = contour_quadrature(build_contour("hat_full", 0.7, R), 96)
    val2 = integrate(rule2, lambda z: np.exp(z * z * t) / z) / (2j * np.pi)
    assert abs(val - val2) <= 1e-10
    assert abs(integrate(rule, np.exp)) < 1e-10


def test_conjugate_symmetric_integrand_gives_real_residue_sum():
    # for f with f(conj z) = conj f(z), (1/2 pi i) of the closed integral
    # is real (the raw integral itself is purely imaginary)
    rule = contour_quadrature(build_contour("hat_full", 0.7, 9.0), 48)
    val = integrate(rule, lambda z: 1.0 / (z - 0.3))
    assert abs(val.real) < 1e-10
    assert (val / (2j * np.pi)).real == pytest.approx(1.0, abs=1e-9)


def test_truncation_consistency():
    t = 0.4
    R = truncation_radius(t, 1e-10, 0)
    f = lambda z: np.exp(z * z * t)

    def one_sided(radius):
        rule = contour_quadrature(build_contour("hat_right", 0.7, radius), 48)
        return integrate(rule, f)

    assert abs(one_sided(1.25 * R) - one_sided(R)) < 1e-10


def test_nonfinite_integrand_reports_node():
    rule = contour_quadrature(build_contour("circle_arc", 0.0, 1.0), 48)
    with pytest.raises(NonFiniteIntegrandError):
        with np.errstate(divide="ignore", invalid="ignore"):
            integrate(rule, lambda z: 1.0 / (z - rule.nodes[3]))


def test_graded_rules_agree_with_generic():
    t = 0.3
    f = lambda z: np.exp(z * z * t) / z
    R = truncation_radius(t, 1e-10, 0)
    generic = integrate(contour_quadrature(build_contour("hat_right", 1.0, R),
                                           48), f)
    graded = graded_hat_rule(1.0, R, t_max=t, eps=1e-10)
    val = np.add.reduce(graded.weights * f(graded.nodes))
    assert abs(val - generic) < 1e-9
    capped = graded_hat_rule(1.0, R, t_max=t, eps=1e-10, re_cap=2.5)
    val_c = np.add.reduce(capped.weights * f(capped.nodes))
    assert abs(val_c - generic) < 1e-9
    assert np.max(capped.nodes.real) <= 2.5 + 1e-9


def test_hyperbola_rule_oscillatory_accuracy():
    # inverse-transform identity: with the lam^-3 decay the solvers rely on,
    # (1/pi i) int lam e^{lam^2 t} (lam^2 - s0)^-2 dlam = t e^{s0 t}
    c, t, s0 = 1.0, 0.8, -3.0

    def value(R):
        rule = graded_hyperbola_rule(c, R, t_max=t)
        return np.add.reduce(rule.weights * rule.nodes
                             * np.exp(rule.nodes ** 2 * t)
                             / (rule.nodes ** 2 - s0) ** 2) / (1j * np.pi)

    exact = t * np.exp(s0 * t)
    assert value(20.0) == pytest.approx(exact, abs=2e-5)
    # algebraic-tail self convergence (error ~ 1/R^4)
    assert abs(value(30.0) - exact) < abs(value(15.0) - exact)


def test_zero_time_hat_rule():
    # without the Gaussian factor the rays still live on the +-3pi/8 lines
    rule = hat_rule_zero_time(1.0, 60.0)
    assert np.max(np.abs(rule.nodes)) <= 60.0 + 1e-9
    outer = rule.nodes[np.abs(rule.nodes) > 3.0]
    assert np.allclose(np.abs(np.angle(outer)), 3 * np.pi / 8, atol=1e-12)
