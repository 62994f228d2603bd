import numpy as np
import pytest

from shiftheat.odeint import (MU_MAX, fundamental_pair, propagate_batch,
                              propagate_batch_reversed, wkb_branches,
                              wkb_matrix)
from shiftheat.problem import ProblemSpec
from shiftheat.util import SolverError


def test_constant_coefficient_closed_forms(p0_sin):
    pair = fundamental_pair(p0_sin, 1.0)
    y1, y1p, y2, y2p = pair.endpoint()
    assert y1 == pytest.approx(np.cosh(1.0), rel=1e-9)
    assert y2 == pytest.approx(np.sinh(1.0), rel=1e-9)
    pair2 = fundamental_pair(p0_sin, 2j * np.pi)
    assert pair2.endpoint()[0] == pytest.approx(1.0, abs=1e-9)
    xs = np.linspace(0, 1, 9)
    np.testing.assert_allclose(pair2.eval(xs)[0], np.cos(2 * np.pi * xs),
                               atol=1e-9)


def test_richardson_reintegration_oracle():
    spec = ProblemSpec.from_strings(a="1+0.1*x", phi="0")
    mu = 3 + 2j
    fine = propagate_batch(spec, np.array([mu]), np.array([1.0]), n_steps=1600)
    coarse = propagate_batch(spec, np.array([mu]), np.array([1.0]), n_steps=800)
    adaptive = fundamental_pair(spec, mu).endpoint()
    assert np.abs(fine[0, :, 0] - adaptive).max() <= 1e-8 * np.abs(adaptive).max()
    assert np.abs(fine[0, :, 0] - coarse[0, :, 0]).max() <= 1e-8


def test_mu_max_enforced(p0_sin):
    with pytest.raises(SolverError, match="mu_max"):
        fundamental_pair(p0_sin, MU_MAX * 1.5)
    with pytest.raises(SolverError):
        propagate_batch(p0_sin, np.array([MU_MAX * 1.5 + 0j]), np.array([1.0]))


def test_abel_wronskian_constant_along_x():
    spec = ProblemSpec.from_strings(a="1+0.1*x", b="0.3*x", phi="0")
    pair = fundamental_pair(spec, 2.0 + 1.0j)
    xs = np.linspace(0.0, 1.0, 11)
    w = pair.wronskian(xs)
    expected = spec.wronskian_at(xs)
    np.testing.assert_allclose(w, expected, rtol=1e-8)


def test_ode_residual_spot_checks(p0_sin):
    rng = np.random.RandomState(11)
    spec = ProblemSpec.from_strings(a="1+0.1*x", b="0.2", c="0.5", phi="0")
    h = 1e-5
    for _ in range(50):
        mu = complex(rng.uniform(-3, 3), rng.uniform(-15, 15))
        pair = fundamental_pair(spec, mu)
        x = rng.uniform(0.05, 0.95)
        vals = pair.eval(np.array([x - h, x, x + h]))
        for y, yp in ((vals[0], vals[1]), (vals[2], vals[3])):
            # y'' from the integrated slope at neighbor points
            ypp = (yp[2] - yp[0]) / (2 * h)
            res = (spec.a_at(x) * ypp + spec.b_at(x) * yp[1]
                   + (spec.c_at(x) - mu * mu) * y[1])
            assert abs(res) <= 1e-6 * max(1.0, abs(y[1]))


def test_conjugation_and_evenness_symmetry(p0_sin):
    mu = 1.3 + 4.2j
    a = fundamental_pair(p0_sin, mu).eval(np.linspace(0, 1, 5))
    b = fundamental_pair(p0_sin, np.conj(mu)).eval(np.linspace(0, 1, 5))
    np.testing.assert_allclose(a, np.conj(b), atol=1e-12)
    c = fundamental_pair(p0_sin, -mu).eval(np.linspace(0, 1, 5))
    np.testing.assert_array_equal(a, c)  # depends on mu^2 only


def test_reversed_propagation_matches_closed_form(p0_sin):
    lam = 1.7 + 0.4j
    xs = np.array([0.0, 0.3, 1.0])
    rec = propagate_batch_reversed(p0_sin, np.array([lam]), xs)
    v = rec[:, 2, 0]  # solution with v(1) = 0, dv/ds(1) = 1
    np.testing.assert_allclose(v, np.sinh(lam * (1 - xs)) / lam, rtol=1e-9)


def test_wkb_matrix_determinant(p0_sin, var_spec):
    for spec in (p0_sin, var_spec):
        for x in (0.0, 0.3, 1.0):
            frame = wkb_matrix(spec, 12.0, x)
            assert np.linalg.det(frame.B) == pytest.approx(-2.0, rel=1e-12)
            assert frame.w[0] == pytest.approx(1 / np.sqrt(spec.a_at(x)))
            assert frame.y_plus == pytest.approx(wkb_branches(spec, 12.0, x)[0])


def test_wkb_branches_degenerations(p0_sin):
    yp, dyp, ym, dym = wkb_branches(p0_sin, 2.0, 0.5)
    assert yp == pytest.approx(np.exp(1.0))
    assert ym == pytest.approx(np.exp(-1.0))
    spec_b = ProblemSpec.from_strings(b="1", phi="0")
    yp_b = wkb_branches(spec_b, 2.0, 0.5)[0]
    assert yp_b == pytest.approx(np.exp(1.0) * np.exp(-0.25))


def test_wkb_tracks_true_solution_at_large_mu():
    spec = ProblemSpec.from_strings(a="1+0.1*x", phi="0")
    mu = 40j
    x = 0.5
    yp, dyp, _, _ = wkb_branches(spec, mu, x)
    pair = fundamental_pair(spec, mu)
    y1, y1p, y2, y2p = pair.eval(x)
    # combine the pair to match the branch's initial data at x = 0
    y0p, dy0p, _, _ = wkb_branches(spec, mu, 0.0)
    true = y0p * y1 + dy0p * y2
    ratio = abs(true) / abs(yp)
    assert abs(ratio - 1.0) <= 3.0 / abs(mu)
