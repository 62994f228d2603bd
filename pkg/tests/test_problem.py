import numpy as np
import pytest

from shiftheat.problem import (ProblemSpec, compatibility_residuals,
                               spatial_operator, validate)


def test_p0_validates_with_expected_constant(p0_sin):
    report = validate(p0_sin, 64)
    assert report.passed
    assert report.measured("regularity_constant") == pytest.approx(-2.0)


def test_swapped_weights_kill_regularity():
    # a(0)*1*(-1) + a(1)*1*1 = 0
    spec = ProblemSpec.from_strings(phi="sin(2*pi*x)", alpha0=1.0, alpha1=1.0,
                                    beta0=1.0, beta1=-1.0)
    report = validate(spec)
    assert not report.passed
    assert report.measured("regularity_constant") == pytest.approx(0.0)


def test_zero_delta_fails():
    spec = ProblemSpec.from_strings(phi="sin(2*pi*x)", delta0=0.0)
    report = validate(spec)
    assert not report.passed
    assert not [ok for name, ok, _ in report.checks if name == "delta_product"][0]


def test_negative_a_fails():
    spec = ProblemSpec.from_strings(a="x-0.5", phi="sin(2*pi*x)")
    assert not validate(spec).passed


def test_compatibility_residuals_examples(p0_sin, p0_cos):
    assert compatibility_residuals(p0_sin) == pytest.approx((0.0, 0.0), abs=1e-14)
    assert compatibility_residuals(p0_cos) == pytest.approx((0.0, 0.0), abs=1e-14)
    r2, r3 = compatibility_residuals(p0_sin.with_phi("x"))
    assert (r2, r3) == pytest.approx((-1.0, 0.0))


def test_validate_deterministic_and_idempotent(p0_sin):
    a = validate(p0_sin, 32)
    b = validate(p0_sin, 32)
    assert a == b


def test_every_hypothesis_has_one_row(p0_sin):
    names = [name for name, _, _ in validate(p0_sin).checks]
    assert names == ["a_positive_min", "a_endpoint_product", "delta_product",
                     "regularity_constant", "omega_positive",
                     "compat_value_form", "compat_derivative_form"]


def test_spatial_operator(p0_sin):
    op = spatial_operator(p0_sin, p0_sin.phi)
    xs = np.linspace(0, 1, 9)
    np.testing.assert_allclose(op(xs), -4 * np.pi ** 2 * np.sin(2 * np.pi * xs),
                               atol=1e-10)


def test_wronskian_closed_form():
    spec = ProblemSpec.from_strings(a="1", b="1", phi="0")
    xs = np.linspace(0, 1, 7)
    np.testing.assert_allclose(spec.wronskian_at(xs), np.exp(-xs), rtol=1e-10)
