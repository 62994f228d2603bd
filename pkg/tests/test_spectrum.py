import numpy as np
import pytest

from shiftheat.spectrum import (asymptotic_seed, coefficient_A, corrected_seed,
                                dirichlet_seed, locate_eigenvalues,
                                multiplicity)
from shiftheat.util import SingularParameterError


def test_branch_constant_and_printed_seeds(p0_sin):
    assert coefficient_A(p0_sin) == pytest.approx(-2.0)
    seeds = asymptotic_seed(p0_sin, 1)
    # printed formula: ln0(-1) = i pi gives the ladder (2 nu + 1) pi i
    assert sorted(s.imag for s in seeds) == pytest.approx([-3 * np.pi, 3 * np.pi])
    assert all(abs(s.real) < 1e-12 for s in seeds)


def test_seed_scaling_with_constant_a():
    # the 1/int(dx/sqrt(a)) prefactor doubles every seed when a = 4; the
    # corrected branch constant is invariant under that scaling (the printed
    # one is not, since its endpoint weights carry a(0), a(1) unscaled)
    from shiftheat.problem import ProblemSpec
    base = ProblemSpec.from_strings(phi="0")
    quad = ProblemSpec.from_strings(a="4", phi="0")
    s1 = corrected_seed(base, 2)
    s4 = corrected_seed(quad, 2)
    np.testing.assert_allclose([2 * s.imag for s in s1], [s.imag for s in s4],
                               rtol=1e-12)
    assert quad.sqrt_a_scale == pytest.approx(0.5)


def test_corrected_seeds_match_exact_ladder(p0_sin):
    seeds = corrected_seed(p0_sin, 3)
    assert sorted(s.imag for s in seeds) == pytest.approx([-6 * np.pi, 6 * np.pi])


def test_dirichlet_seed(p0_sin, var_spec):
    assert dirichlet_seed(p0_sin, 2) == pytest.approx(2j * np.pi)
    assert dirichlet_seed(var_spec, 1).imag == pytest.approx(
        np.pi / var_spec.sqrt_a_scale)


def test_locate_p0(p0_spectrum):
    recs, meta = p0_spectrum
    exact = sorted([2j * np.pi * n * s for n in (1, 2, 3, 4) for s in (1, -1)],
                   key=lambda z: (abs(z), np.angle(z)))
    for r, e in zip(recs, exact):
        assert abs(r.mu - e) < 1e-8
        assert r.chi == 2
        assert r.residual <= 1e-9
    assert meta.zero_multiplicity == 2
    assert meta.complete
    assert meta.h >= 0.5
    # winding radii counts include the zero group
    assert meta.counts[0] == 2


def test_sorted_by_modulus_then_argument(p0_spectrum):
    recs, _ = p0_spectrum
    mods = [abs(r.mu) for r in recs]
    assert mods == sorted(mods)
    for a, b in zip(recs[:-1], recs[1:]):
        if abs(abs(a.mu) - abs(b.mu)) < 1e-8:
            assert np.angle(a.mu) < np.angle(b.mu)


def test_spectral_symmetries(p0_spectrum):
    recs, _ = p0_spectrum
    mus = [r.mu for r in recs]
    for r in recs:
        assert any(abs(m + r.mu) < 1e-8 for m in mus)         # negation
        assert any(abs(m - np.conj(r.mu)) < 1e-8 for m in mus)  # conjugation


def test_separation_gap(p0_spectrum):
    recs, meta = p0_spectrum
    gaps = [abs(b.mu - a.mu) for a, b in zip(recs[:-1], recs[1:])]
    assert min(gaps) > 2 * meta.delta - 1e-9


def test_multiplicity_examples(p0_sin):
    assert multiplicity(p0_sin, 2j * np.pi, 0.5) == 2
    assert multiplicity(p0_sin, 1j * np.pi, 0.3) == 0
    assert multiplicity(p0_sin, 1j * np.pi, 0.3, kind="dirichlet") == 1


def test_multiplicity_rejects_zero_on_circle(p0_sin):
    with pytest.raises(SingularParameterError):
        # the circle passes through the double zero at 2 pi i
        multiplicity(p0_sin, 2j * np.pi + 0.2, 0.2)


def test_empty_rectangle_sanity(p0_sin):
    # a circle strictly between consecutive eigenvalue pairs sees no zeros
    assert multiplicity(p0_sin, 3j * np.pi, 0.8) == 0


def test_variable_coefficient_case(var_spec):
    recs, meta = locate_eigenvalues(var_spec, 10)
    assert meta.complete and len(recs) == 10
    assert all(r.chi == 1 for r in recs)
    assert meta.zero_multiplicity == 2
    # located values track the corrected ladder closely
    assert max(r.nu * abs(r.mu - r.seed) for r in recs) < 0.05


def test_completeness_cross_check(p0_sin, p0_spectrum):
    # total winding over a disc equals the summed multiplicities of the
    # enclosed records plus the origin zero group
    recs, meta = p0_spectrum
    r = 10.0
    inside = sum(rec.chi for rec in recs if abs(rec.mu) < r)
    assert multiplicity(p0_sin, 0.0, r) == inside + meta.zero_multiplicity
