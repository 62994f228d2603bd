import numpy as np
import pytest

from shiftheat.problem import ProblemSpec


@pytest.fixture(scope="session")
def p0_sin():
    return ProblemSpec.from_strings(phi="sin(2*pi*x)")


@pytest.fixture(scope="session")
def p0_cos():
    return ProblemSpec.from_strings(phi="cos(2*pi*x)")


@pytest.fixture(scope="session")
def var_spec():
    return ProblemSpec.from_strings(a="1+0.1*x", phi="sin(2*pi*x)")


@pytest.fixture(scope="session")
def p0_spectrum(p0_sin):
    from shiftheat.spectrum import locate_eigenvalues
    return locate_eigenvalues(p0_sin, 8)


@pytest.fixture(scope="session")
def x21():
    return np.linspace(0.0, 1.0, 21)
