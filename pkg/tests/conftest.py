import math

import numpy as np
import pytest
from hypothesis import strategies as st

from elastic_pml import backend
from elastic_pml.medium import isotropic_from_speeds, make_isotropic, make_orthotropic

# upper and lower media of the two-layer isotropic scenario
ISO_TOP = (1.5, 4.86, 4.8629)
ISO_BOTTOM = (3.0, 27.0, 26.9952)
ORTHO = (1.0, 4.0, 20.0, 2.0, 3.8)


@pytest.fixture
def iso_top():
    return make_isotropic(*ISO_TOP)


@pytest.fixture
def iso_bottom():
    return make_isotropic(*ISO_BOTTOM)


@pytest.fixture
def ortho():
    return make_orthotropic(*ORTHO)


@pytest.fixture(params=["numpy", "native"])
def each_backend(request):
    if request.param == "native" and not backend.has_native():
        pytest.skip("compiled kernels not built")
    before = backend.active()
    backend.set_backend(request.param)
    yield request.param
    backend.set_backend(before)


@st.composite
def orthotropic_params(draw):
    """Admissible (rho, c11, c22, c33, c12) with strict ellipticity margin."""
    rho = draw(st.floats(0.1, 10.0))
    c11 = draw(st.floats(0.1, 50.0))
    c22 = draw(st.floats(0.1, 50.0))
    c33 = draw(st.floats(0.1, 50.0))
    frac = draw(st.floats(-0.95, 0.95))
    return rho, c11, c22, c33, frac * math.sqrt(c11 * c22)


@st.composite
def isotropic_speeds(draw):
    rho = draw(st.floats(0.5, 5.0))
    cs = draw(st.floats(0.5, 5.0))
    cp = cs * draw(st.floats(1.5, 3.0))
    return isotropic_from_speeds(rho, cs, cp)


def random_orthotropic(rng: np.random.Generator):
    rho = rng.uniform(0.1, 10.0)
    c11, c22, c33 = rng.uniform(0.1, 50.0, 3)
    c12 = rng.uniform(-0.95, 0.95) * math.sqrt(c11 * c22)
    return make_orthotropic(rho, c11, c22, c33, c12)


def random_isotropic(rng: np.random.Generator):
    rho = rng.uniform(0.5, 5.0)
    cs = rng.uniform(0.5, 5.0)
    return isotropic_from_speeds(rho, cs, cs * rng.uniform(1.5, 3.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
