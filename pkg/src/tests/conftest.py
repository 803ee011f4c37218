import numpy as np
import pytest

from weylkit.domains import LimitOptions, PotentialModel, StepControl
from weylkit.potential import (
    make_constant,
    make_gaussian,
    make_matrix_expr,
    make_piecewise_constant,
    make_truncated,
)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def ctrl() -> StepControl:
    return StepControl(rtol=1e-10, atol=1e-12)


@pytest.fixture(scope="session")
def limit_opts(ctrl) -> LimitOptions:
    return LimitOptions(rtol=1e-9, ctrl=ctrl)


@pytest.fixture(scope="session")
def q0() -> np.ndarray:
    return np.array([[1.0, 0.5 - 0.25j], [0.5 + 0.25j, -2.0]])


@pytest.fixture(scope="session")
def zero_potential() -> PotentialModel:
    return make_constant(0.0)


@pytest.fixture(scope="session")
def constant_potential(q0) -> PotentialModel:
    return make_constant(q0)


@pytest.fixture(scope="session")
def gaussian_2x2() -> PotentialModel:
    # недиагональная гауссова яма, обрезанная на [0, 3]
    amplitude = np.array([[0.0, 1.0], [1.0, 0.0]])
    return make_truncated(make_gaussian(amplitude, center=1.5, width=0.4, order=6), 0.0, 3.0)


@pytest.fixture(scope="session")
def scalar_bump() -> PotentialModel:
    # (1 − (x − 1)²)⁴ на [0, 2]: гладкость C³ на концах
    return make_truncated(make_matrix_expr([["(1 - (x - 1)**2)**4"]], order=6), 0.0, 2.0)


@pytest.fixture(scope="session")
def step_potential() -> PotentialModel:
    return make_piecewise_constant([0.0, 1.0, 2.0], [[[2.0]], [[-1.0]]])


@pytest.fixture(scope="session")
def out_dir(tmpdir_factory):
    return tmpdir_factory.mktemp("results")
