import numpy as np
import pytest

from fracfold import ProblemSpec, assemble_operator, build_grid, power_nonlinearity
from fracfold.config import RunConfig
from fracfold.continuation import FoldPolicy, TracePolicy, fold_round, trace_minimal
from fracfold.verify import _Cache

CANONICAL = ProblemSpec(s=0.4, delta=0.5, beta=0.0, coeff=1.0, nonlinearity=power_nonlinearity(2.0))


@pytest.fixture(scope="session")
def op256_s04():
    return assemble_operator(build_grid(1.0, 256), 0.4)


@pytest.fixture(scope="session")
def op128_s05():
    return assemble_operator(build_grid(1.0, 128), 0.5)


@pytest.fixture(scope="session")
def canonical_spec():
    return CANONICAL


@pytest.fixture(scope="session")
def folded_branch(op256_s04):
    branch = trace_minimal(CANONICAL, op256_s04, TracePolicy())
    return fold_round(branch, op256_s04, CANONICAL, FoldPolicy())


@pytest.fixture(scope="session")
def accept_cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def accept_cache():
    return _Cache()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
