import numpy as np
import pytest

from pathwise import PathSpec, SampledPath, dyadic_hierarchy, generate


@pytest.fixture(scope="session")
def bm_path():
    return generate(PathSpec(kind="fbm", hurst=0.5, T=1.0, n_max=10, seed=7))


@pytest.fixture(scope="session")
def rough_path():
    return generate(PathSpec(kind="fbm", hurst=0.25, T=1.0, n_max=10, seed=5))


@pytest.fixture(scope="session")
def linear_path():
    return generate(PathSpec(kind="linear", slope=1.0, T=1.0, n_max=8))


@pytest.fixture(scope="session")
def triangle_path():
    return generate(PathSpec(kind="triangle", peak_time=0.5, peak_value=1.0, T=1.0, n_max=8))


@pytest.fixture(scope="session")
def constant_path():
    return generate(PathSpec(kind="constant", value=2.0, T=1.0, n_max=3))


def make_walk(values, T=1.0):
    """Wrap explicit samples (length 2**k + 1) as a path."""
    values = np.asarray(values, dtype=float)
    n_max = int(np.log2(values.size - 1))
    assert 2**n_max + 1 == values.size, "walk length must be 2**k + 1"
    return SampledPath(T=T, n_max=n_max, values=values, metadata={"kind": "test-walk"})


def single_interval_path(v0, v1):
    """A path whose coarsest custom level [0, last] holds one interval."""
    return make_walk([v0, 0.5 * (v0 + v1), v1])


@pytest.fixture(scope="session")
def hierarchy_bm(bm_path):
    return dyadic_hierarchy(bm_path, 8)
