import numpy as np
import pytest

from specflow.spectral import random_field
from specflow.synth import AdvectionConfig, advect, make_texture


@pytest.fixture(scope="session")
def small_flow():
    """64x64 texture carried by an in-span n=2 field for 6 frames."""
    size = 64
    tex = 100.0 * make_texture(size, size, 10.0, seed=3)
    truth = random_field(2, 2, 0.15, seed=4, X=size, Y=size)
    cube = advect(tex, truth, AdvectionConfig(n_frames=6, substeps=1))
    return cube, truth


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
