import sys

import numpy as np
import pytest

from crcca.crcca import CrccaConfig, fit_crcca
from crcca.dataset import PairedDataset
from crcca.synthgen import generate


@pytest.fixture(scope="session")
def synth():
    return generate(5000, 0)


@pytest.fixture(scope="session")
def synth_small():
    return generate(1500, 7)


@pytest.fixture(scope="session")
def crcca9(synth):
    return fit_crcca(synth, CrccaConfig(levels=9, dims=2))


@pytest.fixture(scope="session")
def gaussian_pair():
    """Jointly Gaussian 2+2 dimensional sample with known population cross-covariance."""
    rng = np.random.default_rng(11)
    n = 4000
    z = rng.standard_normal((n, 2))
    x = z + 0.5 * rng.standard_normal((n, 2))
    y = z @ np.array([[1.0, 0.3], [-0.2, 0.8]]) + 0.7 * rng.standard_normal((n, 2))
    return PairedDataset(x, y)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
