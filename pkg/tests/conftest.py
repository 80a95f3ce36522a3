import math

import numpy as np
import pytest

from rotwave.config import load_config
from rotwave.dynamics import PulseKernel
from rotwave.ensemble import boltzmann_populations, build_ensemble

D2_DOC = "molecule.name = D2\n"


@pytest.fixture(scope="session")
def d2():
    return load_config(D2_DOC)


@pytest.fixture(scope="session")
def trace_times():
    return np.arange(0.0, 801.0)


def _ensemble(config, record_times):
    table = boltzmann_populations(config.run.temperature, config.molecule, config.run.j_init_cut)
    pulse = PulseKernel.from_spec(config.pulse)
    return build_ensemble(table, pulse, config.molecule, config.run, record_times)


@pytest.fixture(scope="session")
def pumped_ensemble(d2, trace_times):
    return _ensemble(d2, trace_times)


@pytest.fixture(scope="session")
def null_ensemble(trace_times):
    config = load_config(D2_DOC + "pulse.peak_intensity = 0\n")
    return _ensemble(config, trace_times)


@pytest.fixture(scope="session")
def revival_period(d2):
    from rotwave.constants import revival_period_fs

    return revival_period_fs(d2.molecule.rotational_constant)


@pytest.fixture
def rng():
    return np.random.default_rng(20061017)


def random_state(rng, m, j_offset, size):
    from rotwave.dynamics import RotorState

    c = rng.normal(size=size) + 1j * rng.normal(size=size)
    return RotorState(m=m, j_offset=j_offset, coeffs=c / math.sqrt(np.sum(np.abs(c) ** 2)))
