import os

import numpy as np
import pytest

import sgphase as sg


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    os.environ["SGPHASE_CACHE_DIR"] = str(tmp_path_factory.mktemp("sgcache"))
    yield


@pytest.fixture(scope="session")
def squeezed_state():
    return sg.make_squeezed_vacuum(0.88, 60)


@pytest.fixture(scope="session")
def squeezed_dataset(squeezed_state):
    """Reference acquisition: 10^4 events at each of 30 phases, seed 7."""
    return sg.generate_dataset(squeezed_state, n_phases=30, events_per_phase=10000, seed=7)


@pytest.fixture(scope="session")
def squeezed_estimates(squeezed_dataset):
    out = {}
    for mode in ("cosine", "sine"):
        out[mode] = sg.estimate_distribution(squeezed_dataset, kind=mode, epsilon=0.4)
    return out


def brute_force_x_moment(amplitudes: np.ndarray, power: int, lo_phase: float = 0.0) -> float:
    """<x(phi)^power> straight from the ladder-operator matrix; independent oracle."""
    n = amplitudes.size
    a = np.diag(np.sqrt(np.arange(1, n)), k=1)
    x_op = (a * np.exp(-1j * lo_phase) + a.conj().T * np.exp(1j * lo_phase)) / np.sqrt(2.0)
    mat = np.linalg.matrix_power(x_op, power)
    return float(np.real(amplitudes.conj() @ mat @ amplitudes))
