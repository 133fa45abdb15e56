import numpy as np
import pytest

from fluxonium_noise import CircuitParams, diagonalize
from fluxonium_noise.config import (
    PAPER_CIRCUIT,
    PAPER_RESONATOR,
    baseline_channels,
    baseline_flux_grid,
)


@pytest.fixture(scope="session")
def paper_params() -> CircuitParams:
    return PAPER_CIRCUIT


@pytest.fixture(scope="session")
def paper_resonator():
    return PAPER_RESONATOR


@pytest.fixture(scope="session")
def channels_baseline():
    return baseline_channels()


@pytest.fixture(scope="session")
def sol_half_flux(paper_params):
    return diagonalize(paper_params, 6)


@pytest.fixture(scope="session")
def sol_integer_flux(paper_params):
    return diagonalize(paper_params.with_phi_ext(0.0), 6)


@pytest.fixture(scope="session")
def flux_grid():
    return baseline_flux_grid()


def gibbs(energies, temperature):
    from scipy.constants import h, k

    w = np.exp(-h * (energies - energies[0]) / (k * temperature))
    return w / w.sum()
