import numpy as np
import pytest

from nsselab import hilbert, model


@pytest.fixture
def ex3():
    """Thermal damped oscillator with A=1, nu=0.5 on 20 levels."""
    return model.damped(1.0, 1.0, 0.5, 20)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def free_model(dim, H=None):
    """Channel-free model with Hamiltonian ``H`` (default ``N``)."""
    if H is None:
        H = hilbert.ladder_ops(dim)[2]
    return model.build_model(dim, H, [])
