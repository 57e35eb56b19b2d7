import numpy as np
import pytest

from qnklab.families import haar_unitary

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unitary(dim, rng):
    return haar_unitary(dim, rng)


def weyl_pair(d):
    """Cyclic shift and clock matrices with Z X = exp(2 pi i / d) X Z."""
    shift = np.roll(np.eye(d), 1, axis=0).astype(complex)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return shift, clock
