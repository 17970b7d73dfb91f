import numpy as np
import pytest
from hypothesis import settings

from vqcollide.collision import TrajectoryContext, build_frames
from vqcollide.exact import propagate_exact
from vqcollide.pauli import StateVector

settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile("default")


def dense_matrices():
    """Single-qubit Pauli matrices written out by hand (oracle for the bitmask algebra)."""
    return {
        "I": np.array([[1, 0], [0, 1]], dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }


def dense_from_letters(letters, phase=1.0):
    """Kronecker product, leftmost letter = highest qubit."""
    mats = dense_matrices()
    m = np.array([[1.0 + 0j]])
    for ch in letters:
        m = np.kron(m, mats[ch])
    return phase * m


@pytest.fixture(scope="session")
def phi0():
    return StateVector.from_bitstring("1011")


@pytest.fixture(scope="session")
def ctx_10_16():
    return TrajectoryContext(10.0, 1.6, n_steps=1001)


@pytest.fixture(scope="session")
def frames_10_16(ctx_10_16):
    return build_frames(ctx_10_16)


@pytest.fixture(scope="session")
def exact_10_16(frames_10_16, ctx_10_16, phi0):
    return propagate_exact(frames_10_16, phi0, ctx_10_16.t_grid)
