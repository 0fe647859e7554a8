import numpy as np
import pytest

from spintomo.states import random_state
from spintomo.tomography import random_directions


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def brute_tomogram(matrix, projectors):
    """tr(rho P_1 (x) ... (x) P_N) by explicit Kronecker products."""
    p = projectors[0]
    for q in projectors[1:]:
        p = np.kron(p, q)
    return float(np.real(np.trace(matrix @ p)))


def eigenprojector(op, value):
    """Projector onto the eigenspace of Hermitian *op* with eigenvalue *value*."""
    w, v = np.linalg.eigh(op)
    cols = v[:, np.abs(w - value) < 1e-8]
    return cols @ cols.conj().T


def random_two_qubit(rng):
    return random_state(4, rng)


def random_dir_pair(rng):
    return tuple(random_directions(rng, 2))
