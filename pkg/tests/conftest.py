import numpy as np
import pytest

from pauli_forge.core import ObservableBasis, PureState


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def haar_state(n, rng):
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState.from_vector(z)


def haar_basis(n, rng, label="random"):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return ObservableBasis(label, q)
