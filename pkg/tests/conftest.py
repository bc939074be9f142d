import numpy as np
import pytest

from tranship.measures import SignedAtomMeasure


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_dipole():
    return SignedAtomMeasure.from_atoms([((0.0, 0.0), 1.0), ((1.0, 0.0), -1.0)])


@pytest.fixture
def reconnection():
    """Two dipoles given as long pairs whose optimal reconnection is short:
    (0,0)->(10,0) and (10,1)->(0,1) reconnect at cost 2."""
    return SignedAtomMeasure.from_atoms(
        [((0.0, 0.0), 1.0), ((10.0, 0.0), -1.0), ((10.0, 1.0), 1.0), ((0.0, 1.0), -1.0)]
    )
