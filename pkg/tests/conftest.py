import numpy as np
import pytest

from zps.states import make_ccs, make_coherent, make_custom, make_dsq, make_fock, make_superposition, make_thermal

INTRO = [(1, 1.0), (5, 1.0)]
PSI_PRIME = [(1, 1 / np.sqrt(10)), (5, 3 / np.sqrt(10))]
COUNTEREXAMPLE = [0.04, 0, 0.48, 0, 0, 0, 0.48]


def battery():
    """Named non-vacuum states spanning sub-, super- and Poissonian statistics."""
    return {
        "coherent": make_coherent(2.0),
        "fock3": make_fock(3),
        "thermal": make_thermal(1.5),
        "intro": make_superposition(INTRO),
        "psi_prime": make_superposition(PSI_PRIME),
        "counterexample": make_custom(COUNTEREXAMPLE),
        "dsq": make_dsq(1.0, 1.0),
        "ccs": make_ccs(0.75, 1.0),
    }


@pytest.fixture(scope="session")
def states():
    return battery()


@pytest.fixture
def intro():
    return make_superposition(INTRO)


@pytest.fixture
def psi_prime():
    return make_superposition(PSI_PRIME)
