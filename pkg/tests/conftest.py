import sys
from pathlib import Path

import pytest
from hypothesis import settings

from relkit.algebra import FiniteAlgebra, Operation, product

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def make_s2():
    return FiniteAlgebra("S2", 2, (Operation("meet", 2, (0, 0, 0, 1)),))


def make_z2m():
    return FiniteAlgebra("Z2m", 2, (Operation("m", 3, (0, 1, 1, 0, 1, 0, 0, 1)),))


@pytest.fixture
def s2():
    return make_s2()


@pytest.fixture
def z2m():
    return make_z2m()


@pytest.fixture
def s2sq():
    return product([make_s2(), make_s2()])
