import pytest

from lawtraverse.lawcore import LawFamily, PowerLaw

# boundary of the worked two-law family, from brentq on the slope difference
WORKED_BOUNDARY = 0.5501848201150596
# quadrature of the pointwise-cheapest |d inverse/dE| over [0.3, 0.85] and [0.4, 0.85]
WORKED_COMPUTE_TO_0_3 = 2.803360846384387
WORKED_COMPUTE_TO_0_4 = 1.4700275130510536


@pytest.fixture
def law_a():
    return PowerLaw(0.8, 1.0, 0.1, 1.0, "A")


@pytest.fixture
def law_b():
    return PowerLaw(0.5, 2.0, 0.35, 1.0, "B")


@pytest.fixture
def worked_family(law_a, law_b):
    # B is the "larger" shape: it is followed first
    return LawFamily.from_laws([law_b, law_a], shape_parameter="patch")
