import pytest

from henonsiegel.renorm1d import newton_fixed_point


@pytest.fixture(scope="session")
def fixed_point():
    """Degree-80 fixed point with spectrum; shared across the suite."""
    return newton_fixed_point(degree=80, with_spectrum=True)
