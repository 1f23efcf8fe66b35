import pytest

from badapprox.numberfield import preset_field


@pytest.fixture(scope="session")
def rationals():
    return preset_field("rationals")


@pytest.fixture(scope="session")
def sqrt2():
    return preset_field("sqrt2")


@pytest.fixture(scope="session")
def gaussian():
    return preset_field("gaussian")


@pytest.fixture(scope="session")
def quartic():
    return preset_field("sqrt2-sqrt3")
