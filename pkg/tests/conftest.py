import pytest

from hlslab.quotients import ApproximatedGroup


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("quotient-cache")


@pytest.fixture(scope="session")
def fd(cache_dir):
    return ApproximatedGroup("fd", cache_dir=cache_dir)


@pytest.fixture(scope="session")
def congruence(cache_dir):
    return ApproximatedGroup("congruence", cache_dir=cache_dir)


@pytest.fixture(scope="session")
def cyclic(cache_dir):
    return ApproximatedGroup("cyclic", cache_dir=cache_dir)
