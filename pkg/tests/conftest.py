import pytest

from apktriage.catalogs import load_default_catalogs


@pytest.fixture(scope="session")
def catalogs():
    return load_default_catalogs()


@pytest.fixture(scope="session")
def feature_catalog(catalogs):
    return catalogs.features


@pytest.fixture(scope="session")
def rules(catalogs):
    return catalogs.categories


@pytest.fixture(scope="session")
def api_map(catalogs):
    return catalogs.api_map
