import pytest

from dysfluent.service import DEFAULT_INVENTORY, load_inventory_bundle
from dysfluent.synthesis import make_template_encoder


@pytest.fixture(scope="session")
def bundle():
    return load_inventory_bundle(DEFAULT_INVENTORY)


@pytest.fixture(scope="session")
def inv(bundle):
    return bundle[0]


@pytest.fixture(scope="session")
def tones(bundle):
    return bundle[1]


@pytest.fixture(scope="session")
def encoder(inv, tones):
    return make_template_encoder(inv, tones)
