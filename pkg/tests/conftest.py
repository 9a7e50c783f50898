import pytest
from hypothesis import settings

from spopo.cavity import CavityParams
from spopo.config import default_config, make_basis, make_grid

settings.register_profile("spopo", deadline=None)
settings.load_profile("spopo")


@pytest.fixture(scope="session")
def default_cfg():
    return default_config()


@pytest.fixture(scope="session")
def default_grid(default_cfg):
    return make_grid(default_cfg)


@pytest.fixture(scope="session")
def calibrated_basis(default_cfg):
    """Supermode basis of the default (calibrated) kernel; one SVD per session."""
    return make_basis(default_cfg)


@pytest.fixture(scope="session")
def measured_cavity():
    """Cavity with the loss budget that reproduces the measured finesse of 24."""
    return CavityParams(intracavity_loss=0.06)
