import pytest

from temporal_encoder.model import BranchSet, DeviceParams


@pytest.fixture
def params():
    return DeviceParams()


@pytest.fixture
def no_leak():
    return DeviceParams(i_leak=0.0)


@pytest.fixture
def bset():
    return BranchSet()
