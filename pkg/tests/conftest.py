import pytest

from msflab.msf import TLESettings, settle_transient
from msflab.oscillator import ImpactOscillatorParams

ELASTIC = ImpactOscillatorParams(zeta=0.05, eta=0.712, f=1.0, x_w=2.0, R=1.0)
INELASTIC = ImpactOscillatorParams(zeta=0.05, eta=0.5975, f=1.0, x_w=1.5, R=0.9)


@pytest.fixture(scope="session")
def elastic() -> ImpactOscillatorParams:
    return ELASTIC


@pytest.fixture(scope="session")
def inelastic() -> ImpactOscillatorParams:
    return INELASTIC


@pytest.fixture(scope="session")
def elastic_base():
    # Settling the 500-period transient costs about a second; share it.
    return settle_transient(ELASTIC, TLESettings())


@pytest.fixture(scope="session")
def inelastic_base():
    return settle_transient(INELASTIC, TLESettings())
