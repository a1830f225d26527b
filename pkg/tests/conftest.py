import pytest

from m3dram.circuit import SolverConfig
from m3dram.config import load_orgs, load_reference
from m3dram.geometry import TechNode
from m3dram.pipeline import calibrate_all, derive_org


@pytest.fixture(scope="session")
def reference_rows():
    return load_reference()


@pytest.fixture(scope="session")
def orgs():
    return load_orgs()


@pytest.fixture(scope="session")
def calibration(reference_rows):
    """One full calibration per test session; everything downstream shares it."""
    return calibrate_all(reference_rows)


@pytest.fixture(scope="session")
def bundle(calibration):
    return calibration[0]


@pytest.fixture(scope="session")
def calibration_report(calibration):
    return calibration[1]


@pytest.fixture(scope="session")
def models(bundle, orgs):
    """Derived OrgModel for every bundled organization."""
    tech = TechNode()
    cfg = SolverConfig()
    return {name: derive_org(spec, bundle, tech, cfg)
            for name, spec in orgs.items()}
