"""
pytest configuration and fixtures
"""

import tempfile
from pathlib import Path

import pytest

from eswap_sim.core.config_parser import ExperimentConfig, GridSpec
from eswap_sim.dynamics import NoiseModel, SpamModel
from eswap_sim.fockspace import canonical_spaces


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def sample_def_content():
    """Sample .def file content for tests"""
    return """[experiment]
name = qpt
encoding = fock
theta_list = 0, pi/4, pi/2
mode = exact
shots_per_point = 200
seed = 7
cutoff = 3

[noise]
preset = midpoint
t1_alice_us = 250
kerr_bob_hz = 4000

[spam]
prep_loss = 0.005
readout_error_a = 0.01

[grid]
radius = 2.0
points = 11
plane_points = 11

[budget]
exposure_time_us = 3.9
mechanisms = photon_loss, self_kerr, all
theta_c = pi/4
"""


@pytest.fixture
def sample_def_file(temp_dir, sample_def_content):
    """Create a sample .def file for tests"""
    def_file = temp_dir / "test.def"
    with open(def_file, "w") as f:
        f.write(sample_def_content)
    return def_file


@pytest.fixture
def small_spaces():
    """(ancilla, Alice, Bob) with three levels per cavity"""
    return canonical_spaces(3, 3)


@pytest.fixture
def cavity_spaces():
    """(Alice, Bob) with three levels per cavity"""
    return canonical_spaces(3, 3, with_ancilla=False)


@pytest.fixture
def quiet_config():
    """Factory for noiseless, SPAM-free configs on coarse grids"""

    def make(name, **overrides):
        values = dict(
            name=name,
            noise=NoiseModel.noiseless(),
            spam=SpamModel.none(),
            grid=GridSpec(radius=2.0, points=5, plane_points=5),
        )
        values.update(overrides)
        return ExperimentConfig(**values)

    return make
