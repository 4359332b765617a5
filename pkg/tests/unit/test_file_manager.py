#!/usr/bin/env python3
"""
tests/unit/test_file_manager.py

Unit tests for FileManager, RunManifest and the parameter tables
"""

import csv
import json
import math

import numpy as np
import pytest

from eswap_sim.core.components.file_manager import (
    MANIFEST_NAME,
    OUTPUT_ROOT_ENV,
    FileManager,
    RunManifest,
    default_output_dir,
    to_jsonable,
)
from eswap_sim.core.components.parameter_tables import (
    PRESETS,
    coherence_values,
    dispersive_shift,
    noise_preset,
    preparation_parameters,
    self_kerr,
)


def _manifest(**overrides):
    values = dict(
        experiment="kerr",
        config={"name": "kerr"},
        config_hash="abc",
        code_version="0.1.0",
    )
    values.update(overrides)
    return RunManifest(**values)


class TestFileManager:
    """Test FileManager functionality"""

    def test_initialization(self, temp_dir):
        """Test the output directory is created"""
        target = temp_dir / "nested" / "out"
        fm = FileManager(str(target), "qpt")

        assert target.is_dir()
        assert fm.output_dir == target.resolve()
        assert fm.list_outputs() == []

    def test_get_filename(self, temp_dir):
        """Test '<basename>_<stem>[_<tag>].<ext>' naming"""
        fm = FileManager(str(temp_dir), "qpt")

        assert fm.get_filename("ptm", "csv") == "qpt_ptm.csv"
        assert fm.get_filename("ptm", "csv", "theta_0p25pi") == "qpt_ptm_theta_0p25pi.csv"

    def test_path_escape_rejected(self, temp_dir):
        """Test paths leaving the output directory"""
        fm = FileManager(str(temp_dir / "out"), "qpt")
        with pytest.raises(ValueError, match="outside"):
            fm.path_for("../escape.csv")

    def test_write_csv(self, temp_dir):
        """Test CSV rows with numpy values"""
        fm = FileManager(str(temp_dir), "kerr")
        rows = [{"n": 0, "value": 0.5}, {"n": 1, "value": np.float64(0.25)}]
        path = fm.write_csv("kerr_rows.csv", rows)

        with open(path, newline="") as f:
            read = list(csv.DictReader(f))
        assert [r["n"] for r in read] == ["0", "1"]
        assert float(read[1]["value"]) == pytest.approx(0.25)
        assert fm.list_outputs() == ["kerr_rows.csv"]

    def test_write_empty_csv(self, temp_dir):
        """Test an empty row list writes an empty file"""
        fm = FileManager(str(temp_dir), "kerr")
        path = fm.write_csv("empty.csv", [])
        with open(path) as f:
            assert f.read().strip() == ""

    def test_write_json_sorted(self, temp_dir):
        """Test JSON output is sorted and numpy-safe"""
        fm = FileManager(str(temp_dir), "qpt")
        path = fm.write_json("summary.json", {"b": np.int64(2), "a": np.arange(2)})

        with open(path) as f:
            text = f.read()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [0, 1], "b": 2}

    def test_manifest_round_trip(self, temp_dir):
        """Test write_manifest lists the other outputs and reads back"""
        fm = FileManager(str(temp_dir), "kerr")
        fm.write_json("kerr_summary.json", {"ok": True})
        fm.write_csv("kerr_rows.csv", [{"n": 0}])
        fm.write_manifest(_manifest(validations={"unitary": True}))

        manifest = fm.read_manifest()
        assert manifest.files == ["kerr_rows.csv", "kerr_summary.json"]
        assert manifest.passed
        assert MANIFEST_NAME in fm.list_outputs()

    def test_read_missing_manifest(self, temp_dir):
        """Test reading a manifest that was never written"""
        with pytest.raises(FileNotFoundError, match="Manifest not found"):
            FileManager(str(temp_dir), "kerr").read_manifest()

    def test_default_output_dir(self, monkeypatch, temp_dir):
        """Test the output root comes from the environment"""
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(temp_dir))
        assert default_output_dir("kerr") == temp_dir / "kerr"
        monkeypatch.delenv(OUTPUT_ROOT_ENV)
        assert str(default_output_dir("kerr")) == "eswap_output/kerr"


class TestJsonConversion:
    """Test numpy and complex conversion"""

    def test_complex_scalar(self):
        """Test complex numbers become re/im pairs"""
        assert to_jsonable(1 + 2j) == {"re": 1.0, "im": 2.0}

    def test_complex_array(self):
        """Test complex arrays become re/im lists"""
        assert to_jsonable(np.array([1j, 2])) == {"re": [0.0, 2.0], "im": [1.0, 0.0]}

    def test_nested(self):
        """Test nested containers and numpy scalars"""
        value = {"flags": (np.bool_(True),), 3: [np.float32(0.5)]}
        assert to_jsonable(value) == {"flags": [True], "3": [0.5]}


class TestRunManifest:
    """Test manifest pass/fail and payloads"""

    def test_passed(self):
        """Test passed requires every validation"""
        assert _manifest().passed
        assert not _manifest(validations={"a": True, "b": False}).passed

    def test_round_trip(self):
        """Test to_dict/from_dict"""
        manifest = _manifest(seeds={"master": 1}, files=["b", "a"], wall_time=1.5)
        restored = RunManifest.from_dict(manifest.to_dict())
        assert restored.files == ["a", "b"]
        assert restored.seeds == {"master": 1}
        assert restored.wall_time == pytest.approx(1.5)


class TestParameterTables:
    """Test device tables and noise presets"""

    def test_coherence_midpoint(self):
        """Test midpoint coherence values in seconds"""
        values = coherence_values("alice")
        assert values["t1"] == pytest.approx(250e-6)
        assert values["t2"] == pytest.approx(375e-6)
        assert values["thermal"] == pytest.approx(0.005)

    def test_coherence_corners(self):
        """Test best and worst corners of the ranges"""
        assert coherence_values("bob", "best")["t1"] == pytest.approx(350e-6)
        assert coherence_values("bob", "worst")["t1"] == pytest.approx(300e-6)
        assert coherence_values("qb", "best")["thermal"] == 0.0
        assert coherence_values("qb", "worst")["thermal"] == pytest.approx(0.04)

    def test_unknown_preset_and_element(self):
        """Test lookups outside the tables"""
        with pytest.raises(ValueError, match="preset"):
            coherence_values("alice", "typical")
        with pytest.raises(ValueError, match="element"):
            coherence_values("charlie")

    def test_hamiltonian_values(self):
        """Test dispersive shift and self-Kerr in rad/s"""
        assert dispersive_shift("bob", "qb") == pytest.approx(2 * math.pi * 1.26e6)
        assert self_kerr("alice") == pytest.approx(2 * math.pi * 6e3)
        with pytest.raises(ValueError, match="No dispersive shift"):
            dispersive_shift("alice", "qb")

    @pytest.mark.parametrize("preset", PRESETS)
    def test_presets_are_valid(self, preset):
        """Test every preset builds a valid noise model"""
        noise = noise_preset(preset)
        assert noise.is_dissipative
        assert noise.chi_qb_bob == pytest.approx(2 * math.pi * 1.26e6)

    def test_preset_overrides(self):
        """Test overrides replace tabulated values"""
        noise = noise_preset("worst", kerr_alice=0.0)
        assert noise.kerr_alice == 0.0
        assert noise.t1_alice == pytest.approx(200e-6)

    def test_preparation_parameters(self):
        """Test preparation ancilla T2 and dispersive shifts"""
        t2, chi = preparation_parameters()
        assert t2 == pytest.approx((7.5e-6, 30e-6))
        assert chi == pytest.approx((2 * math.pi * 0.79e6, 2 * math.pi * 1.26e6))
