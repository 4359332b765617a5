"""
src/eswap_sim/core/components/file_manager.py

Output directory handling: CSV and JSON writers and the run manifest
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "ESWAP_SIM_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "eswap_output"
MANIFEST_NAME = "manifest.json"


def default_output_dir(experiment: str) -> Path:
    """<ESWAP_SIM_OUTPUT_ROOT or ./eswap_output>/<experiment>"""
    root = os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)
    return Path(root) / experiment


def to_jsonable(value: Any) -> Any:
    """Convert numpy and complex values to JSON types; complex arrays become re/im lists"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": value.real.tolist(), "im": value.imag.tolist()}
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class RunManifest:
    """What a command ran with and what it produced"""

    experiment: str
    config: Dict[str, Any]
    config_hash: str
    code_version: str
    seeds: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    files: List[str] = field(default_factory=list)
    validations: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.validations.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "seeds": self.seeds,
            "wall_time": self.wall_time,
            "files": sorted(self.files),
            "validations": self.validations,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "RunManifest":
        return cls(
            experiment=payload["experiment"],
            config=payload["config"],
            config_hash=payload["config_hash"],
            code_version=payload["code_version"],
            seeds=payload.get("seeds", {}),
            wall_time=payload.get("wall_time", 0.0),
            files=list(payload.get("files", [])),
            validations=dict(payload.get("validations", {})),
        )


class FileManager:
    """Handles output files and naming conventions for one run"""

    def __init__(self, output_dir: str, basename: str) -> None:
        self.output_dir = Path(output_dir).resolve()
        self.basename = basename
        self.written: List[str] = []

        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, filename: str) -> Path:
        """Path inside the output directory; anything escaping it is rejected"""
        path = (self.output_dir / filename).resolve()
        if self.output_dir not in path.parents:
            raise ValueError(f"Refusing to write outside {self.output_dir}: {filename}")
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def get_filename(self, stem: str, filetype: str, tag: Optional[str] = None) -> str:
        """Generate '<basename>_<stem>[_<tag>].<filetype>'"""
        if tag:
            return f"{self.basename}_{stem}_{tag}.{filetype}"
        return f"{self.basename}_{stem}.{filetype}"

    def _record(self, path: Path) -> str:
        relative = str(path.relative_to(self.output_dir))
        if relative not in self.written:
            self.written.append(relative)
        logger.debug("Wrote %s", path)
        return str(path)

    def write_csv(
        self,
        filename: str,
        rows: Sequence[Dict[str, Any]],
        fieldnames: Optional[Sequence[str]] = None,
    ) -> str:
        """Write rows with csv.DictWriter; columns follow the first row unless given"""
        path = self.path_for(filename)
        if fieldnames is None:
            fieldnames = list(rows[0].keys()) if rows else []
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(fieldnames))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: to_jsonable(v) for k, v in row.items()})
        return self._record(path)

    def write_json(self, filename: str, payload: Any) -> str:
        """Write sorted-key JSON"""
        path = self.path_for(filename)
        with open(path, "w") as f:
            json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
            f.write("\n")
        return self._record(path)

    def write_manifest(self, manifest: RunManifest) -> str:
        manifest.files = [f for f in self.written if f != MANIFEST_NAME]
        return self.write_json(MANIFEST_NAME, manifest.to_dict())

    def read_manifest(self) -> RunManifest:
        path = self.output_dir / MANIFEST_NAME
        if not path.exists():
            raise FileNotFoundError(f"Manifest not found: {path}")
        with open(path, "r") as f:
            return RunManifest.from_dict(json.load(f))

    def list_outputs(self) -> List[str]:
        return list(self.written)
