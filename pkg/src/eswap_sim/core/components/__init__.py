"""
Composition components: output handling and device parameter tables
"""

from .file_manager import FileManager, RunManifest
from .parameter_tables import noise_preset, preparation_parameters

__all__ = ["FileManager", "RunManifest", "noise_preset", "preparation_parameters"]
