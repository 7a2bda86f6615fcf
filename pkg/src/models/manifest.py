"""
Batch manifest schemas.

Manifests hold only deterministic content (paths relative to the manifest,
content hashes, derived numbers); wall-clock timings live in a sidecar.
"""

from typing import Any, Dict, List, Optional

from pydantic import Field

from models.params import StrictModel

MANIFEST_VERSION = 1


class OutputFile(StrictModel):
    path: str = Field(..., description="Path relative to the manifest directory")
    sha256: str


class ItemError(StrictModel):
    code: str
    message: str


class ManifestEntry(StrictModel):
    """One batch item: its input, its outputs and derived facts"""

    name: str
    source: Optional[str] = None
    outputs: List[OutputFile] = Field(default_factory=list)
    info: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[ItemError] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class Manifest(StrictModel):
    command: str
    version: int = MANIFEST_VERSION
    parameters: Dict[str, Any] = Field(default_factory=dict)
    entries: List[ManifestEntry] = Field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(1 for entry in self.entries if not entry.ok)

    def outputs(self) -> List[OutputFile]:
        return [output for entry in self.entries for output in entry.outputs]
