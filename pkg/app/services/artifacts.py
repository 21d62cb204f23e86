"""Artifact writers that stamp every output with tool version, seed and input digests."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.config import TOOL_NAME, TOOL_VERSION

logger = logging.getLogger(__name__)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    tool: str = TOOL_NAME
    version: str = TOOL_VERSION
    seed: int
    inputs: Dict[str, str] = Field(default_factory=dict)

    @classmethod
    def for_inputs(cls, seed: int, paths: Mapping[str, Optional[Path]]) -> "Provenance":
        """Digest every named input file that is present."""
        inputs = {name: sha256_file(Path(p)) for name, p in sorted(paths.items()) if p is not None}
        return cls(seed=seed, inputs=inputs)

    def header_lines(self) -> list:
        lines = [f"# tool={self.tool}", f"# version={self.version}", f"# seed={self.seed}"]
        lines += [f"# sha256:{name}={digest}" for name, digest in sorted(self.inputs.items())]
        return lines

    def as_dict(self) -> Dict[str, Any]:
        return {"tool": self.tool, "version": self.version, "seed": self.seed, "inputs": dict(sorted(self.inputs.items()))}


def write_csv(frame: pd.DataFrame, path: Path, provenance: Optional[Provenance] = None) -> Path:
    """CSV with `# key=value` provenance comment lines ahead of the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if provenance is not None:
            handle.write("\n".join(provenance.header_lines()) + "\n")
        frame.to_csv(handle, index=False, lineterminator="\n", float_format="%.10g")
    logger.info(f"✓ Wrote {path.name} ({len(frame)} rows)")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a CSV written by `write_csv`, skipping the leading provenance lines."""
    skip = 0
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            skip += 1
    return pd.read_csv(path, skiprows=skip, dtype=str, keep_default_na=False)


def write_json(payload: Dict[str, Any], path: Path, provenance: Optional[Provenance] = None) -> Path:
    """Sorted, indented JSON so identical payloads give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    if provenance is not None:
        body["provenance"] = provenance.as_dict()
    path.write_text(json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    logger.info(f"✓ Wrote {path.name}")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
