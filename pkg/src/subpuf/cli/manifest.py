"""Run manifest written by every command.

The manifest is the only output that carries timestamps, so every other
file is byte-identical across re-runs with the same config and seeds.
"""
import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from subpuf.core.constants import SYSTEM_VERSION


class Failure(BaseModel):
    target: str
    error: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


class Manifest(BaseModel):
    command: str
    version: str = SYSTEM_VERSION
    config_hash: str
    seeds: List[int]
    overrides: Dict[str, Any] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
    failures: List[Failure] = Field(default_factory=list)
    started_at: str = Field(default_factory=lambda: _now())
    finished_at: Optional[str] = None

    def add_file(self, path: Path, root: Path) -> None:
        try:
            name = str(path.relative_to(root))
        except ValueError:
            name = str(path)
        if name not in self.files:
            self.files.append(name)

    def add_failure(self, target: str, error: Exception) -> None:
        self.failures.append(
            Failure(
                target=target,
                error=type(error).__name__,
                message=getattr(error, "message", str(error)),
                details=_jsonable(getattr(error, "details", {})),
            )
        )

    def write(self, path: Path) -> None:
        self.finished_at = _now()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _jsonable(details: Dict[str, Any]) -> Dict[str, Any]:
    return json.loads(json.dumps(details, default=str))


def flatten(overrides: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested override dict as dotted keys."""
    flat: Dict[str, Any] = {}
    for key, value in overrides.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def write_table(
    path: Path,
    rows: Sequence[Dict[str, Any]],
    output_format: str,
    columns: Sequence[str] = (),
) -> Path:
    """Write ``rows`` as ``<path>.csv`` or ``<path>.json``; returns the file written.

    The CSV header is ``columns`` followed by any other keys the rows carry,
    and is written even when there are no rows.
    """
    target = path.with_name(f"{path.name}.{output_format}")
    target.parent.mkdir(parents=True, exist_ok=True)
    if output_format == "json":
        target.write_text(json.dumps(list(rows), indent=2, sort_keys=True, default=str) + "\n")
        return target
    header: List[str] = list(columns)
    for row in rows:
        header.extend(k for k in row if k not in header)
    with open(target, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    return target


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return value
