"""Reconfiguration map and discard mask, with their text format.

Both are server-side enrollment artifacts. The text format is a versioned
header of ``key: value`` lines followed by ``data:`` and the row-major flag
vector as run lengths, alternating unset/set and starting with the unset run
(which may be 0).
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from subpuf.core.constants import MAP_FORMAT_MAGIC, MAP_FORMAT_VERSION, PROVENANCES
from subpuf.core.exceptions import ArtifactNotFoundError, DimensionError, SerializationError

_RUNS_PER_LINE = 16


def encode_runs(flags: np.ndarray) -> List[int]:
    flat = np.asarray(flags, dtype=bool).reshape(-1)
    if flat.size == 0:
        return [0]
    edges = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate(([0], edges, [flat.size]))
    runs = np.diff(bounds).tolist()
    return ([0] + runs) if flat[0] else runs


def decode_runs(runs: List[int], size: int) -> np.ndarray:
    if any(r < 0 for r in runs):
        raise SerializationError("Negative run length in map data")
    if sum(runs) != size:
        raise SerializationError(
            "Run lengths do not cover the array", details={"covered": sum(runs), "size": size}
        )
    values = np.arange(len(runs)) % 2 == 1
    return np.repeat(values, runs)


@dataclass(eq=False)
class _FlagMap:
    flags_name = "flags"
    kind = "map"

    chip_id: str
    header: Dict[str, str] = field(default_factory=dict)

    @property
    def flags(self) -> np.ndarray:
        return getattr(self, self.flags_name)

    @property
    def shape(self):
        return self.flags.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def fraction(self) -> float:
        return self.count / max(self.flags.size, 1)

    def _extra_header(self) -> Dict[str, str]:
        return {}

    def dumps(self) -> str:
        rows, cols = self.shape
        lines = [
            f"{MAP_FORMAT_MAGIC} {MAP_FORMAT_VERSION}",
            f"kind: {self.kind}",
            f"chip_id: {self.chip_id}",
            f"rows: {rows}",
            f"cols: {cols}",
        ]
        for key, value in {**self._extra_header(), **self.header}.items():
            lines.append(f"{key}: {value}")
        lines.append(f"count: {self.count}")
        lines.append("data:")
        runs = encode_runs(self.flags)
        for i in range(0, len(runs), _RUNS_PER_LINE):
            lines.append(" ".join(str(r) for r in runs[i:i + _RUNS_PER_LINE]))
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())


def _parse(text: str, kind: str) -> tuple[Dict[str, str], np.ndarray]:
    lines = text.splitlines()
    if not lines:
        raise SerializationError("Empty map file")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != MAP_FORMAT_MAGIC:
        raise SerializationError("Not a map file", details={"first_line": lines[0]})
    if magic[1] != str(MAP_FORMAT_VERSION):
        raise SerializationError(
            "Unsupported map format version", details={"version": magic[1]}
        )
    header: Dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        if line.strip() == "data:":
            body_start = i + 1
            break
        key, sep, value = line.partition(":")
        if not sep:
            raise SerializationError("Malformed header line", details={"line": line})
        header[key.strip()] = value.strip()
    if body_start is None:
        raise SerializationError("Map file has no data section")
    if header.get("kind") != kind:
        raise SerializationError(
            f"Expected a {kind} file", details={"kind": header.get("kind")}
        )
    try:
        rows, cols = int(header["rows"]), int(header["cols"])
        runs = [int(tok) for line in lines[body_start:] for tok in line.split()]
    except (KeyError, ValueError) as e:
        raise SerializationError("Malformed map file", details={"error": str(e)})
    flags = decode_runs(runs, rows * cols).reshape(rows, cols)
    if "count" in header and int(header["count"]) != int(flags.sum()):
        raise SerializationError("Flag count does not match data")
    return header, flags


def _read(path: Union[str, Path]) -> str:
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"Map file not found: {path}", details={"path": str(path)})
    return path.read_text()


_RESERVED = {"kind", "chip_id", "rows", "cols", "count", "provenance"}


@dataclass(eq=False)
class RMap(_FlagMap):
    """Per-cell reconfigure flags and how they were found."""

    flags_name = "reconfigure"
    kind = "rmap"

    reconfigure: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=bool))
    provenance: str = "manual"

    def __post_init__(self):
        self.reconfigure = np.asarray(self.reconfigure, dtype=bool)
        if self.reconfigure.ndim != 2:
            raise DimensionError("R-MAP must be two-dimensional")
        if self.provenance not in PROVENANCES:
            raise SerializationError(
                "Unknown R-MAP provenance", details={"provenance": self.provenance}
            )

    def _extra_header(self) -> Dict[str, str]:
        return {"provenance": self.provenance}

    @classmethod
    def empty(cls, chip_id: str, shape, provenance: str = "manual") -> "RMap":
        return cls(chip_id=chip_id, reconfigure=np.zeros(shape, dtype=bool), provenance=provenance)

    @classmethod
    def loads(cls, text: str) -> "RMap":
        header, flags = _parse(text, cls.kind)
        return cls(
            chip_id=header.get("chip_id", ""),
            reconfigure=flags,
            provenance=header.get("provenance", "manual"),
            header={k: v for k, v in header.items() if k not in _RESERVED},
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RMap":
        return cls.loads(_read(path))

    def union(self, other: Union["RMap", np.ndarray]) -> "RMap":
        flags = np.asarray(getattr(other, "reconfigure", other), dtype=bool)
        return RMap(
            chip_id=self.chip_id,
            reconfigure=self.reconfigure | flags,
            provenance=self.provenance,
            header=dict(self.header),
        )


@dataclass(eq=False)
class Mask(_FlagMap):
    """Per-cell discard flags; masked cells leave every metric denominator."""

    flags_name = "discard"
    kind = "mask"

    discard: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=bool))

    def __post_init__(self):
        self.discard = np.asarray(self.discard, dtype=bool)
        if self.discard.ndim != 2:
            raise DimensionError("Mask must be two-dimensional")

    @classmethod
    def empty(cls, chip_id: str, shape) -> "Mask":
        return cls(chip_id=chip_id, discard=np.zeros(shape, dtype=bool))

    @classmethod
    def loads(cls, text: str) -> "Mask":
        header, flags = _parse(text, cls.kind)
        return cls(
            chip_id=header.get("chip_id", ""),
            discard=flags,
            header={k: v for k, v in header.items() if k not in _RESERVED},
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Mask":
        return cls.loads(_read(path))


def mask_array(mask: Optional[Union[Mask, np.ndarray]]) -> Optional[np.ndarray]:
    if mask is None:
        return None
    return np.asarray(getattr(mask, "discard", mask), dtype=bool)
