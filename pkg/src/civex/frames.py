"""Small immutable column table with a bit-exact serialization contract.

The canonical text form feeds provenance hashing, so it is defined down to
the byte: UTF-8, line 1 is the comma-joined header, one comma-joined row per
line in generation order, floats rendered as their shortest round-trip
decimal (Python ``repr``), LF line endings, no trailing newline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = ["Frame", "FrameError"]


class FrameError(ValueError):
    """Malformed table: ragged rows, NaNs, duplicate or unknown columns."""


def _format_value(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class Frame:
    columns: tuple[str, ...]
    data: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise FrameError(f"expected 2-D data, got shape {arr.shape}")
        if arr.shape[1] != len(self.columns):
            raise FrameError(
                f"{len(self.columns)} columns declared but rows have {arr.shape[1]} values"
            )
        if len(set(self.columns)) != len(self.columns):
            raise FrameError("duplicate column names")
        if np.isnan(arr).any():
            raise FrameError("missing values are not allowed")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "data", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.columns == other.columns and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.columns, self.data.tobytes()))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise FrameError(f"no column named '{name}'") from None
        return self.data[:, idx]

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def canonical_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.data:
            lines.append(",".join(_format_value(v) for v in row))
        return "\n".join(lines)

    def canonical_bytes(self) -> bytes:
        return self.canonical_text().encode("utf-8")

    @classmethod
    def from_canonical_text(cls, text: str) -> "Frame":
        lines = text.split("\n")
        if not lines or not lines[0]:
            raise FrameError("empty canonical text")
        columns = tuple(lines[0].split(","))
        rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
        return cls(columns=columns, data=data)

    @classmethod
    def from_canonical_bytes(cls, blob: bytes) -> "Frame":
        return cls.from_canonical_text(blob.decode("utf-8"))

    def to_json_obj(self) -> dict:
        return {"columns": list(self.columns), "rows": self.data.tolist()}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Frame":
        rows = obj["rows"]
        columns = tuple(obj["columns"])
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
        return cls(columns=columns, data=data)

    @classmethod
    def from_columns(cls, named: Sequence[tuple[str, Iterable[float]]]) -> "Frame":
        columns = tuple(name for name, _ in named)
        data = np.column_stack([np.asarray(vals, dtype=np.float64) for _, vals in named])
        return cls(columns=columns, data=data)
