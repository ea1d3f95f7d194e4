"""Run reports: line-oriented key-value sections plus embedded CSV tables."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from . import __version__

FLOAT_FORMAT = "%.10g"


def dataset_digest(path: str | Path) -> str:
    """SHA-256 of the input file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"refusing to report non-finite value {value}")
        return FLOAT_FORMAT % value
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def table_path(out: Path, name: str) -> Path:
    return out.with_name(f"{out.stem}.{name}.csv")


def render_table(frame: pd.DataFrame) -> str:
    numeric = frame.select_dtypes(include="number").to_numpy(dtype=float)
    if numeric.size and not np.all(np.isfinite(numeric)):
        raise ValueError("refusing to report a table with non-finite values")
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


@dataclass
class RunReport:
    """Everything needed to reproduce and audit one command invocation."""

    command: str
    dataset_path: str
    dataset_digest: str
    parameters: Mapping[str, Any]
    version: str = __version__
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)

    def add_section(self, name: str, values: Mapping[str, Any]) -> None:
        self.sections.setdefault(name, {}).update(values)

    def add_table(self, name: str, frame: pd.DataFrame) -> None:
        self.tables[name] = frame

    def render(self, out: Path | None = None) -> str:
        lines = [
            "# potcore run report",
            f"version = {self.version}",
            f"command = {self.command}",
            f"dataset.path = {self.dataset_path}",
            f"dataset.sha256 = {self.dataset_digest}",
        ]
        for key, value in self.parameters.items():
            lines.append(f"param.{key} = {format_value(value)}")
        for name, values in self.sections.items():
            lines.append("")
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {format_value(value)}" for key, value in values.items())
        if out is not None and self.tables:
            lines.append("")
            lines.append("[files]")
            lines.extend(f"{name} = {table_path(out, name).name}" for name in self.tables)
        for name, frame in self.tables.items():
            lines.append("")
            lines.append(f"[table {name}]")
            lines.append(render_table(frame).rstrip("\n"))
        return "\n".join(lines) + "\n"

    def write(self, out: Path) -> list[Path]:
        """Write the report to ``out`` and each table to a sibling CSV file."""
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(self.render(out))
        written = [out]
        for name, frame in self.tables.items():
            path = table_path(out, name)
            path.write_text(render_table(frame))
            written.append(path)
        return written
