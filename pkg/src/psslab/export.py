"""Deterministic on-disk artifacts: CSV fields, JSON reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .solver import Trajectory

__all__ = ["ReportBundle", "ExportError", "write_csv", "write_json", "export_artifacts", "curvature_histogram"]

FLOAT_FMT = "%.17g"


class ExportError(OSError):
    pass


@dataclass
class ReportBundle:
    command: str
    provenance: dict[str, Any]
    monitor: dict[str, Any] | None = None
    geometry: list[dict[str, Any]] = field(default_factory=list)
    connection: dict[str, Any] | None = None
    checks: list[dict[str, Any]] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)
    exit_code: int = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "exit_code": self.exit_code,
            "notices": list(self.notices),
            "monitor": self.monitor,
            "geometry": self.geometry,
            "connection": self.connection,
            "checks": self.checks,
            "provenance": self.provenance,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, payload: Any) -> Path:
    try:
        path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def write_csv(path: Path, header: Iterable[str], columns: Iterable[np.ndarray]) -> Path:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",", newline="\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def curvature_histogram(values: np.ndarray, bins: int = 41, half_width: float = 1e-6):
    """Histogram of K values centred on -1 (plot-ready)."""
    values = np.asarray(values, dtype=float)
    edges = np.linspace(-1.0 - half_width, -1.0 + half_width, bins + 1)
    counts, edges = np.histogram(np.clip(values, edges[0], edges[-1]), bins=edges)
    return edges[:-1], edges[1:], counts


def export_artifacts(
    out_dir: str | Path,
    bundle: ReportBundle,
    trajectory: Trajectory | None = None,
    extra_csv: dict[str, tuple[list[str], list[np.ndarray]]] | None = None,
) -> list[Path]:
    """Write the bundle and any numeric payloads; returns the files written.

    Numeric files carry no timestamps, so identical configurations give
    byte-identical CSVs.  Run metadata lives only in ``report.json``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    if trajectory is not None:
        fdir = out / "frames"
        fdir.mkdir(exist_ok=True)
        names = []
        for i, fr in enumerate(trajectory.frames):
            name = f"frame_{i:05d}.csv"
            written.append(write_csv(fdir / name, ["x", "value"], [fr.x, fr.u]))
            names.append(name)
        idx = out / "index.csv"
        with open(idx, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("frame,t,file\n")
            for i, (fr, name) in enumerate(zip(trajectory.frames, names)):
                fh.write(f"{i},{FLOAT_FMT % fr.t},frames/{name}\n")
        written.append(idx)
        t = np.concatenate([np.full(fr.x.size, fr.t) for fr in trajectory.frames])
        x = np.concatenate([fr.x for fr in trajectory.frames])
        u = np.concatenate([fr.u for fr in trajectory.frames])
        written.append(write_csv(out / "spacetime.csv", ["t", "x", "value"], [t, x, u]))
    for name, (header, cols) in (extra_csv or {}).items():
        written.append(write_csv(out / name, header, cols))
    written.append(write_json(out / "report.json", bundle.as_dict()))
    return written
