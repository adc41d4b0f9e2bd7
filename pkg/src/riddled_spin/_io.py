"""Deterministic writers for run outputs: CSV tables, binary PGM grids,
JSON documents and the run manifest."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def fmt_float(v) -> str:
    """17 significant digits, '.' decimal separator, locale-free."""
    return f"{float(v):.17g}"


def fmt_cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt_float(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_label_pgm(path: Path, labels: np.ndarray) -> None:
    """8-bit binary PGM: +1 -> black, -1 -> white, unresolved -> mid-gray.

    Rows are written top to bottom in matrix order (row 0 first).
    """
    ny, nx = labels.shape
    pixels = np.full((ny, nx), 128, dtype=np.uint8)
    pixels[labels == 1] = 0
    pixels[labels == -1] = 255
    header = f"P5 {nx} {ny} 255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="ascii")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, config_echo: dict, version: str, wall_time_s: float, summary: dict) -> Path:
    """Manifest of a finished run: config echo, version, wall time, summary
    statistics and a content hash for every output file in the directory."""
    outputs = {}
    for f in sorted(out_dir.iterdir()):
        if f.name == "manifest.json" or not f.is_file():
            continue
        outputs[f.name] = sha256_file(f)
    manifest = {
        "artifact_version": version,
        "config": config_echo,
        "wall_time_s": wall_time_s,
        "summary": summary,
        "outputs": outputs,
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
