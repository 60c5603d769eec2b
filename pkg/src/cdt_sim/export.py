"""File writers: CSV traces, 16-bit greymaps with JSON sidecars, reports and the manifest.

CSV files use '.' decimals, LF line endings and a fixed column order; numbers
are written with repr so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
import re
from pathlib import Path

import numpy as np

PGM_MAXVAL = 65535


class ArtifactWriter:
    """Writes files under one output directory and remembers every path it emitted."""

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.files: list[str] = []

    def path(self, relative: str) -> Path:
        p = self.root / relative
        p.parent.mkdir(parents=True, exist_ok=True)
        rel = p.relative_to(self.root).as_posix()
        if rel not in self.files:
            self.files.append(rel)
        return p

    def csv(self, relative: str, header, rows) -> str:
        write_csv(self.path(relative), header, rows)
        return relative

    def json(self, relative: str, payload) -> str:
        write_json(self.path(relative), payload)
        return relative

    def greymap(self, relative: str, image: np.ndarray, meta: dict, fmt: str = "P5") -> list[str]:
        scale = write_pgm(self.path(relative), image, fmt)
        sidecar = os.path.splitext(relative)[0] + ".json"
        self.json(sidecar, {**meta, "format": fmt, "maxval": PGM_MAXVAL, "value_scale": scale,
                            "rows": "x", "columns": "z"})
        return [relative, sidecar]

    def manifest(self, extra: dict | None = None) -> str:
        """manifest.json listing every emitted file (including itself)."""
        name = "manifest.json"
        self.path(name)
        write_json(self.root / name, {**(extra or {}), "files": sorted(self.files)})
        return name


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def to_uint16(image: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale a non-negative image so its maximum maps to 65535; returns (pixels, value per count)."""
    image = np.asarray(image, dtype=float)
    peak = float(image.max()) if image.size else 0.0
    if peak <= 0:
        return np.zeros(image.shape, np.uint16), 0.0
    pixels = np.rint(np.clip(image, 0, None) / peak * PGM_MAXVAL).astype(np.uint16)
    return pixels, peak / PGM_MAXVAL


def write_pgm(path, image: np.ndarray, fmt: str = "P5") -> float:
    """Write a 16-bit portable greymap (P5 binary or P2 text); returns the value per grey level."""
    pixels, scale = to_uint16(image)
    rows, cols = pixels.shape
    header = f"{fmt}\n{cols} {rows}\n{PGM_MAXVAL}\n"
    if fmt == "P5":
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(pixels.astype(">u2").tobytes())
    elif fmt == "P2":
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(header)
            for row in pixels:
                fh.write(" ".join(map(str, row.tolist())) + "\n")
    else:
        raise ValueError("fmt must be 'P2' or 'P5'")
    return scale


def read_pgm(path) -> np.ndarray:
    """Read back a greymap written by write_pgm (no comment lines)."""
    data = Path(path).read_bytes()
    header = re.match(rb"(P[25])\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if header is None:
        raise ValueError(f"{path}: not a P2/P5 greymap")
    fmt, cols, rows, maxval = header.group(1).decode(), *(int(g) for g in header.groups()[1:])
    # exactly one whitespace byte separates maxval from binary pixel data
    body = data[header.end():]
    if fmt == "P5":
        dtype = ">u2" if maxval > 255 else "u1"
        return np.frombuffer(body, dtype=dtype, count=rows * cols).reshape(rows, cols).astype(np.uint16)
    return np.array(body.split(), dtype=np.uint16).reshape(rows, cols)


def record_rows(record):
    return zip(record.z_samples, record.P_L, record.P_R)


def write_record(writer: ArtifactWriter, prefix: str, record, fluorescence: np.ndarray | None = None,
                 render_meta: dict | None = None, fmt: str = "P5") -> list[str]:
    """populations.csv, intensity greymap and (optionally) the fluorescence greymap of one run."""
    files = [writer.csv(f"{prefix}/populations.csv", ("z_um", "P_L", "P_R"), record_rows(record))]
    z = record.z_samples
    meta = {"x_min_um": float(record.x[0]), "dx_um": round(float(record.x[1] - record.x[0]), 12), "n_x": int(record.x.size),
            "z_min_um": float(z[0]), "dz_sample_um": float(z[1] - z[0]) if z.size > 1 else 0.0,
            "n_z": int(z.size), "frame": "waveguide", "quantity": "|psi|^2"}
    files += writer.greymap(f"{prefix}/intensity.pgm", record.intensity, meta, fmt)
    if fluorescence is not None:
        files += writer.greymap(f"{prefix}/fluorescence.pgm", fluorescence,
                                {**meta, "quantity": "fluorescence", **(render_meta or {})}, fmt)
    return files
