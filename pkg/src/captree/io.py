"""On-disk formats: plain-text XYZ clouds and CSV query traces.

Both formats round-trip exactly at 32-bit float precision (written with
shortest round-trip decimals). All numerics are meters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import PointCloud
from .geom import Sphere

__all__ = ["ParseError", "QueryTraceRecord", "read_xyz", "write_xyz",
           "read_trace", "write_trace"]


class ParseError(ValueError):
    """Malformed input file; carries the offending location."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def read_xyz(path) -> PointCloud:
    """Parse whitespace-separated "x y z" lines; '#' comments and blank
    lines are ignored. Non-finite values and malformed lines are errors."""
    rows = []
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ParseError(path, lineno,
                                 f"expected 3 coordinates, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise ParseError(path, lineno, f"not a number: {text!r}") from None
            if not all(np.isfinite(v) for v in vals):
                raise ParseError(path, lineno, "non-finite coordinate")
            rows.append(vals)
    pts = np.asarray(rows, dtype=np.float32).reshape(len(rows), 3)
    return PointCloud(pts)


def _fmt(v: np.float32) -> str:
    # numpy scalar str() is the shortest decimal that round-trips at float32
    return str(np.float32(v))


def write_xyz(cloud: PointCloud, path) -> None:
    """One point per line, shortest round-trip decimal formatting."""
    with open(path, "w", encoding="utf-8") as f:
        for row in cloud.points:
            f.write(" ".join(_fmt(v) for v in row) + "\n")


@dataclass
class QueryTraceRecord:
    """One batch of query spheres, optionally with its expected verdict."""

    batch_id: int
    centers: np.ndarray  # (m, 3) float32
    radii: np.ndarray    # (m,) float32
    expected: Optional[bool] = None

    def __len__(self) -> int:
        return len(self.radii)

    def spheres(self) -> list[Sphere]:
        return [Sphere(c.astype(np.float64), float(r))
                for c, r in zip(self.centers, self.radii)]


_HEADER_REQUIRED = ["batch", "x", "y", "z", "r"]


def _parse_expected(raw: str, path, lineno: int) -> Optional[bool]:
    text = raw.strip().lower()
    if text == "":
        return None
    if text in ("1", "true"):
        return True
    if text in ("0", "false"):
        return False
    raise ParseError(path, lineno, f"bad expected value {raw!r}")


def read_trace(path) -> list[QueryTraceRecord]:
    """CSV with header batch,x,y,z,r[,expected]; rows sharing a batch id
    form one record. The expected flag must agree within a batch."""
    groups: dict[int, dict] = {}
    order: list[int] = []
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty trace file") from None
        header = [h.strip().lower() for h in header]
        if header[: len(_HEADER_REQUIRED)] != _HEADER_REQUIRED or \
                header not in (_HEADER_REQUIRED, _HEADER_REQUIRED + ["expected"]):
            raise ParseError(path, 1, f"bad header {header!r}")
        has_expected = len(header) == 6
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno,
                                 f"expected {len(header)} fields, got {len(row)}")
            try:
                batch_id = int(row[0])
                vals = [float(v) for v in row[1:5]]
            except ValueError:
                raise ParseError(path, lineno, f"bad numeric field in {row!r}") from None
            if not all(np.isfinite(v) for v in vals):
                raise ParseError(path, lineno, "non-finite value")
            x, y, z, r = vals
            if r <= 0:
                raise ParseError(path, lineno, f"radius must be > 0, got {r}")
            expected = _parse_expected(row[5], path, lineno) if has_expected else None
            if batch_id not in groups:
                groups[batch_id] = {"centers": [], "radii": [], "expected": expected,
                                    "line": lineno}
                order.append(batch_id)
            else:
                if groups[batch_id]["expected"] != expected:
                    raise ParseError(path, lineno,
                                     f"inconsistent expected flag in batch {batch_id}")
            groups[batch_id]["centers"].append((x, y, z))
            groups[batch_id]["radii"].append(r)
    records = []
    for batch_id in order:
        g = groups[batch_id]
        records.append(QueryTraceRecord(
            batch_id=batch_id,
            centers=np.asarray(g["centers"], dtype=np.float32),
            radii=np.asarray(g["radii"], dtype=np.float32),
            expected=g["expected"],
        ))
    return records


def write_trace(records: list[QueryTraceRecord], path) -> None:
    """Inverse of read_trace; writes the expected column iff any record has it."""
    has_expected = any(rec.expected is not None for rec in records)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_HEADER_REQUIRED + (["expected"] if has_expected else []))
        for rec in records:
            exp = "" if rec.expected is None else ("1" if rec.expected else "0")
            for c, r in zip(rec.centers, rec.radii):
                row = [str(rec.batch_id), _fmt(c[0]), _fmt(c[1]), _fmt(c[2]), _fmt(r)]
                if has_expected:
                    row.append(exp)
                writer.writerow(row)
