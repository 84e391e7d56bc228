"""CSV ingestion, JSON output and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .core import TimeSeries

SCHEMA_VERSION = "1.0"
MISSING_TOKENS = {"", "na", "nan", "null"}


class InputFormatError(ValueError):
    """The input file cannot be read as a univariate series."""


def _parse(cell: str) -> float:
    s = cell.strip()
    if s.lower() in MISSING_TOKENS:
        return math.nan
    return float(s)


def parse_series_text(text: str) -> TimeSeries:
    """Parse CSV text holding one value column, or ``date,value`` pairs.

    A non-numeric first row is taken as a header.  Empty cells and ``NA`` are missing.
    """
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError("no data rows")
    width = len(rows[0])
    if width not in (1, 2):
        raise InputFormatError(f"expected 1 or 2 columns, found {width}")
    col = width - 1
    first = rows[0][col] if len(rows[0]) > col else ""
    try:
        _parse(first)
    except ValueError:
        rows = rows[1:]
    values = []
    for lineno, r in enumerate(rows, start=1):
        if len(r) != width:
            raise InputFormatError(f"row {lineno}: expected {width} columns, found {len(r)}")
        try:
            v = _parse(r[col])
        except ValueError:
            raise InputFormatError(f"row {lineno}: cannot parse {r[col]!r} as a number") from None
        if math.isinf(v):
            raise InputFormatError(f"row {lineno}: infinite value")
        values.append(v)
    if not values:
        raise InputFormatError("no data rows")
    try:
        return TimeSeries.from_values(values)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from None


def read_series(path: str) -> tuple[TimeSeries, str]:
    """Series and the SHA-256 of the file's bytes."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        raise InputFormatError(f"{path} is not UTF-8 text") from None
    return parse_series_text(text), hashlib.sha256(raw).hexdigest()


def write_series(path: str, series: TimeSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in series.values:
            w.writerow(["NA" if math.isnan(v) else repr(float(v))])


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(float(obj)) else None
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(doc: dict, path: Optional[str] = None) -> str:
    text = json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


class Manifest:
    """Run provenance: command, configuration, seed, input digest, version and timing.

    Everything except the ``timing`` block is deterministic for a given command line.
    """

    def __init__(self, command: str, config: dict, seed: Optional[int] = None, input_sha256: Optional[str] = None):
        from . import __version__

        self.command = command
        self.config = config
        self.seed = seed
        self.input_sha256 = input_sha256
        self.version = __version__
        self._t0 = time.perf_counter()
        self._started = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "input_sha256": self.input_sha256,
            "tool_version": self.version,
            "timing": {"timestamp": self._started, "wall_time_s": round(time.perf_counter() - self._t0, 3)},
        }
