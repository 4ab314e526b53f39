"""Stable file output: 6-significant-digit numbers, sorted JSON, run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__


def fmt(x: Any) -> str:
    """Render a value for CSV/text output (floats with 6 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.6g}"
    return str(x)


def round6(obj: Any) -> Any:
    """Recursively round floats to 6 significant digits for JSON output."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return fmt(obj)
        return float(f"{obj:.6g}")
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round6(v) for v in obj]
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(round6(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(command: str, inputs: Sequence[str | Path], out: str | Path | None, **params) -> dict:
    """Everything needed to re-run a command; deliberately free of timestamps."""
    return {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "input_sha256": {str(p): sha256_file(p) for p in inputs},
        "output_dir": None if out is None else str(out),
        "tool_version": __version__,
        **params,
    }


SUMMARY_FIELDS = ("mean", "std", "count", "ci_low", "ci_high")
