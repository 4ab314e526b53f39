"""Measurement CSV ingestion.

Exact header::

    experiment,n,pods,containers,repetition,metric,value,unit

Times are normalised to seconds and data volumes to GB.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable

HEADER = ("experiment", "n", "pods", "containers", "repetition", "metric", "value", "unit")

TIME_METRICS = ("deploy_time_s", "total_time_s", "exec_time_s", "stop_time_s")
DATA_METRICS = ("bandwidth_gb",)
METRICS = TIME_METRICS + DATA_METRICS

_TIME_UNITS = {"s": 1.0, "sec": 1.0, "secs": 1.0, "second": 1.0, "seconds": 1.0, "ms": 1e-3, "min": 60.0, "h": 3600.0}
_DATA_UNITS = {"gb": 1.0, "mb": 1e-3, "kb": 1e-6, "tb": 1e3, "gbit": 0.125, "gbits": 0.125, "mbit": 0.125e-3}


class SchemaError(ValueError):
    """The CSV does not follow the measurement schema."""


class NegativeValue(ValueError):
    """A value that must be non-negative (or a count that must be positive) is not."""


class ImpossibleLayout(NegativeValue):
    """More pods than containers (rho > 1)."""


@dataclass(frozen=True)
class MeasurementSample:
    experiment: str
    n: int
    pods: int
    containers: int
    repetition: int
    metric: str
    value: float
    unit: str

    @property
    def rho(self) -> Fraction:
        return Fraction(self.pods, self.containers)


def normalise(value: float, unit: str, metric: str) -> tuple[float, str]:
    key = unit.strip().lower()
    if metric in TIME_METRICS:
        if key not in _TIME_UNITS:
            raise SchemaError(f"unit {unit!r} is not a time unit (metric {metric})")
        return value * _TIME_UNITS[key], "s"
    if key not in _DATA_UNITS:
        raise SchemaError(f"unit {unit!r} is not a data unit (metric {metric})")
    return value * _DATA_UNITS[key], "GB"


def _int(row: dict, key: str, line: int) -> int:
    try:
        return int(row[key])
    except (TypeError, ValueError):
        raise SchemaError(f"line {line}: {key} must be an integer, got {row[key]!r}") from None


def parse_rows(rows: Iterable[dict], first_line: int = 2) -> list[MeasurementSample]:
    out = []
    for line, row in enumerate(rows, start=first_line):
        if None in row or any(v is None for v in row.values()):
            raise SchemaError(f"line {line}: expected {len(HEADER)} columns")
        metric = row["metric"].strip()
        if metric not in METRICS:
            raise SchemaError(f"line {line}: unknown metric {metric!r}")
        n, pods, containers = _int(row, "n", line), _int(row, "pods", line), _int(row, "containers", line)
        repetition = _int(row, "repetition", line)
        try:
            raw = float(row["value"])
        except ValueError:
            raise SchemaError(f"line {line}: value must be numeric, got {row['value']!r}") from None
        if min(n, pods, containers) < 1:
            raise NegativeValue(f"line {line}: n, pods and containers must be >= 1")
        if pods > containers:
            raise ImpossibleLayout(f"line {line}: {pods} pods for {containers} containers gives rho > 1")
        if not raw >= 0:
            raise NegativeValue(f"line {line}: value must be >= 0, got {raw}")
        value, unit = normalise(raw, row["unit"], metric)
        out.append(MeasurementSample(row["experiment"].strip(), n, pods, containers, repetition, metric, value, unit))
    return out


def load_measurements(source: str | os.PathLike | IO[str]) -> list[MeasurementSample]:
    """Parse a measurement CSV given as a path or an open text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(Path(source), newline="") as fh:
            return _load(fh)
    return _load(source)


def loads_measurements(text: str) -> list[MeasurementSample]:
    return _load(io.StringIO(text))


def _load(fh: IO[str]) -> list[MeasurementSample]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != HEADER:
        raise SchemaError(f"header must be exactly {','.join(HEADER)}")
    return parse_rows(reader)


def dump_measurements(samples: Iterable[MeasurementSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for s in samples:
        writer.writerow([s.experiment, s.n, s.pods, s.containers, s.repetition, s.metric, repr(s.value), s.unit])
    return buf.getvalue()
