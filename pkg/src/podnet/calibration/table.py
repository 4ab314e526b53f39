"""T_c grids, the overhead factor and their estimation from measurements."""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from ..k8s.specs import TimingProfile
from ..petri.distributions import Constant
from .formulas import as_transfer_time, invert_Tc, overhead_alpha
from .measurements import MeasurementSample
from .stats import InsufficientData, SummaryStats, summarize


class EmptyTable(ValueError):
    """Nothing to interpolate from or to calibrate with."""


GridKey = tuple[Fraction, int, int]  # (rho, n, C)


@dataclass(frozen=True)
class CalibrationTable:
    """Grid (rho, n, C) -> T_c seconds plus the large-C asymptote ``t_c``."""

    entries: Mapping[GridKey, float]
    t_c: float | None = None

    def __post_init__(self):
        clean = {}
        for (rho, n, C), tc in self.entries.items():
            if not tc > 0:
                raise ValueError(f"T_c must be > 0, got {tc} at rho={rho}, n={n}, C={C}")
            clean[(Fraction(rho), int(n), int(C))] = float(tc)
        object.__setattr__(self, "entries", dict(sorted(clean.items())))
        if self.t_c is not None and not self.t_c > 0:
            raise ValueError("t_c must be > 0")

    def to_rows(self) -> list[dict]:
        return [
            {"rho": str(rho), "n": n, "C": C, "Tc_s": tc}
            for (rho, n, C), tc in self.entries.items()
        ]


def _interp(xs: list, x, value_at) -> float:
    """Piecewise-linear in ``x`` over sorted ``xs``, clamped at both ends."""
    if x <= xs[0]:
        return value_at(xs[0])
    if x >= xs[-1]:
        return value_at(xs[-1])
    hi = bisect.bisect_left(xs, x)
    if xs[hi] == x:
        return value_at(x)
    lo = hi - 1
    w = float((x - xs[lo]) / (xs[hi] - xs[lo]))
    return (1 - w) * value_at(xs[lo]) + w * value_at(xs[hi])


def interpolate_Tc(table: CalibrationTable, rho, n: int, C: int) -> float:
    """T_c at (rho, n, C): nested linear interpolation over rho, then n, then C.

    Out-of-grid coordinates clamp to the nearest grid value, except that a
    C beyond every grid C returns the asymptote ``t_c`` when one is stored.

    >>> t = CalibrationTable({(1, 8, 10): 2.0, (1, 8, 20): 3.0})
    >>> interpolate_Tc(t, 1, 8, 15)
    2.5
    """
    if not table.entries:
        raise EmptyTable("calibration table has no entries")
    if table.t_c is not None and C > max(c for _, _, c in table.entries):
        return table.t_c
    rho = Fraction(rho)
    tree: dict = defaultdict(lambda: defaultdict(dict))
    for (r, nn, cc), tc in table.entries.items():
        tree[r][nn][cc] = tc
    rhos = sorted(tree)

    def at_rho(r):
        ns = sorted(tree[r])

        def at_n(nn):
            series = tree[r][nn]
            return _interp(sorted(series), C, series.__getitem__)

        return _interp(ns, n, at_n)

    return _interp(rhos, rho, at_rho)


@dataclass(frozen=True)
class OverheadFactor:
    """alpha(rho), linear in rho between grid points and clamped outside."""

    values: Mapping[Fraction, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {Fraction(k): float(v) for k, v in self.values.items()}
        if clean.get(Fraction(1), 1.0) != 1.0:
            raise ValueError("alpha(1) is 1 by definition")
        clean[Fraction(1)] = 1.0
        for k, v in clean.items():
            if not v > 0:
                raise ValueError(f"alpha must be > 0, got {v} at rho={k}")
        object.__setattr__(self, "values", dict(sorted(clean.items())))

    def __call__(self, rho) -> float:
        rho = Fraction(rho)
        if rho == 1:
            return 1.0
        return _interp(list(self.values), rho, self.values.__getitem__)

    @property
    def measured(self) -> bool:
        """True when some grid point besides rho = 1 is known."""
        return len(self.values) > 1

    def to_rows(self) -> list[dict]:
        return [{"rho": str(r), "alpha": a} for r, a in self.values.items()]


def _grouped(samples: Iterable[MeasurementSample], metric: str) -> dict[tuple, list[float]]:
    groups: dict[tuple, list[float]] = defaultdict(list)
    for s in samples:
        if s.metric == metric:
            groups[(s.experiment, s.n, s.pods, s.containers)].append(s.value)
    return groups


def calibrate_Tc(samples: Iterable[MeasurementSample]) -> CalibrationTable:
    """Invert mean deployment times into a T_c grid.

    The asymptote is the mean, over (rho, n) series, of the T_c at each
    series' largest C.
    """
    per_key: dict[GridKey, list[float]] = defaultdict(list)
    for (_, n, pods, C), values in _grouped(samples, "deploy_time_s").items():
        mean = math.fsum(values) / len(values)
        if mean > 0:
            per_key[(Fraction(pods, C), n, C)].append(invert_Tc(mean, C, pods, n))
    if not per_key:
        raise EmptyTable("no positive deploy_time_s measurements to calibrate from")
    entries = {k: math.fsum(v) / len(v) for k, v in per_key.items()}
    largest: dict[tuple, tuple[int, float]] = {}
    for (rho, n, C), tc in entries.items():
        if (rho, n) not in largest or C > largest[(rho, n)][0]:
            largest[(rho, n)] = (C, tc)
    t_c = math.fsum(tc for _, tc in largest.values()) / len(largest)
    return CalibrationTable(entries, t_c)


def calibrate_alpha(samples: Iterable[MeasurementSample], alpha_level: float = 0.05) -> OverheadFactor:
    """alpha per rho from exec_time_s (or bandwidth, as transfer time) series.

    Each (experiment, n, C) series needs a one-container-per-pod baseline;
    alphas of the same rho across series are averaged.
    """
    samples = list(samples)
    ratios: dict[Fraction, list[float]] = defaultdict(list)
    for metric in ("exec_time_s", "bandwidth_gb"):
        stats: dict[tuple, SummaryStats] = {}
        for key, values in _grouped(samples, metric).items():
            try:
                s = summarize(values, alpha_level, metric)
            except InsufficientData:
                continue
            if s.mean <= 0:
                continue
            stats[key] = as_transfer_time(s) if metric == "bandwidth_gb" else s
        for (exp, n, pods, C), s in stats.items():
            base = stats.get((exp, n, C, C))
            if base is None or pods == C:
                continue
            ratios[Fraction(pods, C)].append(overhead_alpha(s, base))
    return OverheadFactor({r: math.fsum(v) / len(v) for r, v in ratios.items()})


def calibrate(samples: Iterable[MeasurementSample]) -> tuple[CalibrationTable, OverheadFactor]:
    samples = list(samples)
    return calibrate_Tc(samples), calibrate_alpha(samples)


def calibrated_timing(table: CalibrationTable, rho, n: int, C: int, **overrides) -> TimingProfile:
    """A TimingProfile whose T1 is the interpolated T_c (other fields default or overridden)."""
    return TimingProfile(t1=Constant(interpolate_Tc(table, rho, n, C)), **overrides)


def calibration_to_dict(table: CalibrationTable | None, alpha: OverheadFactor | None = None) -> dict:
    out = {"table": None if table is None else {"entries": table.to_rows(), "t_c": table.t_c}}
    if alpha is not None:
        out["alpha"] = alpha.to_rows()
    return out


def calibration_from_dict(raw: dict) -> tuple[CalibrationTable | None, OverheadFactor]:
    """Inverse of :func:`calibration_to_dict`; ``table`` may be null and ``alpha`` absent."""
    t = raw.get("table")
    table = None
    if t is not None:
        entries = {(Fraction(str(e["rho"])), int(e["n"]), int(e["C"])): float(e["Tc_s"]) for e in t["entries"]}
        t_c = t.get("t_c")
        table = CalibrationTable(entries, None if t_c is None else float(t_c))
    alpha = OverheadFactor({Fraction(str(a["rho"])): float(a["alpha"]) for a in raw.get("alpha", [])})
    return table, alpha
