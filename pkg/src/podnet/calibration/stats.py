"""Summary statistics and the pooled two-sample t-test."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Sequence

from scipy.stats import t as student_t


class InsufficientData(ValueError):
    """Fewer than two observations."""


@dataclass(frozen=True)
class SummaryStats:
    """Mean, sample std (N-1), count and a normal-quantile CI."""

    mean: float
    std: float
    count: int
    ci_low: float
    ci_high: float
    alpha: float = 0.05
    metric: str | None = None

    @classmethod
    def from_moments(cls, mean: float, std: float, count: int, alpha: float = 0.05, metric: str | None = None):
        """Build from published (mean, std, N) triples."""
        if count < 2:
            raise InsufficientData(f"need at least 2 observations, got {count}")
        if std < 0:
            raise ValueError("std must be >= 0")
        half = ci_half_width(std, count, alpha)
        return cls(float(mean), float(std), int(count), mean - half, mean + half, alpha, metric)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TTestDecision:
    t_statistic: float
    degrees_of_freedom: int
    critical_value: float
    reject_H0: bool
    alpha: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def ci_half_width(std: float, count: int, alpha: float = 0.05) -> float:
    _check_alpha(alpha)
    z = NormalDist().inv_cdf(1 - alpha / 2)
    return z * std / math.sqrt(count)


def summarize(values: Sequence[float], alpha: float = 0.05, metric: str | None = None) -> SummaryStats:
    """Mean, sample std and the CI ``mean -+ z * std / sqrt(N)``.

    >>> summarize([5, 5, 5, 5])
    SummaryStats(mean=5.0, std=0.0, count=4, ci_low=5.0, ci_high=5.0, alpha=0.05, metric=None)
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        raise InsufficientData(f"need at least 2 observations, got {len(values)}")
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return SummaryStats.from_moments(mean, math.sqrt(var), n, alpha, metric)


def t_critical(alpha: float, df: int) -> float:
    """Two-sided critical value of Student's t with ``df`` degrees of freedom."""
    _check_alpha(alpha)
    if df < 1:
        raise InsufficientData("degrees of freedom must be >= 1")
    return float(student_t.ppf(1 - alpha / 2, df))


def pooled_t_test(s1: SummaryStats, s2: SummaryStats, alpha: float = 0.05) -> TTestDecision:
    """Equal-variance two-sample t-test of H0: mu1 - mu2 = 0."""
    if s1.count < 2 or s2.count < 2:
        raise InsufficientData("each sample needs at least 2 observations")
    df = s1.count + s2.count - 2
    pooled_var = ((s1.count - 1) * s1.std**2 + (s2.count - 1) * s2.std**2) / df
    se = math.sqrt(pooled_var) * math.sqrt(1 / s1.count + 1 / s2.count)
    diff = s1.mean - s2.mean
    if se == 0:
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    else:
        t = diff / se
    crit = t_critical(alpha, df)
    return TTestDecision(t, df, crit, abs(t) > crit, alpha)
