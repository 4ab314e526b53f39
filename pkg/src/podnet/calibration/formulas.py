"""Closed-form deployment-time relations and the pod overhead factor."""

from __future__ import annotations

from .measurements import DATA_METRICS
from .stats import SummaryStats


class UnitMismatch(ValueError):
    """The two statistics do not describe the same time metric."""


def _check_counts(**counts) -> None:
    for name, value in counts.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")


def predict_Td(C: int, pods: int, n: int, Tc_s: float) -> float:
    """Deployment time ``C * Tc / min(pods, n)``.

    >>> predict_Td(40, 40, 8, 2.048)
    10.24
    """
    _check_counts(C=C, pods=pods, n=n)
    if not Tc_s > 0:
        raise ValueError("Tc_s must be > 0")
    return C * Tc_s / min(pods, n)


def invert_Tc(Td_s: float, C: int, pods: int, n: int) -> float:
    """Per-container creation time implied by a measured deployment time."""
    _check_counts(C=C, pods=pods, n=n)
    if not Td_s > 0:
        raise ValueError("Td_s must be > 0")
    return Td_s * min(pods, n) / C


def predict_Tt(Td_s: float, Tdown_s: float) -> float:
    if Td_s < 0 or Tdown_s < 0:
        raise ValueError("times must be >= 0")
    return Td_s + Tdown_s


def avg_bandwidth_per_container(total_bw: float, C: int) -> float:
    _check_counts(C=C)
    return total_bw / C


def as_transfer_time(bandwidth: SummaryStats, volume_gb: float = 1.0) -> SummaryStats:
    """Seconds to move ``volume_gb`` at the measured bandwidth (lower is better).

    The std is carried over to first order (delta method).
    """
    if not bandwidth.mean > 0:
        raise ValueError("bandwidth mean must be > 0")
    mean = volume_gb / bandwidth.mean
    std = volume_gb * bandwidth.std / bandwidth.mean**2
    return SummaryStats.from_moments(mean, std, bandwidth.count, bandwidth.alpha, "transfer_time_s")


def overhead_alpha(exec_grouped: SummaryStats, exec_isolated: SummaryStats) -> float:
    """alpha = time of the evaluated layout / time of the one-container-per-pod baseline.

    Values above 1 mean the pod grouping costs time.
    """
    for s in (exec_grouped, exec_isolated):
        if s.metric in DATA_METRICS:
            raise UnitMismatch("bandwidth is higher-is-better; convert it with as_transfer_time first")
    if exec_grouped.metric != exec_isolated.metric:
        raise UnitMismatch(f"cannot compare {exec_grouped.metric!r} with {exec_isolated.metric!r}")
    if not (exec_grouped.mean > 0 and exec_isolated.mean > 0):
        raise ValueError("both means must be > 0")
    return exec_grouped.mean / exec_isolated.mean
