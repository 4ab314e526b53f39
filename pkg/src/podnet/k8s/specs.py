"""Cluster, pod and timing descriptions for the lifecycle model."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import IntEnum
from fractions import Fraction
from typing import Sequence

from ..petri.distributions import Constant, DelayDistribution, Never

SCHEDULER_MODES = ("spread", "first-fit", "seeded-random")
_MODE_ALIASES = {"first-fit-by-id": "first-fit", "random": "seeded-random", "round-robin": "spread"}
CREATION_MODES = ("per-machine", "per-pod-parallel")


class NonIntegralLayout(ValueError):
    """rho * C pods cannot evenly hold C containers."""


class RestartPolicy(IntEnum):
    ALWAYS = 0
    ON_FAILURE = 1
    NEVER = 2

    @classmethod
    def parse(cls, value) -> "RestartPolicy":
        if isinstance(value, str):
            key = value.strip().lower().replace("_", "").replace("-", "")
            names = {"always": cls.ALWAYS, "onfailure": cls.ON_FAILURE, "never": cls.NEVER}
            if key in names:
                return names[key]
            if key.isdigit():
                value = int(key)
            else:
                raise ValueError(f"unknown restart policy {value!r}")
        return cls(int(value))


def natural_key(name: str):
    """Sort key putting ``m2`` before ``m10``."""
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name)]


@dataclass(frozen=True)
class Machine:
    node_id: str
    ram_gb: float
    cores: float
    rtt_ms: float = 0.25
    preloaded_images: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.ram_gb < 0 or self.cores < 0:
            raise ValueError(f"machine {self.node_id}: capacities must be >= 0")
        if self.rtt_ms < 0:
            raise ValueError(f"machine {self.node_id}: rtt must be >= 0")
        object.__setattr__(self, "preloaded_images", frozenset(self.preloaded_images))


@dataclass(frozen=True)
class ClusterSpec:
    machines: tuple[Machine, ...]
    registry_bandwidth_gbps: float = 1.0
    scheduler_mode: str = "spread"
    creation_mode: str = "per-machine"

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        if not self.machines:
            raise ValueError("a cluster needs at least one machine")
        ids = [m.node_id for m in self.machines]
        if len(set(ids)) != len(ids):
            raise ValueError("machine node_id values must be unique")
        object.__setattr__(self, "scheduler_mode", _MODE_ALIASES.get(self.scheduler_mode, self.scheduler_mode))
        if not self.registry_bandwidth_gbps > 0:
            raise ValueError("registry_bandwidth_gbps must be > 0")
        if self.scheduler_mode not in SCHEDULER_MODES:
            raise ValueError(f"scheduler_mode must be one of {SCHEDULER_MODES}")
        if self.creation_mode not in CREATION_MODES:
            raise ValueError(f"creation_mode must be one of {CREATION_MODES}")

    @property
    def n(self) -> int:
        return len(self.machines)

    def machine(self, node_id: str) -> Machine:
        for m in self.machines:
            if m.node_id == node_id:
                return m
        raise KeyError(node_id)

    @classmethod
    def homogeneous(
        cls,
        n: int,
        ram_gb: float = 32.0,
        cores: float = 4.0,
        rtt_ms: float = 0.25,
        preloaded: Sequence[str] = (),
        **kwargs,
    ) -> "ClusterSpec":
        """``n`` identical machines ``m1..mn`` (32 GB, 4 cores and 0.25 ms RTT by default)."""
        machines = tuple(Machine(f"m{i + 1}", ram_gb, cores, rtt_ms, frozenset(preloaded)) for i in range(n))
        return cls(machines, **kwargs)


@dataclass(frozen=True)
class Image:
    name: str = "app"
    size_gb: float = 1.225


@dataclass(frozen=True)
class PodSpec:
    """A pod template; requests are per container."""

    pod_id: str = "pod"
    containers: int = 1
    ram_request_gb: float = 0.0
    cpu_request_cores: float = 0.0
    restart_policy: RestartPolicy = RestartPolicy.NEVER
    image: Image = Image()

    def __post_init__(self):
        if self.containers < 1:
            raise ValueError("a pod holds at least one container")
        if self.ram_request_gb < 0 or self.cpu_request_cores < 0:
            raise ValueError("resource requests must be >= 0")
        object.__setattr__(self, "restart_policy", RestartPolicy.parse(self.restart_policy))

    @property
    def ram_total(self) -> float:
        return self.ram_request_gb * self.containers

    @property
    def cpu_total(self) -> float:
        return self.cpu_request_cores * self.containers

    def container_ids(self) -> list[str]:
        return [f"{self.pod_id}/c{j}" for j in range(self.containers)]


@dataclass(frozen=True)
class TimingProfile:
    """Delay distributions for the container transitions T1..T7."""

    t1: DelayDistribution
    t2: DelayDistribution = Constant(0.0)
    t3: DelayDistribution = Never()
    t4_t5: DelayDistribution = Constant(0.11)
    t6_t7: DelayDistribution = Constant(0.10)
    grace_period_s: float = 30.0

    def __post_init__(self):
        if not self.grace_period_s >= 0:
            raise ValueError("grace_period_s must be >= 0")


@dataclass(frozen=True)
class DeploymentSpec:
    C: int
    rho: Fraction
    pods: tuple[PodSpec, ...]
    timing: TimingProfile

    @property
    def n_pods(self) -> int:
        return len(self.pods)

    @property
    def containers_per_pod(self) -> int:
        return self.C // self.n_pods


def as_fraction(rho) -> Fraction:
    if isinstance(rho, Fraction):
        return rho
    if isinstance(rho, tuple):
        return Fraction(*rho)
    if isinstance(rho, float):
        if not math.isfinite(rho):
            raise NonIntegralLayout(f"rho must be finite, got {rho}")
        return Fraction(str(rho))
    return Fraction(rho)


def build_deployment(C: int, rho, template: PodSpec, timing: TimingProfile) -> DeploymentSpec:
    """Split ``C`` containers into ``rho * C`` identical pods.

    >>> d = build_deployment(40, 0.25, PodSpec(), TimingProfile(Constant(1.0)))
    >>> d.n_pods, d.containers_per_pod
    (10, 4)
    """
    if not isinstance(C, int) or C < 1:
        raise NonIntegralLayout(f"C must be a positive integer, got {C!r}")
    rho = as_fraction(rho)
    if not 0 < rho <= 1:
        raise NonIntegralLayout(f"rho must lie in (0, 1], got {rho}")
    pods = rho * C
    if pods.denominator != 1:
        raise NonIntegralLayout(f"rho*C = {float(pods):g} pods is not an integer")
    n_pods = int(pods)
    if C % n_pods:
        raise NonIntegralLayout(f"{n_pods} pods cannot evenly hold {C} containers")
    per_pod = C // n_pods
    width = max(3, len(str(n_pods - 1)))
    specs = tuple(
        replace(template, pod_id=f"pod-{i:0{width}d}", containers=per_pod) for i in range(n_pods)
    )
    return DeploymentSpec(C, rho, specs, timing)
