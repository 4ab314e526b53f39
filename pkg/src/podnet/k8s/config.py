"""Scenario files (JSON) for the simulator.

Layout::

    {
      "cluster": {"machines": [{"id", "ram_gb", "cores", "rtt_ms", "preloaded": [...]}],
                  "registry_bandwidth_gbps", "scheduler_mode", "creation_mode"},
      "deployment": {"C", "rho": {"pods", "containers"} | 0.25,
                     "pod": {"ram_request_gb", "cpu_request_cores", "restart_policy",
                             "image": {"name", "size_gb"}}},
      "timing": {"t1": {"dist", "params"}, ..., "t6_t7": {...}, "grace_period_s"},
      "run": {"seed", "replications", "max_events", "until"},
      "sweep": {"C": [...], "rho": [...], "n": [...]}
    }

``rho`` given as ``{"pods": p, "containers": c}`` is the exact ratio p/c.
Instead of a machine list, ``cluster`` may hold ``"n"`` plus a ``"machine"``
template; nodes are then named ``m1..mn``.  ``sweep`` is optional and
replaces C, rho or the machine count with each listed value in turn.
``run.until`` (seconds, optional) stops every replication at that time,
which pods that restart forever need.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

from ..petri.distributions import DelayDistribution, from_dict
from ..petri.engine import DEFAULT_MAX_EVENTS
from .specs import (
    ClusterSpec,
    DeploymentSpec,
    Image,
    Machine,
    NonIntegralLayout,
    PodSpec,
    RestartPolicy,
    TimingProfile,
    build_deployment,
)


class ConfigError(ValueError):
    """Invalid scenario; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class Scenario:
    cluster: ClusterSpec
    C: int
    rho: Fraction
    pod: PodSpec
    timing: TimingProfile
    seed: int = 0
    replications: int = 1
    max_events: int = DEFAULT_MAX_EVENTS
    sweep: dict[str, tuple] = field(default_factory=dict)
    until: float | None = None

    def deployment(self, C: int | None = None, rho: Fraction | None = None) -> DeploymentSpec:
        return build_deployment(self.C if C is None else C, self.rho if rho is None else rho, self.pod, self.timing)

    def points(self):
        """(C, rho, cluster) for every sweep combination (one point without a sweep)."""
        Cs = self.sweep.get("C", (self.C,))
        rhos = self.sweep.get("rho", (self.rho,))
        ns = self.sweep.get("n", (None,))
        for C, rho, n in itertools.product(Cs, rhos, ns):
            cluster = self.cluster if n is None else _resize(self.cluster, n)
            yield C, rho, cluster


def _resize(cluster: ClusterSpec, n: int) -> ClusterSpec:
    template = cluster.machines[0]
    machines = tuple(replace(template, node_id=f"m{i + 1}") for i in range(n))
    return replace(cluster, machines=machines)


def _get(obj: dict, key: str, path: str, kind=None, default: Any = ...):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing")
        return default
    value = obj[key]
    where = f"{path}.{key}" if path else key
    if kind is not None:
        try:
            if kind is int and (isinstance(value, bool) or float(value) != int(value)):
                raise ValueError
            value = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(where, f"expected {kind.__name__}, got {obj[key]!r}") from None
    return value


def _machine(raw: dict, path: str, default_id: str | None = None) -> Machine:
    try:
        return Machine(
            node_id=str(_get(raw, "id", path, default=default_id) or ""),
            ram_gb=_get(raw, "ram_gb", path, float),
            cores=_get(raw, "cores", path, float),
            rtt_ms=_get(raw, "rtt_ms", path, float, 0.25),
            preloaded_images=frozenset(_get(raw, "preloaded", path, default=())),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


def parse_cluster(raw: dict, path: str = "cluster") -> ClusterSpec:
    if "machines" in raw:
        machines_raw = _get(raw, "machines", path)
        if not isinstance(machines_raw, list) or not machines_raw:
            raise ConfigError(f"{path}.machines", "expected a non-empty list")
        machines = [_machine(m, f"{path}.machines[{i}]") for i, m in enumerate(machines_raw)]
    else:
        n = _get(raw, "n", path, int)
        if n < 1:
            raise ConfigError(f"{path}.n", "must be >= 1")
        template = _machine(_get(raw, "machine", path), f"{path}.machine", default_id="m1")
        machines = [replace(template, node_id=f"m{i + 1}") for i in range(n)]
    try:
        return ClusterSpec(
            tuple(machines),
            registry_bandwidth_gbps=_get(raw, "registry_bandwidth_gbps", path, float, 1.0),
            scheduler_mode=str(_get(raw, "scheduler_mode", path, default="spread")),
            creation_mode=str(_get(raw, "creation_mode", path, default="per-machine")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("registry_bandwidth_gbps", "scheduler_mode", "creation_mode", "node_id") if k in msg), "machines")
        raise ConfigError(f"{path}.{key}", msg) from None


def parse_rho(raw, path: str = "deployment.rho") -> Fraction:
    if isinstance(raw, dict):
        pods = _get(raw, "pods", path, int)
        containers = _get(raw, "containers", path, int)
        if pods < 1 or containers < 1:
            raise ConfigError(path, "pods and containers must be >= 1")
        return Fraction(pods, containers)
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise ConfigError(path, f"expected a number or {{pods, containers}}, got {raw!r}")
    try:
        return Fraction(str(raw))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(path, f"not a number: {raw!r}") from None


def parse_distribution(raw, path: str) -> DelayDistribution:
    try:
        return from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad distribution ({exc})") from None


def parse_timing(raw: dict, path: str = "timing") -> TimingProfile:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    dists = {}
    for key in ("t1", "t2", "t3", "t4_t5", "t6_t7"):
        if key in raw:
            dists[key] = parse_distribution(raw[key], f"{path}.{key}")
    if "t1" not in dists:
        raise ConfigError(f"{path}.t1", "missing")
    grace = _get(raw, "grace_period_s", path, float, 30.0)
    if grace < 0:
        raise ConfigError(f"{path}.grace_period_s", "must be >= 0")
    return TimingProfile(grace_period_s=grace, **dists)


def parse_pod(raw: dict, path: str = "deployment.pod") -> PodSpec:
    image_raw = _get(raw, "image", path, default={})
    image = Image(
        name=str(_get(image_raw, "name", f"{path}.image", default="app")),
        size_gb=_get(image_raw, "size_gb", f"{path}.image", float, 1.225),
    )
    if image.size_gb < 0:
        raise ConfigError(f"{path}.image.size_gb", "must be >= 0")
    try:
        policy = RestartPolicy.parse(_get(raw, "restart_policy", path, default="Never"))
    except ValueError as exc:
        raise ConfigError(f"{path}.restart_policy", str(exc)) from None
    ram = _get(raw, "ram_request_gb", path, float, 0.0)
    cpu = _get(raw, "cpu_request_cores", path, float, 0.0)
    if ram < 0:
        raise ConfigError(f"{path}.ram_request_gb", "must be >= 0")
    if cpu < 0:
        raise ConfigError(f"{path}.cpu_request_cores", "must be >= 0")
    return PodSpec(ram_request_gb=ram, cpu_request_cores=cpu, restart_policy=policy, image=image)


def parse_scenario(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    cluster = parse_cluster(_get(raw, "cluster", ""))
    dep = _get(raw, "deployment", "")
    C = _get(dep, "C", "deployment", int)
    rho = parse_rho(_get(dep, "rho", "deployment"))
    pod = parse_pod(_get(dep, "pod", "deployment", default={}))
    timing = parse_timing(_get(raw, "timing", ""))
    run = _get(raw, "run", "", default={})
    seed = _get(run, "seed", "run", int, 0)
    reps = _get(run, "replications", "run", int, 1)
    budget = _get(run, "max_events", "run", int, DEFAULT_MAX_EVENTS)
    if seed < 0:
        raise ConfigError("run.seed", "must be >= 0")
    if reps < 1:
        raise ConfigError("run.replications", "must be >= 1")
    if budget < 1:
        raise ConfigError("run.max_events", "must be >= 1")
    until = _get(run, "until", "run", float, None)
    if until is not None and not until >= 0:
        raise ConfigError("run.until", "must be >= 0")

    sweep_raw = _get(raw, "sweep", "", default={})
    sweep: dict[str, tuple] = {}
    if not isinstance(sweep_raw, dict):
        raise ConfigError("sweep", "expected an object")
    for key, values in sweep_raw.items():
        where = f"sweep.{key}"
        if key not in ("C", "rho", "n"):
            raise ConfigError(where, "only C, rho and n can be swept")
        if not isinstance(values, list) or not values:
            raise ConfigError(where, "expected a non-empty list")
        if key == "rho":
            sweep[key] = tuple(parse_rho(v, f"{where}[{i}]") for i, v in enumerate(values))
        else:
            sweep[key] = tuple(_get({key: v}, key, f"{where}[{i}]", int) for i, v in enumerate(values))
            if min(sweep[key]) < 1:
                raise ConfigError(where, "values must be >= 1")

    scenario = Scenario(cluster, C, rho, pod, timing, seed, reps, budget, sweep, until)
    for C_, rho_, _ in scenario.points():
        try:
            scenario.deployment(C_, rho_)
        except NonIntegralLayout as exc:
            raise ConfigError("sweep" if sweep else "deployment.rho", str(exc)) from None
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_scenario(raw)
