"""Run the lifecycle nets and read deployment/termination metrics off the trace."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..petri import DEFAULT_MAX_EVENTS, SimulationState, TraceEvent
from .nets import build_system_net
from .specs import ClusterSpec, DeploymentSpec


class NoRestartObserved(LookupError):
    """The container never restarted in this run."""


# pod-net transition -> pod phase entered when it completes
_PHASE_ON_PRODUCE = {
    "submit": "PendingScheduling",
    "schedule": "Pending",
    "podRunning": "Running",
    "crashRunning": "RunningFailed",
    "podSucceeded": "Success",
    "podFailed": "Failed",
}


@dataclass
class PodRecord:
    pod_id: str
    node: str | None = None
    schedule_time: float | None = None
    running_time: float | None = None
    terminal_time: float | None = None
    terminal_phase: str | None = None
    restarts: int = 0
    termination_duration: float | None = None
    phases: list[tuple[float, str]] = field(default_factory=list)

    @property
    def phase(self) -> str | None:
        return self.phases[-1][1] if self.phases else None


@dataclass(frozen=True)
class ContainerCreation:
    container_id: str
    pod_id: str
    node: str
    start: float
    end: float


@dataclass(frozen=True)
class Download:
    node: str
    image: str
    start: float
    end: float


@dataclass
class SimResult:
    pods: dict[str, PodRecord]
    T_d: float | None
    T_t: float | None
    T_down: float
    creations: list[ContainerCreation]
    downloads: list[Download]
    trace: list[TraceEvent]
    state: SimulationState
    seed: int | None

    @property
    def termination_durations(self) -> dict[str, float]:
        return {p: r.termination_duration for p, r in self.pods.items() if r.termination_duration is not None}

    @property
    def all_running(self) -> bool:
        return all(r.running_time is not None for r in self.pods.values())


def _union_length(intervals) -> float:
    total, cur_lo, cur_hi = 0.0, None, None
    for lo, hi in sorted(intervals):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def extract(state: SimulationState, deployment: DeploymentSpec) -> SimResult:
    pods = {p.pod_id: PodRecord(p.pod_id) for p in deployment.pods}
    starts: dict[int, TraceEvent] = {}
    grace_start: dict[str, float] = {}
    creations, downloads = [], []
    for ev in state.trace:
        if ev.phase == "consume":
            starts[ev.firing] = ev
            name = ev.transition
            if name == "schedule":
                rec = pods[ev.binding["pid"]]
                rec.schedule_time = ev.time
                rec.node = ev.binding["node"]
            elif name in ("graceRunning", "graceFailed"):
                grace_start[ev.binding["pid"]] = ev.time
            elif name in ("T4", "T5"):
                pods[ev.net_instance_id].restarts += 1
            continue
        start = starts.pop(ev.firing)
        name = ev.transition
        b = ev.binding
        phase = _PHASE_ON_PRODUCE.get(name)
        if phase is not None:
            rec = pods[b["pid"] if name != "submit" else b["x"][0]]
            rec.phases.append((ev.time, phase))
            if name == "podRunning":
                rec.running_time = ev.time
            elif name in ("podSucceeded", "podFailed"):
                rec.terminal_time = ev.time
                rec.terminal_phase = phase
                rec.termination_duration = ev.time - grace_start[rec.pod_id]
        elif name == "pull":
            downloads.append(Download(b["node"], b["img"], start.time, ev.time))
        elif name == "createCont|T1":
            creations.append(ContainerCreation(ev.sync_binding["c"], b["pid"], b["node"], start.time, ev.time))

    T_down = _union_length((d.start, d.end) for d in downloads)
    running = [r.running_time for r in pods.values()]
    if running and all(t is not None for t in running):
        T_t = max(running)
        T_d = T_t - T_down
    else:
        T_t = T_d = None
    return SimResult(pods, T_d, T_t, T_down, creations, downloads, state.trace, state, state.seed)


def simulate(
    cluster: ClusterSpec,
    deployment: DeploymentSpec,
    seed: int | None = 0,
    max_events: int = DEFAULT_MAX_EVENTS,
    until: float | None = None,
) -> SimResult:
    """Build the nets, run to quiescence (or ``until``) and extract metrics.

    ``T_t`` is the time at which the last pod reaches Running, ``T_down``
    the total time during which at least one image pull is in flight and
    ``T_d = T_t - T_down``.  With preloaded images ``T_d = T_t``.
    """
    root = build_system_net(cluster, deployment)
    state = SimulationState(root, seed=seed, max_events=max_events)
    state.run(until=until)
    return extract(state, deployment)


def restart_cycle_time(result: SimResult, container_id: str) -> list[float]:
    """T4/T5 duration plus the following T1 duration, per observed restart."""
    pod_id = container_id.rsplit("/", 1)[0]
    starts: dict[int, TraceEvent] = {}
    cycles, stop_delay = [], None
    for ev in result.trace:
        if ev.phase == "consume":
            starts[ev.firing] = ev
            continue
        start = starts.pop(ev.firing)
        if ev.net_instance_id == pod_id and ev.transition in ("T4", "T5") and ev.binding["c"] == container_id:
            stop_delay = ev.time - start.time
        elif (
            stop_delay is not None
            and ev.transition == "createCont|T1"
            and ev.sync_binding["c"] == container_id
        ):
            cycles.append(stop_delay + ev.time - start.time)
            stop_delay = None
    if not cycles:
        raise NoRestartObserved(f"container {container_id!r} never completed a restart")
    return cycles
