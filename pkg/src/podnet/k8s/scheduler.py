"""Pod placement.

Kubernetes may bind a pod to any machine with enough
free RAM and cores.  Three deterministic readings are offered:

``spread``
    round-robin over feasible machines in node order (the default; it
    realises the min(#Pods, n) parallelism of the deployment-time model)
``first-fit``
    the lowest node id with room
``seeded-random``
    uniform among feasible machines, drawn from the simulation RNG
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .specs import natural_key


@dataclass(frozen=True)
class PodRequest:
    pod_id: str
    ram_gb: float
    cores: float


@dataclass(frozen=True)
class MachineState:
    node_id: str
    ram_gb: float
    cores: float

    def fits(self, pod: PodRequest) -> bool:
        return self.ram_gb >= pod.ram_gb and self.cores >= pod.cores


@dataclass(frozen=True)
class Placement:
    pod_id: str
    node_id: str
    remaining: MachineState


def schedule_step(
    pending: Sequence[PodRequest],
    machines: Sequence[MachineState],
    mode: str = "spread",
    last_node: str | None = None,
    rng: np.random.Generator | None = None,
) -> Placement | None:
    """Place the first queued pod that fits somewhere, or return None.

    Pods that fit nowhere keep waiting without blocking the pods behind
    them.  ``last_node`` is the spread cursor (the node chosen by the
    previous placement).
    """
    ordered = sorted(machines, key=lambda m: natural_key(m.node_id))
    for pod in pending:
        feasible = [m for m in ordered if m.fits(pod)]
        if not feasible:
            continue
        if mode == "first-fit":
            chosen = feasible[0]
        elif mode == "spread":
            chosen = feasible[0]
            if last_node is not None:
                after = [m for m in feasible if natural_key(m.node_id) > natural_key(last_node)]
                if after:
                    chosen = after[0]
        elif mode == "seeded-random":
            if rng is None:
                raise ValueError("seeded-random placement needs an rng")
            chosen = feasible[int(rng.integers(len(feasible)))]
        else:
            raise ValueError(f"unknown scheduler mode {mode!r}")
        left = MachineState(chosen.node_id, chosen.ram_gb - pod.ram_gb, chosen.cores - pod.cores)
        return Placement(pod.pod_id, chosen.node_id, left)
    return None


class SchedulerPolicy:
    """Adapter turning :func:`schedule_step` into a transition chooser.

    One instance belongs to one simulation (it carries the spread cursor).
    """

    def __init__(self, mode: str):
        self.mode = mode
        self.last_node: str | None = None
        self.placements: list[Placement] = []

    def __call__(self, bindings, state) -> int:
        pending, seen = [], set()
        machines, seen_nodes = [], set()
        for b in bindings:
            if b["pid"] not in seen:
                seen.add(b["pid"])
                pending.append(PodRequest(b["pid"], b["ram"], b["cpu"]))
            if b["node"] not in seen_nodes:
                seen_nodes.add(b["node"])
                machines.append(MachineState(b["node"], b["mram"], b["mcpu"]))
        placement = schedule_step(pending, machines, self.mode, self.last_node, state.rng)
        if placement is None:  # guards already filtered infeasible pairs
            raise RuntimeError("scheduler offered candidates but found no placement")
        self.last_node = placement.node_id
        self.placements.append(placement)
        for i, b in enumerate(bindings):
            if b["pid"] == placement.pod_id and b["node"] == placement.node_id:
                return i
        raise RuntimeError("placement does not match any candidate binding")
