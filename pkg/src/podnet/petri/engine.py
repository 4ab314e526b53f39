"""Discrete-event execution of hierarchical timed nets.

Semantics:

* a firing consumes its input tokens when it starts and produces its
  output tokens when its sampled delay elapses (untimed transitions have
  delay 0 and still complete through the event list, after every event
  already scheduled for the same instant);
* a parent transition with a downlink fires jointly with one enabled
  uplink transition of the referenced child; the joint delay is the sum
  of both sides' delays and the pair is traced as one event;
* among simultaneously enabled firings the earliest root-to-leaf
  instance, then transition declaration order, then token insertion
  order wins, unless a ``race`` or ``chooser`` annotation says otherwise.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Iterator, Mapping

import numpy as np

from .net import CompiledTransition, NetInstance, child_instances

DEFAULT_MAX_EVENTS = 1_000_000


class NotEnabled(RuntimeError):
    """The requested firing is not enabled in the current marking."""


class BudgetExceeded(RuntimeError):
    """The run processed more events than its budget allows."""

    def __init__(self, budget: int, state: "SimulationState"):
        super().__init__(f"event budget of {budget} exceeded at t={state.clock:g}")
        self.budget = budget
        self.state = state


@dataclass
class Part:
    """One side of a firing: a transition of one instance under a binding."""

    instance: NetInstance
    ct: CompiledTransition
    binding: dict
    consumed: tuple  # ((place, token), ...)
    read: tuple

    @property
    def name(self) -> str:
        return self.ct.transition.name

    def key(self):
        return (self.instance.id, self.name, self.consumed, self.read)


@dataclass
class Firing:
    main: Part
    sync: Part | None = None
    delay: float | None = None
    fid: int | None = None
    start: float | None = None

    @property
    def transition(self) -> str:
        return self.main.name

    @property
    def binding(self) -> dict:
        return self.main.binding

    @property
    def instance(self) -> NetInstance:
        return self.main.instance

    def parts(self):
        return (self.main,) if self.sync is None else (self.main, self.sync)

    def raced_part(self) -> Part | None:
        for part in reversed(self.parts()):
            if part.ct.transition.race:
                return part
        return None

    def key(self):
        return (self.main.key(), None if self.sync is None else self.sync.key())


@dataclass(frozen=True)
class TraceEvent:
    time: float
    net_instance_id: str
    transition: str
    phase: str  # "consume" | "produce"
    tokens: tuple  # ((instance_id, place, token), ...)
    firing: int = field(compare=False)
    binding: Mapping[str, Any] = field(compare=False, repr=False)
    sync_binding: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def to_record(self) -> dict:
        return {
            "time": self.time,
            "net_instance_id": self.net_instance_id,
            "transition": self.transition,
            "phase": self.phase,
            "tokens": [[inst, place, tok] for inst, place, tok in self.tokens],
        }


def _json_default(obj):
    if isinstance(obj, NetInstance):
        return {"net": obj.id}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialise token part {obj!r}")


def trace_to_jsonl(trace) -> str:
    """Newline-delimited JSON, one record per trace event."""
    return "".join(json.dumps(ev.to_record(), default=_json_default, separators=(",", ":")) + "\n" for ev in trace)


def _enumerate_inputs(marking, ct: CompiledTransition, prune=None) -> Iterator[tuple[dict, tuple, tuple]]:
    """All (binding, consumed, read) satisfying arcs and guard, in token order.

    ``prune`` is an optional ``(stage, predicate)``: partial bindings of the
    first ``stage`` arcs failing ``predicate`` are dropped early.
    """
    inputs = ct.inputs
    for arc, _ in inputs:
        if len(marking.tokens(arc.place)) < arc.weight:
            return
    guard = ct.guard
    stage = ct.guard_stage
    prune_stage, keep = prune if prune is not None else (-1, None)

    def rec(i, binding, consumed, read, used):
        if i == stage and guard is not None and not guard(binding):
            return
        if i == prune_stage and not keep(binding):
            return
        if i == len(inputs):
            yield binding, tuple(consumed), tuple(read)
            return
        arc, pattern = inputs[i]
        tokens = marking.tokens(arc.place)
        taken = used.get(arc.place, ())
        free = [k for k in range(len(tokens)) if k not in taken]
        if len(free) < arc.weight:
            return
        for combo in combinations(free, arc.weight):
            b = binding
            for k in combo:
                b = pattern.match(tokens[k], b)
                if b is None:
                    break
            if b is None:
                continue
            pairs = [(arc.place, tokens[k]) for k in combo]
            new_used = dict(used)
            new_used[arc.place] = taken + combo
            if arc.kind == "in":
                yield from rec(i + 1, b, consumed + pairs, read, new_used)
            else:
                yield from rec(i + 1, b, consumed, read + pairs, new_used)

    yield from rec(0, {}, [], [], {})


class SimulationState:
    """Clock, future-event list, net instances, RNG and trace of one run."""

    def __init__(self, root: NetInstance, seed: int | None = 0, max_events: int = DEFAULT_MAX_EVENTS):
        self.root = root
        self.clock = 0.0
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.max_events = max_events
        self.events = 0
        self.trace: list[TraceEvent] = []
        self.instances: dict[str, NetInstance] = {}
        self.parent: dict[str, str] = {}
        self._fel: list = []
        self._pending: dict[int, tuple[Firing, list]] = {}
        self._seq = 0
        self._fid = 0
        self._disabled: dict[tuple[str, int], tuple[int, int]] = {}
        self._child_version = 0
        self._offer_cache: dict[tuple[str, str], tuple[int, bool]] = {}
        self._register(root, None)

    # -- instance registry -------------------------------------------------

    def _register(self, inst: NetInstance, parent: NetInstance | None) -> None:
        if inst.id in self.instances:
            if self.instances[inst.id] is not inst:
                raise ValueError(f"two net instances share the id {inst.id!r}")
            return
        self.instances[inst.id] = inst
        if parent is not None:
            self.parent[inst.id] = parent.id
        for place in inst.marking.places():
            for tok in inst.marking.tokens(place):
                for child in child_instances(tok):
                    self._register(child, inst)

    def _touch(self, inst: NetInstance) -> None:
        inst.version += 1
        if inst.id in self.parent:
            self._child_version += 1

    # -- enabling ----------------------------------------------------------

    def _offers(self, child, channel: str) -> bool:
        """Whether ``child`` currently has an enabled uplink on ``channel``."""
        if not isinstance(child, NetInstance) or self.instances.get(child.id) is not child:
            return False
        key = (child.id, channel)
        hit = self._offer_cache.get(key)
        if hit is not None and hit[0] == child.version:
            return hit[1]
        ok = any(
            next(_enumerate_inputs(child.marking, cct), None) is not None
            for cct in child.definition.compiled()
            if cct.transition.uplink == channel
        )
        self._offer_cache[key] = (child.version, ok)
        return ok

    def _firings_of(self, inst: NetInstance, ct: CompiledTransition) -> Iterator[Firing]:
        link = ct.transition.downlink
        if link is None:
            for binding, consumed, read in _enumerate_inputs(inst.marking, ct):
                yield Firing(Part(inst, ct, binding, consumed, read))
            return
        var, channel = link
        prune = (ct.link_stage, lambda b: self._offers(b[var], channel))
        for binding, consumed, read in _enumerate_inputs(inst.marking, ct, prune):
            main = Part(inst, ct, binding, consumed, read)
            child = binding[var]
            for cct in child.definition.compiled():
                if cct.transition.uplink != channel:
                    continue
                for cb, cc, cr in _enumerate_inputs(child.marking, cct):
                    yield Firing(main, Part(child, cct, cb, cc, cr))

    def _candidates(self) -> Iterator[tuple[NetInstance, CompiledTransition]]:
        for inst in list(self.instances.values()):
            is_root = inst.id not in self.parent
            for ct in inst.definition.compiled():
                if ct.transition.uplink is not None and not is_root:
                    continue
                yield inst, ct

    def enabled(self) -> list[Firing]:
        """Every enabled firing, in deterministic priority order."""
        return [f for inst, ct in self._candidates() for f in self._firings_of(inst, ct)]

    def _version_key(self, inst, ct):
        return (inst.version, self._child_version if ct.transition.downlink else 0)

    def _next_firing(self) -> Firing | None:
        for inst, ct in self._candidates():
            cache_key = (inst.id, ct.index)
            vkey = self._version_key(inst, ct)
            if self._disabled.get(cache_key) == vkey:
                continue
            chooser = ct.transition.chooser
            if chooser is None:
                first = next(self._firings_of(inst, ct), None)
            else:
                options = list(self._firings_of(inst, ct))
                first = options[chooser([f.binding for f in options], self)] if options else None
            if first is None:
                self._disabled[cache_key] = vkey
                continue
            return self._resolve_race(first)
        return None

    def _resolve_race(self, firing: Firing) -> Firing:
        part = firing.raced_part()
        if part is None:
            return firing
        label = part.ct.transition.race
        rivals = []
        owner = firing.main.instance
        for other in (f for ct in owner.definition.compiled() for f in self._firings_of(owner, ct)):
            op = other.raced_part()
            if (
                op is not None
                and op.instance is part.instance
                and op.ct.transition.race == label
                and op.consumed == part.consumed
            ):
                rivals.append(other)
        best, best_delay = firing, None
        for other in rivals:
            d = self._sample_delay(other, allow_models=False)
            if best_delay is None or d < best_delay:
                best, best_delay = other, d
        best.delay = best_delay
        return best

    # -- firing ------------------------------------------------------------

    def _sample_delay(self, firing: Firing, allow_models: bool = True) -> float:
        total = 0.0
        for part in firing.parts():
            timing = part.instance.definition.timing.get(part.name)
            if timing is None:
                continue
            if callable(timing):
                if not allow_models:
                    raise ValueError(f"transition {part.name!r} uses a delay model and cannot race")
                total += float(timing(self, firing))
            else:
                total += timing.sample(self.rng)
        return total

    def fire(self, firing: Firing, _checked: bool = False) -> None:
        """Start ``firing`` now: consume inputs and schedule its completion."""
        if not _checked:
            want = firing.key()
            ct = firing.main.ct
            if not any(f.key() == want for f in self._firings_of(firing.main.instance, ct)):
                raise NotEnabled(f"{firing.transition} is not enabled under {firing.binding}")
            if firing.main.instance.id in self.parent and ct.transition.uplink is not None:
                raise NotEnabled(f"{firing.transition} only fires through its channel")
        self._fid += 1
        firing.fid = self._fid
        firing.start = self.clock
        tokens = []
        for part in firing.parts():
            for place, tok in part.consumed:
                part.instance.marking.remove(place, tok)
                tokens.append((part.instance.id, place, tok))
            if part.consumed:
                self._touch(part.instance)
        delay = firing.delay if firing.delay is not None else self._sample_delay(firing)
        if delay < 0 or math.isnan(delay):
            raise ValueError(f"negative delay {delay} for {firing.transition}")
        firing.delay = delay
        self._record(firing, "consume", tokens)
        if math.isfinite(delay):
            entry = [self.clock + delay, self._next_seq(), firing.fid, True]
            heapq.heappush(self._fel, entry)
            self._pending[firing.fid] = (firing, entry)
        self._count()

    def _complete(self, firing: Firing) -> None:
        tokens = []
        for part in firing.parts():
            produced = False
            for arc, expr in part.ct.outputs:
                value = () if expr is None else expr(part.binding)
                for _ in range(arc.weight):
                    part.instance.marking.add(arc.place, value)
                    tokens.append((part.instance.id, arc.place, value))
                    produced = True
                    for child in child_instances(value):
                        self._register(child, part.instance)
            if produced:
                self._touch(part.instance)
        self._record(firing, "produce", tokens)
        self._count()

    def _record(self, firing: Firing, phase: str, tokens: list) -> None:
        if firing.sync is None:
            inst_id, name = firing.main.instance.id, firing.main.name
            sync_binding = None
        else:
            inst_id = f"{firing.main.instance.id}|{firing.sync.instance.id}"
            name = f"{firing.main.name}|{firing.sync.name}"
            sync_binding = firing.sync.binding
        self.trace.append(
            TraceEvent(self.clock, inst_id, name, phase, tuple(tokens), firing.fid, firing.main.binding, sync_binding)
        )

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _count(self) -> None:
        self.events += 1
        if self.events > self.max_events:
            raise BudgetExceeded(self.max_events, self)

    # -- event list --------------------------------------------------------

    def pending(self) -> list[tuple[float, Firing]]:
        """In-flight firings with their scheduled completion times."""
        return [(entry[0], f) for f, entry in self._pending.values()]

    def retime(self, firing: Firing, when: float) -> None:
        """Move the completion of an in-flight firing to ``when``."""
        if firing.fid not in self._pending:
            raise KeyError(f"firing {firing.fid} is not in flight")
        if when < self.clock:
            raise ValueError("cannot retime into the past")
        _, entry = self._pending[firing.fid]
        if entry[0] == when:
            return
        entry[3] = False
        new = [when, self._next_seq(), firing.fid, True]
        heapq.heappush(self._fel, new)
        self._pending[firing.fid] = (firing, new)

    def _peek(self):
        while self._fel and not self._fel[0][3]:
            heapq.heappop(self._fel)
        return self._fel[0] if self._fel else None

    # -- main loop ---------------------------------------------------------

    def run(self, until: float | None = None, when: Callable[["SimulationState"], bool] | None = None):
        """Advance until quiescence, time ``until`` or ``when(state)`` holds.

        Returns the trace.  Raises :class:`BudgetExceeded` when more than
        ``max_events`` consume/produce events occur.
        """
        while True:
            while True:
                firing = self._next_firing()
                if firing is None:
                    break
                self.fire(firing, _checked=True)
                if when is not None and when(self):
                    return self.trace
            head = self._peek()
            if head is None:
                return self.trace
            if until is not None and head[0] > until:
                self.clock = max(self.clock, until)
                return self.trace
            heapq.heappop(self._fel)
            self.clock = head[0]
            firing, _ = self._pending.pop(head[2])
            self._complete(firing)
            if when is not None and when(self):
                return self.trace


def enabled_bindings(state_or_instance) -> list[tuple[str, dict]]:
    """(transition, binding) pairs enabled in a state or a bare instance."""
    state = state_or_instance
    if isinstance(state_or_instance, NetInstance):
        state = SimulationState(state_or_instance, seed=0)
    return [(f.transition, f.binding) for f in state.enabled()]


def fire(state: SimulationState, transition: str, binding: Mapping[str, Any] | None = None, instance: str | None = None):
    """Fire the first enabled firing of ``transition`` matching ``binding``."""
    for f in state.enabled():
        if f.transition != transition:
            continue
        if instance is not None and f.instance.id != instance:
            continue
        if binding is not None and any(f.binding.get(k) != v for k, v in binding.items()):
            continue
        state.fire(f, _checked=True)
        return f
    raise NotEnabled(f"{transition} is not enabled")


def run(state: SimulationState, until: float | None = None, when=None):
    return state.run(until=until, when=when)
