"""Static structure of hierarchical timed nets.

A :class:`NetDefinition` is immutable once validated and may be shared
by any number of :class:`NetInstance` objects.  Tokens are plain Python
values; a token may itself be (or contain) a ``NetInstance``, which is
how the nets-within-nets hierarchy is expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Sequence

from .expr import Expression, InscriptionError, Pattern

TOKEN_KINDS = ("tuple", "net", "counter")


class StructuralError(ValueError):
    """The net definition violates a structural invariant."""


class MarkingError(ValueError):
    """A marking puts tokens in unknown places or of the wrong kind."""


@dataclass(frozen=True)
class Place:
    name: str
    kind: str = "tuple"

    def __post_init__(self):
        if self.kind not in TOKEN_KINDS:
            raise StructuralError(f"place {self.name!r}: unknown token kind {self.kind!r}")


@dataclass(frozen=True)
class Transition:
    """A transition and its synchronisation / conflict annotations.

    ``uplink`` names a channel this transition offers to its parent net;
    such a transition only fires together with a parent transition whose
    ``downlink`` is ``(variable, channel)`` and whose binding maps
    ``variable`` to this instance.  A root instance has no parent, so
    its uplink transitions fire on their own.

    Transitions sharing a ``race`` label within one net resolve conflicts
    over the same input tokens by sampling all delays and keeping the
    earliest.  ``chooser`` may pick one binding among the enabled ones
    (it receives the candidates in deterministic order and the
    simulation state).
    """

    name: str
    guard: str | None = None
    uplink: str | None = None
    downlink: tuple[str, str] | None = None
    race: str | None = None
    chooser: Callable[[Sequence[Any], Any], int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.uplink and self.downlink:
            raise StructuralError(f"transition {self.name!r} cannot carry both an uplink and a downlink")


@dataclass(frozen=True)
class Arc:
    """``kind`` is ``in`` (consume), ``read`` (test only) or ``out`` (produce)."""

    place: str
    transition: str
    kind: str = "in"
    weight: int = 1
    inscription: str | None = None

    def __post_init__(self):
        if self.kind not in ("in", "out", "read"):
            raise StructuralError(f"arc {self.place}/{self.transition}: kind must be in/out/read")
        if not isinstance(self.weight, int) or self.weight < 1:
            raise StructuralError(f"arc {self.place}/{self.transition}: weight must be a positive int")


def arc_in(place, transition, inscription=None, weight=1) -> Arc:
    return Arc(place, transition, "in", weight, inscription)


def arc_read(place, transition, inscription=None, weight=1) -> Arc:
    return Arc(place, transition, "read", weight, inscription)


def arc_out(place, transition, inscription=None, weight=1) -> Arc:
    return Arc(place, transition, "out", weight, inscription)


@dataclass(frozen=True)
class CompiledTransition:
    transition: Transition
    index: int
    inputs: tuple[tuple[Arc, Pattern], ...]
    outputs: tuple[tuple[Arc, Expression | None], ...]
    guard: Expression | None
    variables: frozenset[str]
    # the guard is evaluated as soon as the first `guard_stage` input arcs are bound
    guard_stage: int = 0
    # the downlink variable is bound once the first `link_stage` input arcs are
    link_stage: int = 0


class NetDefinition:
    """Places, transitions, arcs, channels and timing of one net type.

    ``timing`` maps a transition name to a delay distribution or to a
    delay model (a callable ``model(state, firing) -> seconds``).
    Transitions absent from it are immediate.
    """

    def __init__(
        self,
        name: str,
        places: Iterable[Place] = (),
        transitions: Iterable[Transition] = (),
        arcs: Iterable[Arc] = (),
        channels: Iterable[str] = (),
        timing: Mapping[str, Any] | None = None,
    ):
        self.name = name
        self.places = tuple(places)
        self.transitions = tuple(transitions)
        self.arcs = tuple(arcs)
        self.channels = tuple(channels)
        self.timing = MappingProxyType(dict(timing or {}))
        self._place_index = {p.name: p for p in self.places}
        self._compiled = self._validate()
        self._by_name = {c.transition.name: c for c in self._compiled}

    def _validate(self) -> tuple[CompiledTransition, ...]:
        if len(self._place_index) != len(self.places):
            raise StructuralError(f"net {self.name!r}: duplicate place names")
        names = [t.name for t in self.transitions]
        if len(set(names)) != len(names):
            raise StructuralError(f"net {self.name!r}: duplicate transition names")
        if len(set(self.channels)) != len(self.channels):
            raise StructuralError(f"net {self.name!r}: channel declared more than once")
        known_t = set(names)
        for arc in self.arcs:
            if arc.place not in self._place_index:
                raise StructuralError(f"net {self.name!r}: arc references unknown place {arc.place!r}")
            if arc.transition not in known_t:
                raise StructuralError(f"net {self.name!r}: arc references unknown transition {arc.transition!r}")
        for tname in self.timing:
            if tname not in known_t:
                raise StructuralError(f"net {self.name!r}: timing for unknown transition {tname!r}")

        compiled = []
        for index, t in enumerate(self.transitions):
            if t.uplink is not None and t.uplink not in self.channels:
                raise StructuralError(f"transition {t.name!r}: uplink channel {t.uplink!r} not declared")
            try:
                inputs = tuple(
                    (a, Pattern(a.inscription))
                    for a in self.arcs
                    if a.transition == t.name and a.kind in ("in", "read")
                )
                bound = frozenset().union(*(p.variables for _, p in inputs)) if inputs else frozenset()
                guard = Expression(t.guard) if t.guard else None
                outputs = tuple(
                    (a, Expression(a.inscription) if a.inscription is not None else None)
                    for a in self.arcs
                    if a.transition == t.name and a.kind == "out"
                )
            except InscriptionError as exc:
                raise StructuralError(f"transition {t.name!r}: {exc}") from None
            if guard is not None and not guard.variables <= bound:
                missing = sorted(guard.variables - bound)
                raise StructuralError(f"transition {t.name!r}: guard uses unbound variables {missing}")
            for arc, expr in outputs:
                if expr is not None and not expr.variables <= bound:
                    missing = sorted(expr.variables - bound)
                    raise StructuralError(
                        f"transition {t.name!r}: output to {arc.place!r} uses unbound variables {missing}"
                    )
            if t.downlink is not None and t.downlink[0] not in bound:
                raise StructuralError(f"transition {t.name!r}: downlink variable {t.downlink[0]!r} is unbound")
            stage = 0
            if guard is not None:
                seen: set[str] = set()
                while not guard.variables <= seen:
                    seen |= inputs[stage][1].variables
                    stage += 1
            link_stage = 0
            if t.downlink is not None:
                while t.downlink[0] not in inputs[link_stage][1].variables:
                    link_stage += 1
                link_stage += 1
            compiled.append(CompiledTransition(t, index, inputs, outputs, guard, bound, stage, link_stage))
        return tuple(compiled)

    def place(self, name: str) -> Place:
        return self._place_index[name]

    def compiled(self) -> tuple[CompiledTransition, ...]:
        return self._compiled

    def transition(self, name: str) -> CompiledTransition:
        return self._by_name[name]

    def __repr__(self) -> str:
        return f"NetDefinition({self.name!r}, places={len(self.places)}, transitions={len(self.transitions)})"


class Marking:
    """Per-place token lists, kept in insertion (FIFO) order."""

    def __init__(self, tokens: Mapping[str, Iterable[Any]] | None = None):
        self._tokens: dict[str, list] = {}
        for place, toks in (tokens or {}).items():
            self._tokens[place] = list(toks)

    def tokens(self, place: str) -> list:
        return self._tokens.get(place, [])

    def count(self, place: str) -> int:
        return len(self._tokens.get(place, ()))

    def places(self) -> list[str]:
        return [p for p, toks in self._tokens.items() if toks]

    def add(self, place: str, token: Any) -> None:
        self._tokens.setdefault(place, []).append(token)

    def remove(self, place: str, token: Any) -> None:
        toks = self._tokens.get(place)
        if not toks:
            raise MarkingError(f"no token {token!r} in place {place!r}")
        for i, t in enumerate(toks):
            if t is token or t == token:
                del toks[i]
                return
        raise MarkingError(f"no token {token!r} in place {place!r}")

    def snapshot(self) -> dict[str, list]:
        return {p: list(t) for p, t in self._tokens.items() if t}

    def __repr__(self) -> str:
        return f"Marking({self.snapshot()!r})"


class NetInstance:
    """A live net: a definition plus its current marking."""

    def __init__(self, definition: NetDefinition, marking: Marking, instance_id: str):
        self.definition = definition
        self.marking = marking
        self.id = instance_id
        self.version = 0

    def __repr__(self) -> str:
        return f"<net {self.id}>"

    def __lt__(self, other: "NetInstance") -> bool:
        return self.id < other.id


def check_token(place: Place, token: Any) -> None:
    if place.kind == "net":
        if not isinstance(token, NetInstance):
            raise MarkingError(f"place {place.name!r} holds net references, got {token!r}")
    elif place.kind == "counter":
        if not isinstance(token, int) or isinstance(token, bool) or token < 0:
            raise MarkingError(f"place {place.name!r} holds non-negative int counters, got {token!r}")
    elif isinstance(token, NetInstance):
        raise MarkingError(f"place {place.name!r} holds tuples; wrap net references in a tuple")


def build_net(
    definition: NetDefinition,
    initial_marking: Marking | Mapping[str, Iterable[Any]] | None = None,
    instance_id: str | None = None,
) -> NetInstance:
    """Validate ``initial_marking`` against ``definition`` and instantiate it."""
    marking = initial_marking if isinstance(initial_marking, Marking) else Marking(initial_marking)
    for place_name in marking.places():
        try:
            place = definition.place(place_name)
        except KeyError:
            raise MarkingError(f"marking puts tokens in unknown place {place_name!r}") from None
        for token in marking.tokens(place_name):
            check_token(place, token)
    if instance_id is None:
        instance_id = definition.name
    return NetInstance(definition, marking, instance_id)


def child_instances(token: Any) -> Iterable[NetInstance]:
    """Net references held by a token, searching nested tuples."""
    if isinstance(token, NetInstance):
        yield token
    elif isinstance(token, tuple):
        for part in token:
            yield from child_instances(part)
