import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from podnet.k8s import PodSpec, RestartPolicy, TimingProfile
from podnet.k8s.nets import build_container_instance, container_net
from podnet.petri import (
    BudgetExceeded,
    Constant,
    Empirical,
    Exponential,
    MarkingError,
    NetDefinition,
    Never,
    NormalTruncated,
    NotEnabled,
    Place,
    SimulationState,
    StructuralError,
    Transition,
    arc_in,
    arc_out,
    build_net,
    enabled_bindings,
    fire,
    trace_to_jsonl,
)
from podnet.petri.distributions import from_dict, to_dict


def _names(state_or_inst):
    return sorted({t for t, _ in enabled_bindings(state_or_inst)})


def _chain(delays):
    """P0 -> T0 -> P1 -> T1 -> ... with the given delays."""
    places = [Place(f"P{i}") for i in range(len(delays) + 1)]
    transitions = [Transition(f"T{i}") for i in range(len(delays))]
    arcs = []
    for i in range(len(delays)):
        arcs += [arc_in(f"P{i}", f"T{i}", "x"), arc_out(f"P{i + 1}", f"T{i}", "x")]
    timing = {f"T{i}": d for i, d in enumerate(delays)}
    return NetDefinition("chain", places, transitions, arcs, timing=timing)


# -- structure ---------------------------------------------------------------


def test_empty_net_has_nothing_enabled():
    inst = build_net(NetDefinition("empty"))
    assert enabled_bindings(inst) == []


def test_arc_to_undeclared_place_is_rejected():
    with pytest.raises(StructuralError):
        NetDefinition("bad", [Place("A")], [Transition("T")], [arc_in("X", "T", "x")])


def test_marking_in_unknown_place_is_rejected():
    net = NetDefinition("n", [Place("A")])
    with pytest.raises(MarkingError):
        build_net(net, {"B": [1]})


def test_counter_place_rejects_negative_tokens():
    net = NetDefinition("n", [Place("A", "counter")])
    with pytest.raises(MarkingError):
        build_net(net, {"A": [-1]})


def test_container_net_starts_with_only_creation_enabled():
    pod = PodSpec("pod-000", containers=1)
    inst = build_container_instance(container_net(TimingProfile(Constant(2.048))), pod)
    assert _names(inst) == ["T1"]


# -- enabling ----------------------------------------------------------------


def test_transition_with_empty_input_place_is_not_enabled():
    inst = build_net(_chain([Constant(1.0)]), {"P1": [("a",)]})
    assert enabled_bindings(inst) == []


def _pending_net():
    return NetDefinition(
        "pod",
        [Place("Pending"), Place("Running")],
        [Transition("podRunning", guard="pend == 0")],
        [arc_in("Pending", "podRunning", "(pid, pend)"), arc_out("Running", "podRunning", "pid")],
    )


@pytest.mark.parametrize("pend, enabled", [(2, False), (0, True)])
def test_guard_on_pending_counter(pend, enabled):
    inst = build_net(_pending_net(), {"Pending": [("p1", pend)]})
    assert (_names(inst) == ["podRunning"]) is enabled


def test_downlink_without_offering_child_is_not_enabled():
    child_def = NetDefinition("child", [Place("A")], [Transition("U", uplink="go")], [arc_in("A", "U", "x")],
                              channels=["go"])
    parent_def = NetDefinition(
        "parent",
        [Place("Kids", "net")],
        [Transition("D", downlink=("k", "go"))],
        [arc_in("Kids", "D", "k"), arc_out("Kids", "D", "k")],
        channels=["go"],
    )
    child = build_net(child_def, {}, "kid")  # A is empty, so U offers nothing
    state = SimulationState(build_net(parent_def, {"Kids": [child]}, "root"))
    assert state.enabled() == []


def test_downlink_fires_jointly_with_child():
    child_def = NetDefinition("child", [Place("A"), Place("B")], [Transition("U", uplink="go")],
                              [arc_in("A", "U", "x"), arc_out("B", "U", "x")], channels=["go"],
                              timing={"U": Constant(1.5)})
    parent_def = NetDefinition(
        "parent",
        [Place("Kids", "net"), Place("Pend", "counter")],
        [Transition("D", downlink=("k", "go"))],
        [arc_in("Kids", "D", "k"), arc_out("Kids", "D", "k"), arc_in("Pend", "D", "p"), arc_out("Pend", "D", "p - 1")],
        channels=["go"],
        timing={"D": Constant(0.5)},
    )
    child = build_net(child_def, {"A": [("c0",), ("c1",)]}, "kid")
    root = build_net(parent_def, {"Kids": [child], "Pend": [2]}, "root")
    state = SimulationState(root)
    state.run()
    assert root.marking.tokens("Pend") == [0]
    assert sorted(child.marking.tokens("B")) == [("c0",), ("c1",)]
    produced = [ev for ev in state.trace if ev.phase == "produce"]
    assert [ev.transition for ev in produced] == ["D|U", "D|U"]
    assert [ev.net_instance_id for ev in produced] == ["root|kid", "root|kid"]
    # joint delay is the sum of both sides
    assert [ev.time for ev in produced] == [2.0, 4.0]


# -- firing and timing -------------------------------------------------------


def test_constant_delay_reaches_next_place_on_time():
    pod = PodSpec("pod-000", containers=1)
    inst = build_container_instance(container_net(TimingProfile(Constant(2.048), t2=Never())), pod)
    state = SimulationState(inst)
    state.run(when=lambda s: s.trace[-1].phase == "produce")
    assert inst.marking.tokens("Running") == ["pod-000/c0"]
    assert state.trace[-1].transition == "T1"
    assert state.clock == 2.048


def test_zero_delay_completes_after_earlier_same_time_events():
    net = NetDefinition(
        "z",
        [Place("A"), Place("B"), Place("C"), Place("D")],
        [Transition("slow"), Transition("fast")],
        [arc_in("A", "slow", "x"), arc_out("B", "slow", "x"), arc_in("C", "fast", "x"), arc_out("D", "fast", "x")],
        timing={"slow": Constant(0.0), "fast": Constant(0.0)},
    )
    state = SimulationState(build_net(net, {"A": [(1,)], "C": [(2,)]}))
    state.run()
    produced = [ev.transition for ev in state.trace if ev.phase == "produce"]
    assert produced == ["slow", "fast"]
    assert all(ev.time == 0.0 for ev in state.trace)


def test_manual_fire_and_not_enabled():
    state = SimulationState(build_net(_chain([Constant(1.0), Constant(2.0)]), {"P0": [("a",)]}))
    fire(state, "T0")
    with pytest.raises(NotEnabled):
        fire(state, "T1")
    state.run()
    assert state.clock == 3.0
    assert state.root.marking.tokens("P2") == [("a",)]


def test_quiescent_net_leaves_empty_trace():
    state = SimulationState(build_net(_chain([Constant(1.0)])))
    assert state.run() == []
    assert state.clock == 0.0


def test_never_delay_schedules_no_completion():
    state = SimulationState(build_net(_chain([Never()]), {"P0": [("a",)]}))
    state.run()
    assert [ev.phase for ev in state.trace] == ["consume"]
    assert state.pending() == []
    assert state.root.marking.count("P1") == 0


def test_same_seed_gives_identical_trace_bytes():
    net = _chain([Exponential(1.0), NormalTruncated(2.0, 1.0), Empirical((0.5, 1.5, 2.5))])
    marking = {"P0": [(i,) for i in range(20)]}

    def once(seed):
        state = SimulationState(build_net(net, marking), seed=seed)
        state.run()
        return trace_to_jsonl(state.trace)

    assert once(11) == once(11)
    assert once(11) != once(12)


def test_restart_always_exhausts_budget():
    pod = PodSpec("pod-000", containers=1, restart_policy=RestartPolicy.ALWAYS)
    timing = TimingProfile(Constant(1.0), t2=Constant(1.0), t4_t5=Constant(0.1))
    state = SimulationState(build_container_instance(container_net(timing), pod), max_events=100)
    with pytest.raises(BudgetExceeded):
        state.run()


def test_race_keeps_earliest_delay():
    net = NetDefinition(
        "race",
        [Place("A"), Place("Win"), Place("Lose")],
        [Transition("fast", race="r"), Transition("slow", race="r")],
        [arc_in("A", "fast", "x"), arc_out("Win", "fast", "x"), arc_in("A", "slow", "x"), arc_out("Lose", "slow", "x")],
        timing={"fast": Constant(1.0), "slow": Constant(5.0)},
    )
    state = SimulationState(build_net(net, {"A": [(1,)]}))
    state.run()
    assert state.root.marking.tokens("Win") == [(1,)]
    assert state.clock == 1.0


def test_trace_jsonl_records_have_the_documented_fields():
    state = SimulationState(build_net(_chain([Constant(1.0)]), {"P0": [("a",)]}))
    state.run()
    records = [json.loads(line) for line in trace_to_jsonl(state.trace).splitlines()]
    assert [r["phase"] for r in records] == ["consume", "produce"]
    for r in records:
        assert set(r) == {"time", "net_instance_id", "transition", "phase", "tokens"}
    assert records[1]["tokens"] == [["chain", "P1", ["a"]]]


def test_until_stops_the_clock():
    state = SimulationState(build_net(_chain([Constant(10.0)]), {"P0": [("a",)]}))
    state.run(until=4.0)
    assert state.clock == 4.0
    assert state.root.marking.count("P1") == 0


# -- distributions -----------------------------------------------------------


def test_constant_samples_itself():
    assert Constant(30.0).sample(np.random.default_rng(0)) == 30.0


def test_truncated_normal_mean_matches_numerical_integral():
    mu, sigma = 0.11, 0.05
    x = NormalTruncated(mu, sigma).samples(np.random.default_rng(3), 1_000_000)
    assert x.min() >= 0
    # oracle: integrate the conditioned density directly
    mass = 1 - stats.norm.cdf(0, mu, sigma)
    expected, _ = integrate.quad(lambda v: v * stats.norm.pdf(v, mu, sigma) / mass, 0, math.inf)
    band = 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - expected) < band
    assert NormalTruncated(mu, sigma).mean() == pytest.approx(expected, rel=1e-9)


def test_truncated_normal_with_mostly_negative_mass_stays_non_negative():
    x = NormalTruncated(-1.0, 0.5).samples(np.random.default_rng(1), 10_000)
    assert x.min() >= 0


def test_never_is_infinite():
    assert Never().sample(np.random.default_rng(0)) == math.inf


@pytest.mark.parametrize(
    "dist",
    [Constant(2.5), NormalTruncated(1.0, 0.2), Exponential(3.0), Empirical((1.0, 2.0)), Never()],
)
def test_distribution_dict_round_trip(dist):
    assert from_dict(to_dict(dist)) == dist


def test_unknown_distribution_name():
    with pytest.raises(ValueError):
        from_dict({"dist": "pareto", "params": {}})
