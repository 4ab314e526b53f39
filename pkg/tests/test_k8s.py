import json
from fractions import Fraction

import pytest
from conftest import cluster, deployment

from podnet.k8s import (
    ClusterSpec,
    DeploymentSpec,
    Machine,
    NonIntegralLayout,
    NoRestartObserved,
    PodSpec,
    RegistryModel,
    RestartPolicy,
    TimingProfile,
    build_deployment,
    build_system_net,
    image_download_delay,
    pull_needed,
    restart_cycle_time,
    schedule_step,
    simulate,
)
from podnet.k8s.config import ConfigError, load_scenario, parse_scenario
from podnet.k8s.scheduler import MachineState, PodRequest
from podnet.petri import BudgetExceeded, Constant, NormalTruncated, SimulationState, enabled_bindings

# -- layouts -----------------------------------------------------------------


@pytest.mark.parametrize("C, rho, pods, per_pod", [(40, 0.25, 10, 4), (1, 1, 1, 1), (40, Fraction(1, 5), 8, 5)])
def test_build_deployment_layout(C, rho, pods, per_pod):
    d = build_deployment(C, rho, PodSpec(), TimingProfile(Constant(1.0)))
    assert (d.n_pods, d.containers_per_pod) == (pods, per_pod)
    assert [p.pod_id for p in d.pods][:1] == ["pod-000"]


@pytest.mark.parametrize("C, rho", [(10, 0.3), (10, 0), (10, 1.5), (0, 1)])
def test_build_deployment_rejects_impossible_layouts(C, rho):
    with pytest.raises(NonIntegralLayout):
        build_deployment(C, rho, PodSpec(), TimingProfile(Constant(1.0)))


def test_restart_policy_parsing():
    assert RestartPolicy.parse("OnFailure") is RestartPolicy.ON_FAILURE
    assert RestartPolicy.parse(0) is RestartPolicy.ALWAYS
    with pytest.raises(ValueError):
        RestartPolicy.parse("sometimes")


# -- system net structure ----------------------------------------------------


def test_three_machines_and_no_pods():
    machines = (Machine("m1", 8, 1), Machine("m2", 16, 2), Machine("m3", 32, 4))
    empty = DeploymentSpec(0, Fraction(1), (), TimingProfile(Constant(1.0)))
    root = build_system_net(ClusterSpec(machines), empty)
    assert sorted(root.marking.tokens("Machines")) == [("m1", 8, 1), ("m2", 16, 2), ("m3", 32, 4)]
    assert enabled_bindings(SimulationState(root)) == []


def test_pod_runs_only_after_every_container_is_created():
    res = simulate(cluster(1), deployment(3, Fraction(1, 3), t1=1.0))
    (pod,) = res.pods.values()
    creations = [c for c in res.creations if c.pod_id == pod.pod_id]
    assert len(creations) == 3
    assert pod.running_time == max(c.end for c in creations) == 3.0


def test_restart_always_never_returns_resources():
    d = deployment(1, restart=RestartPolicy.ALWAYS, ram=4.0, cpu=1.0, t2=Constant(5.0))
    res = simulate(cluster(1), d, until=100.0)
    assert res.pods["pod-000"].restarts > 5
    assert res.state.root.marking.tokens("Machines") == [("m1", 28.0, 3.0)]
    with pytest.raises(BudgetExceeded):
        simulate(cluster(1), d, max_events=200)


def test_restart_never_returns_resources_on_success():
    res = simulate(cluster(2), deployment(4, ram=4.0, cpu=1.0))
    assert sorted(res.state.root.marking.tokens("Machines")) == [("m1", 32.0, 4.0), ("m2", 32.0, 4.0)]
    assert {p.phase for p in res.pods.values()} == {"Success"}


def test_failing_container_ends_pod_failed_under_never():
    d = deployment(1, t2=Constant(10.0), t3=Constant(1.0))
    res = simulate(cluster(1), d)
    assert res.pods["pod-000"].phase == "Failed"
    assert res.state.root.marking.tokens("Machines") == [("m1", 32.0, 4.0)]


def test_on_failure_restarts_crashes_but_not_successes():
    d = deployment(1, restart=RestartPolicy.ON_FAILURE, t2=Constant(1.0), t3=Constant(0.5))
    res = simulate(cluster(1), d, until=30.0)
    assert res.pods["pod-000"].restarts >= 5
    d_ok = deployment(1, restart=RestartPolicy.ON_FAILURE, t2=Constant(1.0))
    res_ok = simulate(cluster(1), d_ok)
    assert res_ok.pods["pod-000"].restarts == 0
    assert res_ok.pods["pod-000"].phase == "Success"


# -- scheduler ---------------------------------------------------------------


def test_first_fit_picks_the_machine_with_room():
    placement = schedule_step([PodRequest("p", 4, 1)], [MachineState("m1", 2, 1), MachineState("m2", 8, 2)], "first-fit")
    assert placement.node_id == "m2"
    assert placement.remaining == MachineState("m2", 4, 1)


def test_oversized_pod_waits_in_pending_scheduling():
    assert schedule_step([PodRequest("p", 64, 1)], [MachineState("m1", 32, 4)]) is None
    res = simulate(cluster(2), deployment(1, ram=64.0))
    assert res.pods["pod-000"].phases == [(0.0, "PendingScheduling")]
    assert res.T_t is None
    assert len(res.state.root.marking.tokens("PendingScheduling")) == 1


def test_oversized_pod_does_not_block_the_queue():
    pending = [PodRequest("big", 64, 1), PodRequest("small", 1, 1)]
    assert schedule_step(pending, [MachineState("m1", 32, 4)]).pod_id == "small"


@pytest.mark.parametrize("mode, expected", [("first-fit", {"m1": 16}), ("spread", {f"m{i}": 2 for i in range(1, 9)})])
def test_placement_modes(mode, expected):
    res = simulate(cluster(8, scheduler_mode=mode), deployment(16, t1=0.5))
    counts = {}
    for p in res.pods.values():
        counts[p.node] = counts.get(p.node, 0) + 1
    assert counts == expected


def test_seeded_random_placement_is_reproducible():
    c = cluster(8, scheduler_mode="seeded-random")
    nodes = [[p.node for p in simulate(c, deployment(16), seed=5).pods.values()] for _ in range(2)]
    assert nodes[0] == nodes[1]


# -- downloads ---------------------------------------------------------------


def test_preloaded_image_needs_no_pull():
    m = Machine("m1", 32, 4, preloaded_images=frozenset({"app"}))
    assert not pull_needed(m, "app")
    assert pull_needed(m, "other")
    assert not pull_needed(Machine("m2", 32, 4), "app", {("m2", "app")})


def test_single_download_matches_registry_rate():
    # rate chosen so that one 1.225 GB pull takes 29.24 s
    bw = 8 * 1.225 / 29.24
    m = Machine("m1", 32, 4, rtt_ms=0.0)
    assert image_download_delay(m, 1.225, 1, bw) == pytest.approx(29.24)
    assert bw / 8 == pytest.approx(0.0419, abs=5e-4)


def test_concurrent_downloads_share_bandwidth_equally():
    m = Machine("m1", 32, 4, rtt_ms=0.0)
    assert image_download_delay(m, 1.225, 8, 1.0) == pytest.approx(8 * image_download_delay(m, 1.225, 1, 1.0))
    res = simulate(cluster(8, preloaded=False, rtt_ms=0.0), deployment(8))
    ends = {d.end for d in res.downloads}
    assert len(res.downloads) == 8
    assert len(ends) == 1
    assert ends.pop() == pytest.approx(image_download_delay(Machine("m", 1, 1, 0.0), 1.225, 8, 1.0))


def test_simultaneous_downloads_follow_processor_sharing():
    # two pulls start together and split 1 GB/s, so each 1 GB image takes 2 s
    c = cluster(2, preloaded=False, rtt_ms=0.0, registry_bandwidth_gbps=8.0)  # 1 GB/s
    model = RegistryModel(c, {"app": 1.0})
    assert model.rate_gb_s == 1.0
    res = simulate(c, deployment(2, image_gb=1.0))
    assert [round(d.end - d.start, 9) for d in res.downloads] == [2.0, 2.0]


# -- deployment and termination times ---------------------------------------


@pytest.mark.parametrize("C", [8, 16, 40])
def test_deployment_time_scales_with_pods_per_machine(C):
    res = simulate(cluster(8), deployment(C))
    assert res.T_d == pytest.approx(C / 8 * 2.048, abs=1e-9)
    assert res.T_down == 0


def test_single_container_deployment_equals_t1():
    res = simulate(cluster(1), deployment(1, t1=3.3))
    assert res.T_d == 3.3


def test_termination_of_ten_container_pod():
    res = simulate(cluster(1), deployment(10, Fraction(1, 10), t6_t7=Constant(0.10), grace_period_s=30.0))
    assert res.termination_durations == {"pod-000": pytest.approx(31.0)}


def test_restart_cycle_time():
    d = deployment(1, t1=2.0, restart=RestartPolicy.ALWAYS, t2=Constant(1.0), t4_t5=Constant(0.15))
    res = simulate(cluster(1), d, until=10.0)
    cycles = restart_cycle_time(res, "pod-000/c0")
    assert cycles and cycles[0] == pytest.approx(2.15)
    with pytest.raises(NoRestartObserved):
        restart_cycle_time(simulate(cluster(1), deployment(1)), "pod-000/c0")


def test_restart_stop_exceeds_graceful_stop_by_ten_ms():
    t = TimingProfile(Constant(1.0))
    assert t.t4_t5.mean() - t.t6_t7.mean() == pytest.approx(0.01)


# -- invariants ---------------------------------------------------------------


@pytest.mark.parametrize("mode", ["per-machine", "per-pod-parallel"])
def test_creation_parallelism_is_bounded_by_machines(mode):
    c = cluster(4, creation_mode=mode)
    res = simulate(c, deployment(24, Fraction(1, 2), t1=1.0))
    # per-machine: one container at a time per node; per-pod-parallel: one pod
    unit = (lambda cr: cr.container_id) if mode == "per-machine" else (lambda cr: cr.pod_id)
    windows = {}
    for cr in res.creations:
        lo, hi = windows.get((cr.node, unit(cr)), (cr.start, cr.end))
        windows[(cr.node, unit(cr))] = (min(lo, cr.start), max(hi, cr.end))
    by_node = {}
    for (node, _), span in windows.items():
        by_node.setdefault(node, []).append(span)
    for spans in by_node.values():
        spans.sort()
        assert all(b[0] >= a[1] - 1e-12 for a, b in zip(spans, spans[1:]))
    assert len(by_node) <= c.n


def test_resources_are_conserved_while_running():
    d = deployment(12, Fraction(1, 3), ram=2.0, cpu=0.5, t2=Constant(50.0))
    res = simulate(cluster(3), d, until=20.0)
    machines = {m: (r, c) for m, r, c in res.state.root.marking.tokens("Machines")}
    hosted = {}
    for p in res.pods.values():
        hosted[p.node] = hosted.get(p.node, 0) + 1
    for node, (ram, cpu) in machines.items():
        k = hosted.get(node, 0)
        assert ram == pytest.approx(32 - k * 3 * 2.0)
        assert cpu == pytest.approx(4 - k * 3 * 0.5)


def test_simulation_is_seed_deterministic():
    from podnet.petri import trace_to_jsonl

    d = deployment(10, t2=NormalTruncated(5.0, 2.0))
    a = simulate(cluster(4, preloaded=False), d, seed=9)
    b = simulate(cluster(4, preloaded=False), d, seed=9)
    assert trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace)


# -- scenario files ---------------------------------------------------------


def _scenario():
    return {
        "cluster": {"n": 2, "machine": {"ram_gb": 32, "cores": 4}},
        "deployment": {"C": 4, "rho": {"pods": 2, "containers": 4}},
        "timing": {"t1": {"dist": "constant", "params": {"d": 1.0}}},
    }


def test_scenario_parses_ratio_and_template():
    sc = parse_scenario(_scenario())
    assert sc.rho == Fraction(1, 2)
    assert [m.node_id for m in sc.cluster.machines] == ["m1", "m2"]
    assert sc.deployment().n_pods == 2


def test_bundled_scenario_loads(configs_dir):
    sc = load_scenario(configs_dir / "deploy_c40_rho1_n8.json")
    assert (sc.C, sc.rho, sc.cluster.n) == (40, 1, 8)


@pytest.mark.parametrize(
    "patch, field",
    [
        (lambda s: s["deployment"].update(rho={"pods": 3, "containers": 4}), "deployment.rho"),
        (lambda s: s["timing"].pop("t1"), "timing.t1"),
        (lambda s: s["timing"].update(t2={"dist": "weird"}), "timing.t2"),
        (lambda s: s["cluster"].update(scheduler_mode="best"), "cluster.scheduler_mode"),
        (lambda s: s["deployment"].update(C="many"), "deployment.C"),
        (lambda s: s.update(run={"seed": -1}), "run.seed"),
        (lambda s: s.update(sweep={"C": [4, 5]}), "sweep"),
        (lambda s: s.update(sweep={"k": [1]}), "sweep.k"),
        (lambda s: s["deployment"].update(pod={"restart_policy": "sometimes"}), "deployment.pod.restart_policy"),
    ],
)
def test_config_errors_name_the_field(patch, field):
    raw = json.loads(json.dumps(_scenario()))
    patch(raw)
    with pytest.raises(ConfigError) as err:
        parse_scenario(raw)
    assert err.value.field == field


def test_sweep_points():
    raw = _scenario()
    raw["sweep"] = {"C": [2, 4], "n": [1, 2]}
    points = [(C, cl.n) for C, _, cl in parse_scenario(raw).points()]
    assert points == [(2, 1), (2, 2), (4, 1), (4, 2)]
