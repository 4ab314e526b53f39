"""The pod (system) net and the container (token) net.

Container net, one instance per pod, one token per container::

    Waiting --T1--> Running --T2--> Success --T6--> SuccessExit
       ^               |                |
       |               T3               T4 (r == Always)
       |               v                |
       +---T5------ Failure <-----------+ (back to Waiting)
                       |
                       T7 --> FailedExit

T1, T2, T3, T6 and T7 talk to the pod net over the channels ``runCont``,
``contOk``, ``contFail``, ``stopOk`` and ``stopFail``.  T2/T3 race on the
same container token; T4/T5 restart a container (re-entering T1).

The pod net adds a few places that the published figure hides: an
``Arrival`` place feeding ``PendingScheduling``, the per-node image state,
``Host`` (where a pod lives, read by the container-level channels) and
the report places ``Created``/``Done``/``Crash``.
"""

from __future__ import annotations

from ..petri import (
    Constant,
    Marking,
    NetDefinition,
    NetInstance,
    Place,
    Transition,
    arc_in,
    arc_out,
    arc_read,
    build_net,
)
from .download import RegistryModel
from .scheduler import SchedulerPolicy
from .specs import ClusterSpec, DeploymentSpec, PodSpec, TimingProfile

CONTAINER_CHANNELS = ("runCont", "contOk", "contFail", "stopOk", "stopFail")

POD_PHASE_PLACES = ("PendingScheduling", "Pending", "Running", "RunningFailed", "Success", "Failed")


def container_net(timing: TimingProfile) -> NetDefinition:
    places = [
        Place("Waiting"),
        Place("Running"),
        Place("Success"),
        Place("Failure"),
        Place("SuccessExit"),
        Place("FailedExit"),
        Place("Policy", "counter"),
    ]
    transitions = [
        Transition("T1", uplink="runCont"),
        Transition("T2", uplink="contOk", race="exec"),
        Transition("T3", uplink="contFail", race="exec"),
        Transition("T4", guard="r == 0"),
        Transition("T5", guard="r != 2"),
        Transition("T6", guard="r != 0", uplink="stopOk"),
        Transition("T7", guard="r == 2", uplink="stopFail"),
    ]
    arcs = [
        arc_in("Waiting", "T1", "c"), arc_out("Running", "T1", "c"),
        arc_in("Running", "T2", "c"), arc_out("Success", "T2", "c"),
        arc_in("Running", "T3", "c"), arc_out("Failure", "T3", "c"),
        arc_in("Success", "T4", "c"), arc_read("Policy", "T4", "r"), arc_out("Waiting", "T4", "c"),
        arc_in("Failure", "T5", "c"), arc_read("Policy", "T5", "r"), arc_out("Waiting", "T5", "c"),
        arc_in("Success", "T6", "c"), arc_read("Policy", "T6", "r"), arc_out("SuccessExit", "T6", "c"),
        arc_in("Failure", "T7", "c"), arc_read("Policy", "T7", "r"), arc_out("FailedExit", "T7", "c"),
    ]
    timing_map = {
        "T1": timing.t1,
        "T2": timing.t2,
        "T3": timing.t3,
        "T4": timing.t4_t5,
        "T5": timing.t4_t5,
        "T6": timing.t6_t7,
        "T7": timing.t6_t7,
    }
    return NetDefinition("container", places, transitions, arcs, CONTAINER_CHANNELS, timing_map)


def build_container_instance(definition: NetDefinition, pod: PodSpec, instance_id: str | None = None) -> NetInstance:
    marking = Marking({"Waiting": pod.container_ids(), "Policy": [int(pod.restart_policy)]})
    return build_net(definition, marking, instance_id or pod.pod_id)


# token layouts of the pod net
_QUEUED = "(pid, pod, k, ram, cpu, img, r)"
_SCHEDULED = "(pid, pod, k, node, ram, cpu, img, r)"
_HOST = "(pid, pod, node, ram, cpu, r)"
_PENDING = "(pid, pod, node, k, pend)"
_RUNNING = "(pid, pod, node, k, live, ff)"
_STOPPING = "(pid, pod, node, left, ff)"


def system_net_definition(cluster: ClusterSpec, deployment: DeploymentSpec) -> NetDefinition:
    """The pod net for one simulation run (it owns stateful delay models)."""
    per_machine = cluster.creation_mode == "per-machine"
    places = [
        Place("Arrival"),
        Place("PendingScheduling"),
        Place("Scheduler"),
        Place("Machines"),
        Place("Creators"),
        Place("ImageState"),
        Place("Scheduled"),
        Place("Pending"),
        Place("Host"),
        Place("Created"),
        Place("Running"),
        Place("RunningFailed"),
        Place("Done"),
        Place("Crash"),
        Place("Stopping"),
        Place("Success"),
        Place("Failed"),
    ]
    transitions = [
        Transition("submit"),
        Transition(
            "schedule",
            guard="mram >= ram and mcpu >= cpu",
            chooser=SchedulerPolicy(cluster.scheduler_mode),
        ),
        Transition("pull"),
        Transition("admit"),
        Transition("createCont", downlink=("pod", "runCont")),
        Transition("pendDec"),
        Transition("podRunning", guard="pend == 0"),
        Transition("restartedRunning"),
        Transition("restartedFailed"),
        Transition("execOk", downlink=("pod", "contOk")),
        Transition("execFail", downlink=("pod", "contFail")),
        Transition("okRunning"),
        Transition("okFailed"),
        Transition("crashRunning"),
        Transition("crashFailed"),
        Transition("graceRunning", guard="live == 0"),
        Transition("graceFailed", guard="live == 0"),
        Transition("stopOk", guard="left > 0", downlink=("pod", "stopOk")),
        Transition("stopFail", guard="left > 0", downlink=("pod", "stopFail")),
        Transition("podSucceeded", guard="left == 0 and ff == 0 and r != 0"),
        Transition("podFailed", guard="left == 0 and ff > 0 and r != 0"),
    ]
    arcs = [
        arc_in("Arrival", "submit", "x"), arc_out("PendingScheduling", "submit", "x"),

        arc_in("PendingScheduling", "schedule", _QUEUED),
        arc_in("Machines", "schedule", "(node, mram, mcpu)"),
        arc_in("Scheduler", "schedule"),
        arc_out("Machines", "schedule", "(node, mram - ram, mcpu - cpu)"),
        arc_out("Scheduled", "schedule", _SCHEDULED),
        arc_out("Scheduler", "schedule"),

        arc_in("Scheduled", "pull", _SCHEDULED),
        arc_in("ImageState", "pull", "(node, img, 'absent')"),
        arc_out("ImageState", "pull", "(node, img, 'present')"),
        arc_out("Scheduled", "pull", _SCHEDULED),

        arc_in("Scheduled", "admit", _SCHEDULED),
        arc_read("ImageState", "admit", "(node, img, 'present')"),
        arc_out("Pending", "admit", "(pid, pod, node, k, k)"),
        arc_out("Host", "admit", _HOST),

        arc_read("Host", "createCont", _HOST),
        arc_out("Created", "createCont", "pid"),

        arc_in("Created", "pendDec", "pid"),
        arc_in("Pending", "pendDec", _PENDING),
        arc_out("Pending", "pendDec", "(pid, pod, node, k, pend - 1)"),

        arc_in("Pending", "podRunning", _PENDING),
        arc_out("Running", "podRunning", "(pid, pod, node, k, k, 0)"),

        arc_in("Created", "restartedRunning", "pid"),
        arc_in("Running", "restartedRunning", _RUNNING),
        arc_out("Running", "restartedRunning", _RUNNING),
        arc_in("Created", "restartedFailed", "pid"),
        arc_in("RunningFailed", "restartedFailed", _RUNNING),
        arc_out("RunningFailed", "restartedFailed", _RUNNING),

        arc_read("Host", "execOk", _HOST),
        arc_out("Done", "execOk", "(pid, r)"),
        arc_read("Host", "execFail", _HOST),
        arc_out("Crash", "execFail", "(pid, r)"),

        arc_in("Done", "okRunning", "(pid, r)"),
        arc_in("Running", "okRunning", _RUNNING),
        arc_out("Running", "okRunning", "(pid, pod, node, k, live - (r != 0), ff)"),
        arc_in("Done", "okFailed", "(pid, r)"),
        arc_in("RunningFailed", "okFailed", _RUNNING),
        arc_out("RunningFailed", "okFailed", "(pid, pod, node, k, live - (r != 0), ff)"),

        arc_in("Crash", "crashRunning", "(pid, r)"),
        arc_in("Running", "crashRunning", _RUNNING),
        arc_out("RunningFailed", "crashRunning", "(pid, pod, node, k, live - (r == 2), ff + (r == 2))"),
        arc_in("Crash", "crashFailed", "(pid, r)"),
        arc_in("RunningFailed", "crashFailed", _RUNNING),
        arc_out("RunningFailed", "crashFailed", "(pid, pod, node, k, live - (r == 2), ff + (r == 2))"),

        arc_in("Running", "graceRunning", _RUNNING),
        arc_out("Stopping", "graceRunning", "(pid, pod, node, k, ff)"),
        arc_in("RunningFailed", "graceFailed", _RUNNING),
        arc_out("Stopping", "graceFailed", "(pid, pod, node, k, ff)"),

        arc_in("Stopping", "stopOk", _STOPPING),
        arc_out("Stopping", "stopOk", "(pid, pod, node, left - 1, ff)"),
        arc_in("Stopping", "stopFail", _STOPPING),
        arc_out("Stopping", "stopFail", "(pid, pod, node, left - 1, ff)"),

        arc_in("Stopping", "podSucceeded", _STOPPING),
        arc_in("Host", "podSucceeded", _HOST),
        arc_in("Machines", "podSucceeded", "(node, mram, mcpu)"),
        arc_out("Success", "podSucceeded", "pid"),
        arc_out("Machines", "podSucceeded", "(node, mram + ram, mcpu + cpu)"),
        arc_in("Stopping", "podFailed", _STOPPING),
        arc_in("Host", "podFailed", _HOST),
        arc_in("Machines", "podFailed", "(node, mram, mcpu)"),
        arc_out("Failed", "podFailed", "pid"),
        arc_out("Machines", "podFailed", "(node, mram + ram, mcpu + cpu)"),
    ]
    if per_machine:
        # one container creation at a time per node
        arcs += [arc_in("Creators", "createCont", "node"), arc_out("Creators", "createCont", "node")]
    else:
        # a pod holds its node's creation slot until all its containers run
        arcs += [arc_in("Creators", "admit", "node"), arc_out("Creators", "podRunning", "node")]

    image_sizes = {p.image.name: p.image.size_gb for p in deployment.pods}
    grace = Constant(deployment.timing.grace_period_s)
    timing = {
        "pull": RegistryModel(cluster, image_sizes),
        "graceRunning": grace,
        "graceFailed": grace,
    }
    return NetDefinition("k8s", places, transitions, arcs, (), timing)


def initial_system_marking(cluster: ClusterSpec, deployment: DeploymentSpec, container_def: NetDefinition) -> Marking:
    images = sorted({p.image.name for p in deployment.pods})
    marking = Marking()
    marking.add("Scheduler", ())
    for m in cluster.machines:
        marking.add("Machines", (m.node_id, m.ram_gb, m.cores))
        marking.add("Creators", m.node_id)
        for img in images:
            status = "present" if img in m.preloaded_images else "absent"
            marking.add("ImageState", (m.node_id, img, status))
    for pod in deployment.pods:
        child = build_container_instance(container_def, pod)
        marking.add(
            "Arrival",
            (pod.pod_id, child, pod.containers, pod.ram_total, pod.cpu_total, pod.image.name, int(pod.restart_policy)),
        )
    return marking


def build_system_net(cluster: ClusterSpec, deployment: DeploymentSpec) -> NetInstance:
    """Pod net instance with one container-net token per pod."""
    definition = system_net_definition(cluster, deployment)
    marking = initial_system_marking(cluster, deployment, container_net(deployment.timing))
    return build_net(definition, marking, "k8s")
