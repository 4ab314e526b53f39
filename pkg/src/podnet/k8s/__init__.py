"""Kubernetes pod and container lifecycle model."""

from .download import RegistryModel, image_download_delay, pull_needed
from .nets import build_system_net, container_net, system_net_definition
from .scheduler import Placement, SchedulerPolicy, schedule_step
from .simulate import NoRestartObserved, SimResult, restart_cycle_time, simulate
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

__all__ = [
    "ClusterSpec",
    "DeploymentSpec",
    "Image",
    "Machine",
    "NoRestartObserved",
    "NonIntegralLayout",
    "Placement",
    "PodSpec",
    "RegistryModel",
    "RestartPolicy",
    "SchedulerPolicy",
    "SimResult",
    "TimingProfile",
    "build_deployment",
    "build_system_net",
    "container_net",
    "image_download_delay",
    "pull_needed",
    "restart_cycle_time",
    "schedule_step",
    "simulate",
    "system_net_definition",
]
