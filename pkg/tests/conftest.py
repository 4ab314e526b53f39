import json
from pathlib import Path

import pytest

from podnet.k8s import ClusterSpec, Image, PodSpec, RestartPolicy, TimingProfile, build_deployment
from podnet.petri import Constant

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def deployment(C, rho=1, *, t1=2.048, restart=RestartPolicy.NEVER, image_gb=1.225, ram=0.0, cpu=0.0, **timing):
    pod = PodSpec(ram_request_gb=ram, cpu_request_cores=cpu, restart_policy=restart, image=Image("app", image_gb))
    return build_deployment(C, rho, pod, TimingProfile(t1=Constant(t1), **timing))


def cluster(n=8, preloaded=True, **kw):
    return ClusterSpec.homogeneous(n, preloaded=("app",) if preloaded else (), **kw)


@pytest.fixture
def configs_dir():
    return CONFIGS


@pytest.fixture
def write_json(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return path

    return _write
