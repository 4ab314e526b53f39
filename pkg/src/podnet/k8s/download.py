"""Image download from a single registry shared by every machine."""

from __future__ import annotations

from dataclasses import dataclass

from .specs import ClusterSpec, Machine


def image_download_delay(
    machine: Machine,
    size_gb: float,
    active_downloads: int,
    registry_bandwidth_gbps: float,
) -> float:
    """Seconds to pull an image while ``active_downloads`` share the registry.

    Only charged for the first pod needing the image on a machine; a
    preloaded or already pulled image costs nothing (see
    :func:`pull_needed`).
    """
    if active_downloads < 1:
        raise ValueError("active_downloads counts this download, so it is >= 1")
    rate_gb_s = registry_bandwidth_gbps / 8.0 / active_downloads
    return size_gb / rate_gb_s + machine.rtt_ms / 1000.0


def pull_needed(machine: Machine, image: str, pulled: set[tuple[str, str]] = frozenset()) -> bool:
    return image not in machine.preloaded_images and (machine.node_id, image) not in pulled


@dataclass
class _Transfer:
    firing: object
    remaining_gb: float
    rtt_s: float


class RegistryModel:
    """Processor-sharing registry used as the delay of the ``pull`` transition.

    Transfers in flight split the aggregate bandwidth equally; whenever a
    transfer starts, the completion of every other unfinished transfer is
    moved to its new projected time.  With k transfers starting together
    each takes ``image_download_delay(..., active_downloads=k)``.
    """

    def __init__(self, cluster: ClusterSpec, image_sizes: dict[str, float]):
        self.cluster = cluster
        self.image_sizes = dict(image_sizes)
        self.rate_gb_s = cluster.registry_bandwidth_gbps / 8.0
        self._transfers: list[_Transfer] = []
        self._last = 0.0

    def _advance(self, now: float) -> None:
        t = self._last
        active = [x for x in self._transfers if x.remaining_gb > 0]
        while active and t < now:
            share = self.rate_gb_s / len(active)
            step = min(x.remaining_gb for x in active) / share
            if t + step <= now:
                for x in active:
                    x.remaining_gb = max(0.0, x.remaining_gb - share * step)
                t += step
                active = [x for x in active if x.remaining_gb > 1e-12]
            else:
                for x in active:
                    x.remaining_gb -= share * (now - t)
                t = now
        self._last = now
        self._transfers = [x for x in self._transfers if x.remaining_gb > 1e-12]

    def _project(self, now: float) -> dict[int, float]:
        left = {id(x): x.remaining_gb for x in self._transfers}
        done: dict[int, float] = {}
        t = now
        while left:
            share = self.rate_gb_s / len(left)
            step = min(left.values()) / share
            t += step
            for key in list(left):
                left[key] -= share * step
                if left[key] <= 1e-12:
                    done[key] = t
                    del left[key]
        return done

    def __call__(self, state, firing) -> float:
        b = firing.binding
        now = state.clock
        self._advance(now)
        mine = _Transfer(firing, self.image_sizes[b["img"]], self.cluster.machine(b["node"]).rtt_ms / 1000.0)
        self._transfers.append(mine)
        finish = self._project(now)
        in_flight = {f.fid for _, f in state.pending()}
        for x in self._transfers:
            if x is not mine and x.firing.fid in in_flight:
                state.retime(x.firing, max(now, finish[id(x)] + x.rtt_s))
        return finish[id(mine)] + mine.rtt_s - now
