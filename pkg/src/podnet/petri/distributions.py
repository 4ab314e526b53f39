"""Delay distributions attached to timed transitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Any, Union

import numpy as np

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class Constant:
    delay: float

    def __post_init__(self):
        if not self.delay >= 0:
            raise ValueError(f"constant delay must be >= 0, got {self.delay}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.delay)

    def samples(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.delay))

    def mean(self) -> float:
        return float(self.delay)


@dataclass(frozen=True)
class NormalTruncated:
    """Normal(mean, std) conditioned on being non-negative."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("std must be >= 0")
        if self.sigma == 0 and self.mu < 0:
            raise ValueError("degenerate normal with negative mean has no mass at >= 0")

    def _lower_cdf(self) -> float:
        return _STD_NORMAL.cdf(-self.mu / self.sigma)

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.samples(rng, 1)[0])

    def samples(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sigma == 0:
            return np.full(size, float(self.mu))
        lo = self._lower_cdf()
        if lo < 0.5:
            # rejection is exact and cheap while most of the mass is above 0
            out = np.empty(size)
            filled = 0
            while filled < size:
                draw = rng.normal(self.mu, self.sigma, size=int((size - filled) / (1 - lo)) + 8)
                draw = draw[draw >= 0][: size - filled]
                out[filled : filled + draw.size] = draw
                filled += draw.size
            return out
        u = rng.uniform(lo, 1.0, size=size)
        x = np.array([_STD_NORMAL.inv_cdf(min(v, 1 - 1e-16)) for v in u])
        return np.maximum(self.mu + self.sigma * x, 0.0)

    def mean(self) -> float:
        if self.sigma == 0:
            return float(self.mu)
        a = -self.mu / self.sigma
        return self.mu + self.sigma * _STD_NORMAL.pdf(a) / (1 - _STD_NORMAL.cdf(a))


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("exponential rate must be > 0")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.exponential(1.0 / self.rate))

    def samples(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size=size)

    def mean(self) -> float:
        return 1.0 / self.rate


@dataclass(frozen=True)
class Empirical:
    """Uniform resampling of observed durations."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("empirical distribution needs at least one sample")
        if min(self.values) < 0:
            raise ValueError("empirical samples must be >= 0")

    def sample(self, rng: np.random.Generator) -> float:
        return self.values[int(rng.integers(len(self.values)))]

    def samples(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.values)[rng.integers(len(self.values), size=size)]

    def mean(self) -> float:
        return sum(self.values) / len(self.values)


@dataclass(frozen=True)
class Never:
    """The transition never completes; its inputs are absorbed."""

    def sample(self, rng: np.random.Generator) -> float:
        return math.inf

    def samples(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, math.inf)

    def mean(self) -> float:
        return math.inf


DelayDistribution = Union[Constant, NormalTruncated, Exponential, Empirical, Never]


def sample(dist: DelayDistribution, rng: np.random.Generator) -> float:
    """Draw one delay in seconds; ``math.inf`` means no completion event."""
    return dist.sample(rng)


def from_dict(spec: dict[str, Any]) -> DelayDistribution:
    """Build a distribution from ``{"dist": name, "params": {...}}``.

    Accepted names: constant(d), normal(mean, std), exponential(rate),
    empirical(values), never.
    """
    if not isinstance(spec, dict) or "dist" not in spec:
        raise ValueError("distribution must be an object with a 'dist' key")
    name = str(spec["dist"]).lower()
    params = spec.get("params", {}) or {}
    if name == "constant":
        return Constant(float(params["d"]))
    if name in ("normal", "normal_truncated", "normaltruncated"):
        return NormalTruncated(float(params["mean"]), float(params["std"]))
    if name == "exponential":
        return Exponential(float(params["rate"]))
    if name == "empirical":
        return Empirical(tuple(params["values"]))
    if name == "never":
        return Never()
    raise ValueError(f"unknown distribution {spec['dist']!r}")


def to_dict(dist: DelayDistribution) -> dict[str, Any]:
    if isinstance(dist, Constant):
        return {"dist": "constant", "params": {"d": dist.delay}}
    if isinstance(dist, NormalTruncated):
        return {"dist": "normal", "params": {"mean": dist.mu, "std": dist.sigma}}
    if isinstance(dist, Exponential):
        return {"dist": "exponential", "params": {"rate": dist.rate}}
    if isinstance(dist, Empirical):
        return {"dist": "empirical", "params": {"values": list(dist.values)}}
    return {"dist": "never", "params": {}}
