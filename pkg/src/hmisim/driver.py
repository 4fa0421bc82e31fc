"""Driver-side behaviour: periodic impulses, memory, and awareness.

Cognitive functions model the driver's recurring urges (check the speed,
glance at the mirrors, ...): each one fires at normally distributed
intervals drawn from its own random substream and requests its target
task.  Driver memory holds the last perceived value of each tracked
vehicle/road parameter; completing a task that carries an awareness
parameter refreshes the corresponding belief from ground truth.

Situation awareness at an instant is the fraction of tracked parameters
whose belief matches ground truth, with numeric parameters compared on a
discretized grid (e.g. speed bucketed at the instrument's display
resolution).  With nothing tracked, awareness is defined as 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

#: Shortest possible interval between two firings of one cognitive function.
MIN_TRIGGER_INTERVAL = 0.001

ALL_LEVELS = frozenset(range(5))


@dataclass(frozen=True)
class CognitiveFunction:
    name: str
    mean_interval: float
    sigma: float
    target_task: str
    enabled_levels: frozenset[int] = ALL_LEVELS


def default_sigma(mean_interval: float) -> float:
    """Spread used when a scenario gives only the mean: a quarter of it."""
    return mean_interval / 4.0


def next_trigger(function: CognitiveFunction, stream: np.random.Generator, now: float) -> float:
    """Next firing time: now plus a normal draw, floored at a tiny positive step."""
    draw = float(stream.normal(function.mean_interval, function.sigma))
    return now + max(MIN_TRIGGER_INTERVAL, draw)


@dataclass
class Belief:
    value: Any
    updated_at: float


@dataclass
class AwarenessParameter:
    """A tracked ground-truth parameter and how beliefs are compared to it."""

    name: str
    resolution: float | None = None
    initial: Any | None = None


class GroundTruth:
    """Current true values of the observable vehicle/road parameters."""

    def __init__(self) -> None:
        self.values: dict[str, Any] = {}

    def set(self, parameter: str, value: Any) -> None:
        self.values[parameter] = value

    def get(self, parameter: str) -> Any:
        return self.values[parameter]

    def __contains__(self, parameter: str) -> bool:
        return parameter in self.values


class DriverMemory:
    """Beliefs about tracked parameters; changed only by explicit updates."""

    def __init__(self) -> None:
        self.beliefs: dict[str, Belief] = {}

    def initialize(self, parameter: str, value: Any, at: float = 0.0) -> None:
        self.beliefs[parameter] = Belief(value=value, updated_at=at)

    def update_from_truth(
        self, parameter: str, truth: GroundTruth, resolution: float | None, now: float
    ) -> Any:
        value = discretize(truth.get(parameter), resolution)
        self.beliefs[parameter] = Belief(value=value, updated_at=now)
        return value


def discretize(value: Any, resolution: float | None) -> Any:
    """Snap numeric values to the comparison grid; pass others through."""
    if resolution is None or isinstance(value, bool) or not isinstance(value, (int, float)):
        return value
    return round(value / resolution) * resolution


def awareness(
    memory: DriverMemory,
    truth: GroundTruth,
    parameters: dict[str, AwarenessParameter],
) -> float:
    """Fraction of tracked parameters whose belief matches ground truth."""
    if not parameters:
        return 1.0
    matching = 0
    for name, param in parameters.items():
        belief = memory.beliefs.get(name)
        if belief is None:
            continue
        if belief.value == discretize(truth.get(name), param.resolution):
            matching += 1
    return matching / len(parameters)


@dataclass(frozen=True)
class MemoryUpdate:
    parameter: str
    value: Any
    time: float


def on_task_complete(
    memory: DriverMemory,
    truth: GroundTruth,
    awareness_parameter: str | None,
    parameters: dict[str, AwarenessParameter],
    now: float,
) -> MemoryUpdate | None:
    """Refresh the belief carried by a just-completed task, if any."""
    if awareness_parameter is None:
        return None
    param = parameters[awareness_parameter]
    value = memory.update_from_truth(awareness_parameter, truth, param.resolution, now)
    return MemoryUpdate(parameter=awareness_parameter, value=value, time=now)
