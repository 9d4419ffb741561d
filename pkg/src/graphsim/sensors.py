"""Observation framework: every sensor maps global state to a typed reading.

Prepackaged kinds: NEIGHBOR (one-hop reachable set), MAP (immutable graph
snapshot), AGENT (all agent positions), ARC (range + field-of-view cone),
CUSTOM (user-injected payload). Sensing is read-only over the context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Optional

from .errors import (
    DuplicateSensorNameError,
    KindMismatchError,
    UnknownSensorError,
)

if TYPE_CHECKING:
    from .context import Context

TAU = 2 * math.pi


class SensorKind(Enum):
    NEIGHBOR = "neighbor"
    MAP = "map"
    AGENT = "agent"
    ARC = "arc"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ArcView:
    """Nodes and edges visible to an ARC sensor."""

    nodes: frozenset[int]
    edges: frozenset[int]


@dataclass
class SensorReading:
    kind: SensorKind
    payload: Any


@dataclass
class Sensor:
    name: str
    kind: SensorKind
    sensor_range: Optional[float] = None
    fov: Optional[float] = None
    key: Optional[str] = None
    custom_payload: Any = None

    def __post_init__(self) -> None:
        if self.kind is SensorKind.ARC:
            if self.sensor_range is None or not (self.sensor_range > 0):
                raise ValueError(f"sensor {self.name}: sensor_range must be > 0")
            if self.fov is None or not (0 < self.fov <= TAU):
                raise ValueError(f"sensor {self.name}: fov must be in (0, 2*pi]")

    def sense(self, ctx: "Context", position: int, heading: float = 0.0) -> SensorReading:
        graph = ctx.graph
        if self.kind is SensorKind.NEIGHBOR:
            graph.get_node(position)
            seen = {position}
            payload = [position]
            for _, target in graph.neighbors(position):
                if target not in seen:
                    seen.add(target)
                    payload.append(target)
            return SensorReading(self.kind, payload)
        if self.kind is SensorKind.MAP:
            graph.get_node(position)
            return SensorReading(self.kind, graph.copy())
        if self.kind is SensorKind.AGENT:
            graph.get_node(position)
            positions = {
                agent.name: agent.effective_node(graph)
                for agent in ctx.agents.create_iter()
            }
            return SensorReading(self.kind, positions)
        if self.kind is SensorKind.ARC:
            return SensorReading(self.kind, self._sense_arc(ctx, position, heading))
        return SensorReading(self.kind, self.custom_payload)

    def _sense_arc(self, ctx: "Context", position: int, heading: float) -> ArcView:
        graph = ctx.graph
        origin = graph.get_node(position)
        assert self.sensor_range is not None and self.fov is not None
        range_sq = self.sensor_range * self.sensor_range
        half_fov = self.fov / 2
        visible: set[int] = {position}  # own position is always in view
        for node in graph.iter_nodes():
            if node.id == position:
                continue
            dx = node.x - origin.x
            dy = node.y - origin.y
            if dx * dx + dy * dy > range_sq:
                continue
            delta = math.remainder(math.atan2(dy, dx) - heading, TAU)
            if abs(delta) <= half_fov:
                visible.add(node.id)
        edges = frozenset(
            e.id
            for e in graph.iter_edges()
            if e.source in visible and e.target in visible
        )
        return ArcView(frozenset(visible), edges)


class SensorEngine:
    """Registry of named sensors; names are unique within a context."""

    def __init__(self) -> None:
        self._sensors: dict[str, Sensor] = {}

    def create_sensor(
        self,
        name: str,
        kind: SensorKind,
        sensor_range: Optional[float] = None,
        fov: Optional[float] = None,
        key: Optional[str] = None,
    ) -> Sensor:
        if name in self._sensors:
            raise DuplicateSensorNameError(f"sensor {name!r} already exists")
        sensor = Sensor(name, kind, sensor_range=sensor_range, fov=fov, key=key)
        self._sensors[name] = sensor
        return sensor

    def get(self, name: str) -> Sensor:
        try:
            return self._sensors[name]
        except KeyError:
            raise UnknownSensorError(f"unknown sensor {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._sensors

    def names(self) -> list[str]:
        return list(self._sensors)

    def inject(self, sensor_name: str, payload: Any) -> None:
        """Feed external data into a CUSTOM sensor; next sense returns it."""
        sensor = self.get(sensor_name)
        if sensor.kind is not SensorKind.CUSTOM:
            raise KindMismatchError(
                f"sensor {sensor_name!r} is {sensor.kind.value}, not custom"
            )
        sensor.custom_payload = payload
