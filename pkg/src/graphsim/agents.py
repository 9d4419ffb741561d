"""Agent containers and the get_state / strategy / set_state turn lifecycle.

Ground agents live on graph nodes and move one hop per turn; aerial agents
live in continuous planar space above the graph with a per-turn speed cap
and map to the nearest node when a rule needs one. Invalid actions degrade
to a stay with a warning instead of crashing a batch run.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Iterator, Optional

from .errors import DuplicateAgentNameError, UnknownAgentError, UnknownNodeError
from .graph import Graph
from .sensors import SensorEngine, SensorReading

if TYPE_CHECKING:
    from .context import Context

logger = logging.getLogger(__name__)


class AgentKind(Enum):
    GROUND = "ground"
    AERIAL = "aerial"


@dataclass
class AgentState:
    """Mutable per-turn view handed to a strategy.

    Only the `action` slot written by the strategy influences the world:
    a target node id for ground agents, an (x, y) waypoint for aerial ones.
    """

    name: str
    turn: int
    sensor_readings: dict[str, SensorReading] = field(default_factory=dict)
    action: Any = None
    rng: Optional[random.Random] = None


@dataclass
class ProposedAction:
    """Validated movement intent, not yet committed to the world."""

    agent: str
    kind: AgentKind
    from_node: int
    to_node: int
    position: Optional[tuple[float, float, float]] = None  # aerial (x, y, heading)

    @property
    def is_move(self) -> bool:
        if self.kind is AgentKind.AERIAL:
            return self.position is not None
        return self.to_node != self.from_node

    def as_stay(self) -> "ProposedAction":
        return ProposedAction(self.agent, self.kind, self.from_node, self.from_node)


def _derive_seed(base_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class Agent:
    """Named entity with a position, registered sensors and a strategy handle."""

    def __init__(
        self,
        name: str,
        kind: AgentKind,
        start_node: int,
        graph: Graph,
        sensors: SensorEngine,
        team: str = "",
        speed: Optional[float] = None,
        meta: Optional[dict[str, Any]] = None,
        base_seed: int = 0,
    ):
        if kind is AgentKind.AERIAL:
            if speed is None or not (speed > 0):
                raise ValueError(f"agent {name}: aerial speed must be > 0")
        self.name = name
        self.kind = kind
        self.start_node = start_node
        self.team = team
        self.speed = speed
        self.meta = dict(meta or {})
        self.sensors: list[str] = []
        self.strategy: Optional[Callable[[AgentState], None]] = None
        self.rng = random.Random(_derive_seed(base_seed, name))
        self.last_state: Optional[AgentState] = None
        self._sensor_registry = sensors

        node = graph.get_node(start_node)
        self.current_node = start_node
        self.heading = 0.0
        # aerial agents track a continuous position; ground agents do not
        self.position: Optional[tuple[float, float]] = None
        if kind is AgentKind.AERIAL:
            self.position = (node.x, node.y)

    def register_sensor(self, sensor_name: str) -> None:
        """Idempotent; the sensor must exist in the context."""
        self._sensor_registry.get(sensor_name)
        if sensor_name not in self.sensors:
            self.sensors.append(sensor_name)

    def register_strategy(self, strategy: Optional[Callable[[AgentState], None]]) -> None:
        """None marks the agent as human-controlled."""
        self.strategy = strategy

    def effective_node(self, graph: Graph) -> int:
        """The node this agent counts as occupying for rules and sensing."""
        if self.kind is AgentKind.AERIAL:
            assert self.position is not None
            return graph.nearest_node(self.position[0], self.position[1])
        return self.current_node

    def get_state(self, ctx: "Context") -> AgentState:
        """Collect readings from every registered sensor, in registration order."""
        position = self.effective_node(ctx.graph)
        state = AgentState(name=self.name, turn=ctx.turn, rng=self.rng)
        for sensor_name in self.sensors:
            sensor = self._sensor_registry.get(sensor_name)
            state.sensor_readings[sensor_name] = sensor.sense(ctx, position, self.heading)
        self.last_state = state
        return state

    def set_state(self, ctx: "Context", state: AgentState) -> ProposedAction:
        """Validate the state's action and emit a proposal (nothing committed).

        Ground: the target must be the current node or a one-hop neighbor,
        anything else degrades to a stay with a warning. Aerial: the waypoint
        is accepted and motion is capped at `speed` meters this turn.
        """
        if self.kind is AgentKind.AERIAL:
            return self._propose_aerial(state.action)
        current = self.current_node
        action = state.action
        if action is None or action == current:
            return ProposedAction(self.name, self.kind, current, current)
        targets = {t for _, t in ctx.graph.neighbors(current)}
        if action not in targets:
            logger.warning(
                "agent %s: action %r is not reachable from node %d; staying",
                self.name,
                action,
                current,
            )
            return ProposedAction(self.name, self.kind, current, current)
        return ProposedAction(self.name, self.kind, current, int(action))

    def _propose_aerial(self, waypoint: Any) -> ProposedAction:
        assert self.position is not None and self.speed is not None
        x, y = self.position
        if waypoint is None:
            return ProposedAction(self.name, self.kind, self.current_node, self.current_node)
        try:
            wx, wy = float(waypoint[0]), float(waypoint[1])
        except (TypeError, ValueError, IndexError):
            logger.warning(
                "agent %s: aerial waypoint %r is not an (x, y) pair; staying",
                self.name,
                waypoint,
            )
            return ProposedAction(self.name, self.kind, self.current_node, self.current_node)
        dx, dy = wx - x, wy - y
        dist = math.hypot(dx, dy)
        if dist == 0.0:
            return ProposedAction(self.name, self.kind, self.current_node, self.current_node)
        step = min(self.speed, dist)
        nx, ny = x + dx / dist * step, y + dy / dist * step
        heading = math.atan2(dy, dx)
        return ProposedAction(
            self.name,
            self.kind,
            self.current_node,
            self.current_node,
            position=(nx, ny, heading),
        )

    def reset_to(self, graph: Graph, node_id: int) -> None:
        node = graph.get_node(node_id)
        self.current_node = node_id
        self.heading = 0.0
        if self.kind is AgentKind.AERIAL:
            self.position = (node.x, node.y)


class AgentEngine:
    """Creation-ordered agent registry; iteration order is stable across runs."""

    def __init__(self, graph: Graph, sensors: SensorEngine, base_seed: int = 0):
        self._graph = graph
        self._sensors = sensors
        self._agents: dict[str, Agent] = {}
        self._index: dict[str, int] = {}
        self._base_seed = base_seed

    def create_agent(
        self,
        name: str,
        kind: AgentKind = AgentKind.GROUND,
        start_node: int = 0,
        team: str = "",
        speed: Optional[float] = None,
        meta: Optional[dict[str, Any]] = None,
    ) -> Agent:
        if name in self._agents:
            raise DuplicateAgentNameError(f"agent {name!r} already exists")
        if start_node not in self._graph.nodes:
            raise UnknownNodeError(f"agent {name!r}: start node {start_node} not in graph")
        agent = Agent(
            name,
            kind,
            start_node,
            self._graph,
            self._sensors,
            team=team,
            speed=speed,
            meta=meta,
            base_seed=self._base_seed,
        )
        self._index[name] = len(self._agents)
        self._agents[name] = agent
        return agent

    def get(self, name: str) -> Agent:
        try:
            return self._agents[name]
        except KeyError:
            raise UnknownAgentError(f"unknown agent {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._agents

    def __len__(self) -> int:
        return len(self._agents)

    def create_iter(self) -> Iterator[Agent]:
        return iter(list(self._agents.values()))

    def names(self) -> list[str]:
        return list(self._agents)

    def index_of(self, name: str) -> int:
        return self._index[name]
