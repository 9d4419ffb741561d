"""Single point of access: owns graph, sensors, agents, recorder and viz.

step() advances the simulation one turn through fixed phases:

    1. turn increment + input synchronization
    2. per agent (creation order): get_state, strategy or human input, set_state
    3. conflict resolution over the proposed actions
    4. commit surviving movements and record them
    5. rules in priority order, applying any termination
    6. visualization (frame build / stream) via visual.simulate

All randomness flows through the context RNG (or per-agent streams derived
from the seed), so a (config, strategies, seed) triple fully determines the
run on any platform.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

from . import recorder as rec
from .agents import AgentEngine, AgentKind, ProposedAction
from .config import load_config, resolve_config, semantic_digest
from .errors import (
    ConfigError,
    HumanInputTimeoutError,
    InconsistentDocumentError,
    NoClientConnectedError,
    SimulatorError,
    TerminatedError,
)
from .graph import Graph
from .sensors import SensorEngine, SensorKind
from .viz import VisMode, VisualEngine

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


@dataclass(frozen=True)
class Termination:
    """Outcome signalled by a rule (or manual terminate)."""

    winner: Optional[str]
    reason: str


@dataclass
class Rule:
    name: str
    apply: Callable[["Context", int], Optional[Termination]]
    priority: int = 0


# --- conflict policies -----------------------------------------------------

@dataclass(frozen=True)
class AllowAll:
    """Co-location is legal; every proposed move commits."""


@dataclass(frozen=True)
class RandomChoice:
    """One uniformly chosen winner per contested node, via the context RNG."""


@dataclass(frozen=True)
class Priority:
    ranks: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class CustomResolver:
    resolver: Callable[[list[ProposedAction]], list[ProposedAction]]


ConflictPolicy = Union[AllowAll, RandomChoice, Priority, CustomResolver]


def resolve_conflicts(
    proposals: list[ProposedAction],
    policy: ConflictPolicy,
    rng: random.Random,
) -> list[ProposedAction]:
    """Decide which proposed moves commit; losers become stays.

    A conflict is two or more ground agents proposing to move onto the same
    node this turn. Stays never conflict and aerial agents never conflict.
    """
    result = list(proposals)
    if isinstance(policy, CustomResolver):
        accepted = {p.agent for p in policy.resolver(list(proposals))}
        for i, prop in enumerate(result):
            if prop.is_move and prop.agent not in accepted:
                result[i] = prop.as_stay()
        return result
    if isinstance(policy, AllowAll):
        return result

    groups: dict[int, list[int]] = {}
    for i, prop in enumerate(proposals):
        if prop.kind is AgentKind.GROUND and prop.is_move:
            groups.setdefault(prop.to_node, []).append(i)
    for indices in groups.values():
        if len(indices) < 2:
            continue
        if isinstance(policy, RandomChoice):
            winner = indices[rng.randrange(len(indices))]
        else:
            ranks = policy.ranks
            winner = min(indices, key=lambda i: (ranks.get(proposals[i].agent, math.inf), i))
        for i in indices:
            if i != winner:
                result[i] = proposals[i].as_stay()
    return result


class Context:
    """Owns all engines; the loop thread is the only mutator of state."""

    def __init__(self, resolved_config: dict[str, Any]):
        self.config = resolved_config
        self.seed = resolved_config["seed"]
        self.rng = random.Random(self.seed)
        self.graph = Graph()
        self.sensors = SensorEngine()
        self.agents = AgentEngine(self.graph, self.sensors, base_seed=self.seed)
        self.visual = VisualEngine(
            VisMode(resolved_config["vis"]["mode"]),
            width=resolved_config["vis"]["width"],
            height=resolved_config["vis"]["height"],
        )
        self.visual.attach(self)
        self.recorder: Optional[rec.Recorder] = None
        self.rules: list[Rule] = []
        self.conflict_policy: ConflictPolicy = AllowAll()
        self.turn = 0
        self.terminated = False
        self.outcome: Optional[Termination] = None
        self.custom_events: list[tuple[int, str, bytes]] = []
        self.turn_event_count = 0  # movement/reset events committed this turn
        self._pending_actions: dict[str, int] = {}
        self._recording_bytes: Optional[bytes] = None

    # --- lifecycle --------------------------------------------------------

    def is_terminated(self) -> bool:
        return self.terminated

    def terminate(self) -> None:
        """Idempotent; after it, step() raises TerminatedError."""
        self._apply_termination(Termination(None, "manual"))

    def _apply_termination(self, outcome: Termination) -> None:
        if self.terminated:
            return
        self.terminated = True
        self.outcome = outcome
        self._record(rec.Terminated(self.turn))

    def add_rule(
        self,
        name: str,
        apply: Callable[["Context", int], Optional[Termination]],
        priority: int = 0,
    ) -> Rule:
        rule = Rule(name, apply, priority)
        self.rules.append(rule)
        return rule

    # --- recording helpers --------------------------------------------------

    def _record(self, event: rec.RecordEvent) -> None:
        if self.recorder is not None and not self.recorder.closed:
            self.recorder.record(event)

    def record_custom(self, key: str, payload: bytes) -> None:
        """Attach user data to the recording stream at the current turn."""
        self.custom_events.append((self.turn, key, payload))
        self._record(rec.Custom(key, payload))

    def reset_agent(self, name: str, to_node: Optional[int] = None) -> None:
        """Move an agent back to a node (default: its start), recording it."""
        agent = self.agents.get(name)
        target = agent.start_node if to_node is None else to_node
        agent.reset_to(self.graph, target)
        self._record(rec.AgentReset(self.agents.index_of(name), target))
        self.turn_event_count += 1

    def finish_recording(self) -> Optional[bytes]:
        if self.recorder is None:
            return None
        if self._recording_bytes is None:
            self._recording_bytes = self.recorder.finalize()
        return self._recording_bytes

    def feed_action(self, agent_name: str, target: int) -> None:
        """Queue a pre-scripted action for a human-controlled agent."""
        self._pending_actions[agent_name] = target

    # --- the loop -----------------------------------------------------------

    def step(self) -> None:
        if self.terminated:
            raise TerminatedError("context is terminated")
        self.turn += 1
        self.turn_event_count = 0
        self._record(rec.TurnBegin(self.turn))
        self.visual.sync_inputs(self)

        proposals: list[ProposedAction] = []
        for agent in self.agents.create_iter():
            state = agent.get_state(self)
            if agent.strategy is not None:
                agent.strategy(state)
            else:
                state.action = self._human_action(agent.name)
            proposals.append(agent.set_state(self, state))

        committed = resolve_conflicts(proposals, self.conflict_policy, self.rng)
        self._commit(committed)

        outcome: Optional[Termination] = None
        for rule in sorted(self.rules, key=lambda r: r.priority):
            result = rule.apply(self, self.turn)
            if result is not None and outcome is None:
                outcome = result
        if outcome is not None:
            self._apply_termination(outcome)

        self.visual.simulate(self)

    def _commit(self, actions: list[ProposedAction]) -> None:
        graph = self.graph
        for prop in actions:
            agent = self.agents.get(prop.agent)
            if prop.kind is AgentKind.AERIAL:
                if prop.position is None:
                    continue
                x, y, heading = prop.position
                if agent.position != (x, y):
                    self._record(rec.AerialMoved(self.agents.index_of(prop.agent), x, y))
                    self.turn_event_count += 1
                agent.position = (x, y)
                agent.heading = heading
            elif prop.to_node != prop.from_node:
                src = graph.get_node(prop.from_node)
                dst = graph.get_node(prop.to_node)
                agent.current_node = prop.to_node
                agent.heading = math.atan2(dst.y - src.y, dst.x - src.x)
                self._record(
                    rec.AgentMoved(self.agents.index_of(prop.agent), prop.from_node, prop.to_node)
                )
                self.turn_event_count += 1

    def _human_action(self, agent_name: str) -> Optional[int]:
        pending = self._pending_actions.pop(agent_name, None)
        if pending is not None:
            return pending
        if self.visual.mode is VisMode.STREAM and self.visual.server is not None:
            try:
                return self.visual.await_human_action(
                    self, agent_name, timeout=self.config["human_timeout"]
                )
            except (NoClientConnectedError, HumanInputTimeoutError) as exc:
                logger.warning("agent %s: no human input (%s); staying", agent_name, exc)
                return None
        logger.warning(
            "agent %s is human-controlled but no viewer is attached; staying", agent_name
        )
        return None

    # --- state fingerprint ----------------------------------------------------

    def state_digest(self) -> str:
        """Deterministic fingerprint of turn, termination and agent positions."""
        h = hashlib.sha256()
        h.update(struct.pack("<Q?", self.turn, self.terminated))
        for agent in self.agents.create_iter():
            h.update(agent.name.encode())
            h.update(b"\0")
            if agent.kind is AgentKind.AERIAL:
                assert agent.position is not None
                h.update(b"A")
                h.update(struct.pack("<dd", agent.position[0], agent.position[1]))
            else:
                h.update(b"G")
                h.update(struct.pack("<Q", agent.current_node))
        return h.hexdigest()


# --- construction from config ------------------------------------------------


def create_context(
    config: Union[dict[str, Any], str, Path],
    extra_strategies: Optional[dict[str, Callable[..., None]]] = None,
    for_replay: bool = False,
    record: Optional[bool] = None,
) -> Context:
    """Build a fully wired context from a scenario config (dict or file path).

    `for_replay` builds a strategy-free, rule-free context whose state is
    driven purely by recorded events. `record` forces the recorder on or off
    regardless of recording.path.
    """
    from . import scenarios

    if isinstance(config, (str, Path)):
        config = load_config(config)
    resolved = resolve_config(config)
    logging.getLogger("graphsim").setLevel(_LOG_LEVELS[resolved["log_level"]])

    ctx = Context(resolved)
    _build_graph(ctx.graph, resolved["graph"])

    for entry in resolved["sensors"]:
        ctx.sensors.create_sensor(
            entry["name"],
            SensorKind(entry["kind"]),
            sensor_range=entry.get("sensor_range"),
            fov=entry.get("fov"),
            key=entry.get("key"),
        )

    strategies = dict(scenarios.STRATEGIES)
    if extra_strategies:
        strategies.update(extra_strategies)

    for i, entry in enumerate(resolved["agents"]):
        if entry["start_node"] not in ctx.graph.nodes:
            raise ConfigError(
                f"agents[{i}].start_node", f"node {entry['start_node']} not in graph"
            )
        agent = ctx.agents.create_agent(
            entry["name"],
            AgentKind(entry["kind"]),
            start_node=entry["start_node"],
            team=entry["team"],
            speed=entry.get("speed"),
        )
        for sensor_name in entry["sensors"]:
            if sensor_name not in ctx.sensors:
                raise ConfigError(
                    f"agents[{i}].sensors", f"unknown sensor {sensor_name!r}"
                )
            agent.register_sensor(sensor_name)
        if not for_replay:
            strategy_name = entry["strategy"]
            if strategy_name == "human":
                agent.register_strategy(None)
            elif strategy_name in strategies:
                agent.register_strategy(strategies[strategy_name])
            else:
                raise ConfigError(
                    f"agents[{i}].strategy", f"unknown strategy {strategy_name!r}"
                )

    if not for_replay:
        for i, entry in enumerate(resolved["rules"]):
            rule = scenarios.make_rule(entry["name"], entry["params"], ctx, f"rules[{i}]")
            rule.priority = i
            ctx.rules.append(rule)

    ctx.conflict_policy = _build_policy(resolved["conflict_policy"], ctx)

    if record is None:
        record = resolved["recording"]["path"] is not None
    if record and not for_replay:
        ctx.recorder = rec.Recorder(resolved["seed"], semantic_digest(resolved))
    return ctx


def _build_graph(graph: Graph, spec: dict[str, Any]) -> None:
    from . import scenarios

    source, params = spec["source"], spec["params"]
    if source == "empty":
        return
    if source == "grid":
        scenarios.create_grid(graph, params["n"], spacing=params["spacing"])
        return
    if source == "document":
        if "document" in params:
            document = params["document"]
        else:
            try:
                document = json.loads(Path(params["path"]).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError("graph.params.path", str(exc)) from exc
        try:
            graph.bulk_attach(document)
        except (InconsistentDocumentError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError("graph.params.document", str(exc)) from exc
        return
    if source == "osm":
        from . import osm

        try:
            data = Path(params["path"]).read_bytes()
        except OSError as exc:
            raise ConfigError("graph.params.path", str(exc)) from exc
        try:
            network = osm.parse_osm_xml(data, params.get("highway_classes"))
            document = osm.build_graph(
                network,
                osm.IngestConfig(
                    resolution=params["resolution"],
                    consolidation_tolerance=params.get("consolidation_tolerance"),
                    respect_oneway=params["respect_oneway"],
                ),
            )
        except SimulatorError as exc:
            raise ConfigError("graph.params.path", str(exc)) from exc
        graph.bulk_attach(document)
        return
    raise ConfigError("graph.source", f"unknown source {source!r}")


def _build_policy(spec: Any, ctx: Context) -> ConflictPolicy:
    if spec == "allow_all":
        return AllowAll()
    if spec == "random":
        return RandomChoice()
    if isinstance(spec, dict) and "priority" in spec:
        for name in spec["priority"]:
            if name not in ctx.agents:
                raise ConfigError("conflict_policy.priority", f"unknown agent {name!r}")
        return Priority(dict(spec["priority"]))
    raise ConfigError("conflict_policy", f"unknown policy {spec!r}")
