"""Bundled runnable scenarios: grid tag, capture the flag, aerial recon.

Provides the grid generator, the built-in rules (tag, flag_capture,
max_turns), the stock strategies, and the named presets selectable from a
scenario config. Rules record their effects (resets, winner) into the
recording stream explicitly.
"""

from __future__ import annotations

import heapq
import math
from typing import Any, Optional

from .agents import AgentState
from .context import Context, Rule, Termination
from .errors import ConfigError, MissingSensorError, NonEmptyGraphError
from .graph import Edge, Graph, Node
from .sensors import SensorKind

DEFAULT_GRID_SPACING = 20.0


def create_grid(graph: Graph, n: int, spacing: float = DEFAULT_GRID_SPACING) -> None:
    """Populate an empty graph with an n-by-n 4-connected lattice.

    Node ids are row-major (row * n + col); every lattice link gets both
    directed edges, so the result has n^2 nodes and 4n(n-1) edges.
    """
    if n < 1:
        raise ValueError("grid size must be >= 1")
    if len(graph) != 0:
        raise NonEmptyGraphError("create_grid requires an empty graph")
    for i in range(n):
        for j in range(n):
            graph.add_node(Node(i * n + j, x=j * spacing, y=i * spacing))
    eid = 0
    for i in range(n):
        for j in range(n):
            a = i * n + j
            if j + 1 < n:
                graph.add_edge(Edge(eid, a, a + 1, spacing))
                graph.add_edge(Edge(eid + 1, a + 1, a, spacing))
                eid += 2
            if i + 1 < n:
                graph.add_edge(Edge(eid, a, a + n, spacing))
                graph.add_edge(Edge(eid + 1, a + n, a, spacing))
                eid += 2


# --- strategies ---------------------------------------------------------------

def random_neighbor_strategy(state: AgentState) -> None:
    """Move to a uniformly random entry of the NEIGHBOR reading (incl. stay)."""
    for reading in state.sensor_readings.values():
        if reading.kind is SensorKind.NEIGHBOR:
            options = reading.payload
            assert state.rng is not None
            state.action = options[state.rng.randrange(len(options))]
            return
    raise MissingSensorError(f"agent {state.name}: no NEIGHBOR reading available")


def aerial_patrol_strategy(state: AgentState) -> None:
    """Pick a random waypoint inside the map's bounding box each turn."""
    for reading in state.sensor_readings.values():
        if reading.kind is SensorKind.MAP:
            snapshot = reading.payload
            xs = [node.x for node in snapshot.iter_nodes()]
            ys = [node.y for node in snapshot.iter_nodes()]
            if not xs:
                return
            assert state.rng is not None
            state.action = (
                state.rng.uniform(min(xs), max(xs)),
                state.rng.uniform(min(ys), max(ys)),
            )
            return
    raise MissingSensorError(f"agent {state.name}: no MAP reading available")


STRATEGIES = {
    "random_neighbor": random_neighbor_strategy,
    "aerial_patrol": aerial_patrol_strategy,
}


# --- territories -----------------------------------------------------------------

def voronoi_territories(graph: Graph, flags: dict[str, int]) -> dict[int, str]:
    """Assign every node to the team whose flag is nearest by graph distance.

    Ties go to the lexicographically smaller team name; nodes unreachable
    from every flag stay unassigned.
    """
    best: dict[int, tuple[float, str]] = {}
    for team in sorted(flags):
        dist = _dijkstra(graph, flags[team])
        for node_id, d in dist.items():
            if node_id not in best or (d, team) < best[node_id]:
                best[node_id] = (d, team)
    return {node_id: team for node_id, (_, team) in best.items()}


def _dijkstra(graph: Graph, source: int) -> dict[int, float]:
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        for edge_id, target in graph.neighbors(node):
            nd = d + graph.edges[edge_id].length
            if nd < dist.get(target, math.inf):
                dist[target] = nd
                heapq.heappush(heap, (nd, target))
    return dist


# --- rules ---------------------------------------------------------------------

def _teams_from_agents(ctx: Context, path: str) -> dict[str, list[str]]:
    teams: dict[str, list[str]] = {}
    for agent in ctx.agents.create_iter():
        if agent.team:
            teams.setdefault(agent.team, []).append(agent.name)
    if len(teams) != 2:
        raise ConfigError(
            f"{path}.teams",
            f"need exactly two teams (agents declare {sorted(teams) or 'none'})",
        )
    return teams


def _resolve_teams(ctx: Context, params: dict[str, Any], path: str) -> dict[str, list[str]]:
    teams = params.get("teams")
    if teams is None:
        return _teams_from_agents(ctx, path)
    if not isinstance(teams, dict) or len(teams) != 2:
        raise ConfigError(f"{path}.teams", "expected a table of exactly two team lists")
    out: dict[str, list[str]] = {}
    seen: set[str] = set()
    for label, members in teams.items():
        if not isinstance(members, list):
            raise ConfigError(f"{path}.teams.{label}", "expected a list of agent names")
        for name in members:
            if name not in ctx.agents:
                raise ConfigError(f"{path}.teams.{label}", f"unknown agent {name!r}")
            if name in seen:
                raise ConfigError(f"{path}.teams.{label}", f"agent {name!r} on both teams")
            seen.add(name)
        out[label] = list(members)
    return out


def _resolve_flag(ctx: Context, params: dict[str, Any], key: str, path: str) -> int:
    if key not in params:
        raise ConfigError(f"{path}.{key}", "missing flag node")
    node = params[key]
    if not isinstance(node, int) or node not in ctx.graph.nodes:
        raise ConfigError(f"{path}.{key}", f"node {node!r} not in graph")
    return node


def _resolve_territories(
    ctx: Context, params: dict[str, Any], path: str
) -> Optional[dict[int, str]]:
    spec = params.get("territories")
    if spec is None:
        return None
    if spec == "voronoi":
        flags = {
            "red": _resolve_flag(ctx, params, "red_flag", path),
            "blue": _resolve_flag(ctx, params, "blue_flag", path),
        }
        return voronoi_territories(ctx.graph, flags)
    if isinstance(spec, dict):
        out = {}
        for node_key, team in spec.items():
            try:
                node_id = int(node_key)
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.territories", f"bad node key {node_key!r}") from None
            if node_id not in ctx.graph.nodes:
                raise ConfigError(f"{path}.territories", f"node {node_id} not in graph")
            out[node_id] = str(team)
        return out
    raise ConfigError(f"{path}.territories", "expected 'voronoi' or a node->team table")


def make_tag_rule(
    ctx: Context,
    teams: dict[str, list[str]],
    territorial_tag: bool = False,
    territories: Optional[dict[int, str]] = None,
) -> Rule:
    """Reset co-located opponents to their start nodes.

    Plain mode resets both agents of a tagged pair; territorial mode resets
    only the intruder (the agent standing in the other team's territory).
    """
    label_a, label_b = list(teams)

    def apply(ctx: Context, turn: int) -> Optional[Termination]:
        for name_a in teams[label_a]:
            agent_a = ctx.agents.get(name_a)
            for name_b in teams[label_b]:
                agent_b = ctx.agents.get(name_b)
                node_a = agent_a.effective_node(ctx.graph)
                if node_a != agent_b.effective_node(ctx.graph):
                    continue
                if territorial_tag and territories is not None:
                    owner = territories.get(node_a)
                    if owner == label_a:
                        ctx.reset_agent(name_b)
                    elif owner == label_b:
                        ctx.reset_agent(name_a)
                else:
                    ctx.reset_agent(name_a)
                    ctx.reset_agent(name_b)
        return None

    return Rule("tag", apply)


def make_flag_capture_rule(
    ctx: Context,
    teams: dict[str, list[str]],
    red_flag: int,
    blue_flag: int,
) -> Rule:
    """First team to touch the opposing flag wins; same-turn captures draw."""
    flags = {"red": red_flag, "blue": blue_flag}
    opposing = {"red": flags["blue"], "blue": flags["red"]}

    def apply(ctx: Context, turn: int) -> Optional[Termination]:
        captured = [
            team
            for team in ("red", "blue")
            if any(
                ctx.agents.get(name).effective_node(ctx.graph) == opposing[team]
                for name in teams.get(team, ())
            )
        ]
        if not captured:
            return None
        if len(captured) == 2:
            ctx.record_custom("winner", b"draw")
            return Termination(None, "draw")
        ctx.record_custom("winner", captured[0].encode())
        return Termination(captured[0], "flag_capture")

    return Rule("flag_capture", apply)


def make_max_turns_rule(limit: int) -> Rule:
    def apply(ctx: Context, turn: int) -> Optional[Termination]:
        if turn >= limit:
            return Termination(None, "max_turns")
        return None

    return Rule("max_turns", apply)


def make_rule(name: str, params: dict[str, Any], ctx: Context, path: str) -> Rule:
    """Instantiate a built-in rule from resolved config params."""
    if name == "max_turns":
        return make_max_turns_rule(params["limit"])
    if name == "tag":
        teams = _resolve_teams(ctx, params, f"{path}.params")
        territorial = bool(params.get("territorial_tag", False))
        territories = _resolve_territories(ctx, params, f"{path}.params")
        if territorial and territories is None:
            raise ConfigError(f"{path}.params.territories", "territorial tag needs territories")
        return make_tag_rule(ctx, teams, territorial, territories)
    if name == "flag_capture":
        teams = _resolve_teams(ctx, params, f"{path}.params")
        if set(teams) != {"red", "blue"}:
            raise ConfigError(
                f"{path}.params.teams", "flag_capture expects teams labeled red and blue"
            )
        red_flag = _resolve_flag(ctx, params, "red_flag", f"{path}.params")
        blue_flag = _resolve_flag(ctx, params, "blue_flag", f"{path}.params")
        return make_flag_capture_rule(ctx, teams, red_flag, blue_flag)
    raise ConfigError(f"{path}.name", f"unknown rule {name!r}")


# --- default visuals ----------------------------------------------------------

TEAM_COLORS: dict[str, tuple[int, int, int]] = {
    "red": (220, 60, 60),
    "blue": (70, 110, 220),
}
_FALLBACK_COLORS = [(240, 200, 40), (60, 200, 140), (200, 80, 200), (245, 140, 30)]


def install_default_visuals(ctx: Context) -> None:
    """Graph, per-agent and ARC-sensor artists plus flags for CTF configs."""
    vis = ctx.config["vis"]
    ctx.visual.set_graph_visual(vis["width"], vis["height"])
    for i, agent in enumerate(ctx.agents.create_iter()):
        color = TEAM_COLORS.get(agent.team, _FALLBACK_COLORS[i % len(_FALLBACK_COLORS)])
        ctx.visual.set_agent_visual(agent.name, color=color, size=6.0)
    for name in ctx.sensors.names():
        if ctx.sensors.get(name).kind is SensorKind.ARC:
            ctx.visual.set_sensor_visual(name, (0, 255, 0), (0, 255, 0))
    for entry in ctx.config["rules"]:
        if entry["name"] == "flag_capture":
            from .viz import Artist

            ctx.visual.add_artist(
                "flags",
                Artist(_draw_flags, layer=35, data=dict(entry["params"])),
            )
            break


def _draw_flags(ctx: Context, data: dict[str, Any]) -> None:
    for key, color in (("red_flag", TEAM_COLORS["red"]), ("blue_flag", TEAM_COLORS["blue"])):
        node_id = data.get(key)
        if node_id is None or node_id not in ctx.graph.nodes:
            continue
        node = ctx.graph.get_node(node_id)
        ctx.visual.render_rectangle(node.x, node.y, 10.0, 10.0, color)


# --- presets ---------------------------------------------------------------------

PRESETS: dict[str, dict[str, Any]] = {
    "grid_tag": {
        "seed": 0,
        "graph": {"source": "grid", "params": {"n": 20, "spacing": 20.0}},
        "sensors": [{"name": "nbr", "kind": "neighbor"}],
        "agents": [
            {"name": "red_0", "start_node": 0, "team": "red",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "red_1", "start_node": 19, "team": "red",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "blue_0", "start_node": 380, "team": "blue",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "blue_1", "start_node": 399, "team": "blue",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
        ],
        "rules": [
            {"name": "tag", "params": {}},
            {"name": "max_turns", "params": {"limit": 200}},
        ],
    },
    "ctf": {
        "seed": 0,
        "graph": {"source": "grid", "params": {"n": 10, "spacing": 20.0}},
        "sensors": [{"name": "nbr", "kind": "neighbor"}],
        "agents": [
            {"name": "red_0", "start_node": 1, "team": "red",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "red_1", "start_node": 10, "team": "red",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "blue_0", "start_node": 98, "team": "blue",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "blue_1", "start_node": 89, "team": "blue",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
        ],
        "rules": [
            {"name": "tag", "params": {
                "territorial_tag": True, "territories": "voronoi",
                "red_flag": 0, "blue_flag": 99,
            }},
            {"name": "flag_capture", "params": {"red_flag": 0, "blue_flag": 99}},
            {"name": "max_turns", "params": {"limit": 500}},
        ],
    },
    # 39x39 = 1521 nodes; throughput probe for large-graph headless runs
    "bench_grid": {
        "seed": 0,
        "graph": {"source": "grid", "params": {"n": 39, "spacing": 20.0}},
        "sensors": [{"name": "nbr", "kind": "neighbor"}],
        "agents": [
            {"name": f"walker_{i}", "start_node": i * 151, "team": "bench",
             "sensors": ["nbr"], "strategy": "random_neighbor"}
            for i in range(10)
        ],
        "rules": [],
    },
    "aerial_demo": {
        "seed": 0,
        "graph": {"source": "grid", "params": {"n": 20, "spacing": 20.0}},
        "sensors": [
            {"name": "nbr", "kind": "neighbor"},
            {"name": "camera", "kind": "arc", "sensor_range": 50.0, "fov": 2.5},
            {"name": "worldmap", "kind": "map"},
        ],
        "agents": [
            {"name": "scout_0", "start_node": 0, "team": "ground",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "scout_1", "start_node": 399, "team": "ground",
             "sensors": ["nbr"], "strategy": "random_neighbor"},
            {"name": "hawk", "kind": "aerial", "speed": 15.0, "start_node": 210,
             "team": "air", "sensors": ["camera", "worldmap"],
             "strategy": "aerial_patrol"},
        ],
        "rules": [{"name": "max_turns", "params": {"limit": 100}}],
    },
}
