"""Backend-abstracted rendering: artists emit primitive commands per frame.

Artists are layered drawing callbacks working in world coordinates
(meters). Each turn the engine runs them in layer order into a Frame,
culls commands outside the active viewport and hands the frame to the
backend: NO_VIS drops everything without even calling the drawers, STREAM
serializes frames to connected viewers and collects their input. Rendering
never influences simulation state.

Built-in artist layers: graph 10, sensor highlights 20, agents 30.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Optional, Union

from .agents import AgentKind
from .errors import (
    DuplicateArtistError,
    HumanInputTimeoutError,
    NoClientConnectedError,
    PrimitiveOutsideFrameError,
)
from .sensors import ArcView, SensorKind
from .stream import StreamServer

if TYPE_CHECKING:
    from .context import Context

logger = logging.getLogger(__name__)

Color = tuple[int, int, int]

GRAPH_LAYER = 10
SENSOR_LAYER = 20
AGENT_LAYER = 30


def _check_color(color: Color) -> Color:
    r, g, b = color
    for c in (r, g, b):
        if not (0 <= int(c) <= 255):
            raise ValueError(f"color component out of range: {color}")
    return (int(r), int(g), int(b))


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    radius: float
    color: Color

    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x - self.radius, self.y - self.radius,
                self.x + self.radius, self.y + self.radius)

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "circle", "x": self.x, "y": self.y,
                "radius": self.radius, "color": list(self.color)}


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle centered on (x, y)."""

    x: float
    y: float
    width: float
    height: float
    color: Color

    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x - self.width / 2, self.y - self.height / 2,
                self.x + self.width / 2, self.y + self.height / 2)

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "rectangle", "x": self.x, "y": self.y,
                "width": self.width, "height": self.height, "color": list(self.color)}


@dataclass(frozen=True)
class Line:
    x1: float
    y1: float
    x2: float
    y2: float
    width: float
    color: Color

    def bbox(self) -> tuple[float, float, float, float]:
        half = self.width / 2
        return (min(self.x1, self.x2) - half, min(self.y1, self.y2) - half,
                max(self.x1, self.x2) + half, max(self.y1, self.y2) + half)

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "line", "x1": self.x1, "y1": self.y1,
                "x2": self.x2, "y2": self.y2, "width": self.width,
                "color": list(self.color)}


@dataclass(frozen=True)
class Text:
    x: float
    y: float
    content: str
    size: float
    color: Color

    def bbox(self) -> tuple[float, float, float, float]:
        # server-side approximation; exact metrics live in the client
        return (self.x, self.y, self.x + 0.6 * self.size * len(self.content),
                self.y + self.size)

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "text", "x": self.x, "y": self.y,
                "content": self.content, "size": self.size, "color": list(self.color)}


RenderCommand = Union[Circle, Rectangle, Line, Text]


@dataclass(frozen=True)
class Viewport:
    cx: float
    cy: float
    hw: float
    hh: float

    def intersects(self, bbox: tuple[float, float, float, float]) -> bool:
        minx, miny, maxx, maxy = bbox
        return (
            maxx >= self.cx - self.hw
            and minx <= self.cx + self.hw
            and maxy >= self.cy - self.hh
            and miny <= self.cy + self.hh
        )


@dataclass
class Frame:
    turn: int
    viewport: Optional[Viewport]
    commands: list[RenderCommand]

    def to_wire(self) -> dict[str, Any]:
        return {
            "type": "frame",
            "turn": self.turn,
            "commands": [c.to_wire() for c in self.commands],
        }


def cull(commands: list[RenderCommand], viewport: Optional[Viewport]) -> list[RenderCommand]:
    """Drop commands whose bounding boxes miss the viewport entirely."""
    if viewport is None:
        return list(commands)
    return [c for c in commands if viewport.intersects(c.bbox())]


@dataclass
class Artist:
    """Layered drawing callback; equal layers draw in insertion order."""

    drawer: Callable[["Context", dict[str, Any]], None]
    layer: int = 0
    data: dict[str, Any] = field(default_factory=dict)
    name: str = ""


# --- input events ----------------------------------------------------------

@dataclass(frozen=True)
class HumanAction:
    agent: str
    target: int


@dataclass(frozen=True)
class CameraPan:
    dx: float
    dy: float
    zoom: float = 1.0


@dataclass(frozen=True)
class Pause:
    pass


@dataclass(frozen=True)
class Resume:
    pass


InputEvent = Union[HumanAction, CameraPan, Pause, Resume]


class VisMode(Enum):
    NO_VIS = "none"
    STREAM = "stream"


class VisualEngine:
    """Runs artists into frames and talks to the streaming backend."""

    def __init__(self, mode: VisMode = VisMode.NO_VIS, width: int = 800, height: int = 600):
        self.mode = mode
        self.width = width
        self.height = height
        self.artists: dict[str, Artist] = {}
        self.viewport: Optional[Viewport] = None
        self.server: Optional[StreamServer] = None
        self.last_frame: Optional[Frame] = None
        self.drawer_calls = 0
        self.frames_built = 0
        self._ctx: Optional["Context"] = None
        self._active: Optional[list[RenderCommand]] = None

    def attach(self, ctx: "Context") -> None:
        self._ctx = ctx

    # --- artist management --------------------------------------------------

    def add_artist(self, name: str, artist: Artist) -> Artist:
        if name in self.artists:
            raise DuplicateArtistError(f"artist {name!r} already exists")
        artist.name = name
        self.artists[name] = artist
        return artist

    def _set_builtin(self, name: str, artist: Artist) -> Artist:
        artist.name = name
        self.artists[name] = artist  # set_* calls replace, never error
        return artist

    def set_graph_visual(self, width: Optional[int] = None, height: Optional[int] = None) -> Artist:
        if width is not None:
            self.width = width
        if height is not None:
            self.height = height
        return self._set_builtin("graph", Artist(_draw_graph, layer=GRAPH_LAYER))

    def set_agent_visual(self, name: str, color: Color = (255, 0, 0), size: float = 10.0) -> Artist:
        assert self._ctx is not None
        self._ctx.agents.get(name)  # raises UnknownAgentError
        artist = Artist(
            _draw_agent,
            layer=AGENT_LAYER,
            data={"agent": name, "color": _check_color(color), "size": size},
        )
        return self._set_builtin(f"agent:{name}", artist)

    def set_sensor_visual(
        self,
        name: str,
        node_color: Color = (0, 255, 0),
        edge_color: Color = (0, 255, 0),
    ) -> Artist:
        assert self._ctx is not None
        self._ctx.sensors.get(name)  # raises UnknownSensorError
        artist = Artist(
            _draw_sensor,
            layer=SENSOR_LAYER,
            data={
                "sensor": name,
                "node_color": _check_color(node_color),
                "edge_color": _check_color(edge_color),
            },
        )
        return self._set_builtin(f"sensor:{name}", artist)

    # --- primitives (legal only inside a drawer) ------------------------------

    def _emit(self, command: RenderCommand) -> None:
        if self._active is None:
            raise PrimitiveOutsideFrameError(
                "render primitives may only be called from an artist drawer"
            )
        self._active.append(command)

    def render_circle(self, x: float, y: float, radius: float, color: Color) -> None:
        self._emit(Circle(x, y, radius, _check_color(color)))

    def render_rectangle(self, x: float, y: float, width: float, height: float, color: Color) -> None:
        self._emit(Rectangle(x, y, width, height, _check_color(color)))

    def render_line(self, x1: float, y1: float, x2: float, y2: float,
                    width: float, color: Color) -> None:
        self._emit(Line(x1, y1, x2, y2, width, _check_color(color)))

    def render_text(self, x: float, y: float, content: str, size: float, color: Color) -> None:
        self._emit(Text(x, y, content, size, _check_color(color)))

    # --- streaming lifecycle --------------------------------------------------

    def start_stream(self, host: str = "127.0.0.1", port: int = 0) -> int:
        """Start the frame-streaming listener; returns the bound port."""
        self.server = StreamServer(host, port)
        return self.server.start()

    def stop_stream(self) -> None:
        if self.server is not None:
            self.server.stop()
            self.server = None

    # --- per-turn work ----------------------------------------------------------

    def build_frame(self, ctx: "Context") -> Frame:
        commands: list[RenderCommand] = []
        self._active = commands
        try:
            insertion = {name: i for i, name in enumerate(self.artists)}
            ordered = sorted(
                self.artists.values(), key=lambda a: (a.layer, insertion[a.name])
            )
            for artist in ordered:
                artist.drawer(ctx, artist.data)
                self.drawer_calls += 1
        finally:
            self._active = None
        frame = Frame(ctx.turn, self.viewport, cull(commands, self.viewport))
        self.last_frame = frame
        self.frames_built += 1
        return frame

    def simulate(self, ctx: "Context") -> None:
        """Phase 6 of the game loop; a no-op in NO_VIS mode."""
        if self.mode is not VisMode.STREAM:
            return
        frame = self.build_frame(ctx)
        if self.server is not None:
            self.server.broadcast(frame.to_wire())
        self.sync_inputs(ctx)

    def sync_inputs(self, ctx: "Context") -> None:
        """Drain viewer input into the context's pending-action buffer."""
        if self.server is None:
            return
        for message in self.server.drain_inbox():
            self._handle_input(ctx, message)

    def _handle_input(self, ctx: "Context", message: dict[str, Any]) -> None:
        mtype = message.get("type")
        if mtype == "action":
            agent = message.get("agent")
            target = message.get("target")
            if isinstance(agent, str) and isinstance(target, int):
                ctx.feed_action(agent, target)
        elif mtype == "camera":
            try:
                self.viewport = Viewport(
                    float(message["cx"]), float(message["cy"]),
                    float(message["hw"]), float(message["hh"]),
                )
            except (KeyError, TypeError, ValueError):
                logger.warning("ignoring malformed camera message: %r", message)
        else:
            logger.debug("ignoring input message type %r", mtype)

    # --- human control ------------------------------------------------------------

    def await_human_action(
        self, ctx: "Context", agent_name: str, timeout: Optional[float] = None
    ) -> int:
        """Ask connected viewers for a move; returns a validated target node.

        Sends an action_request listing the legal targets (the agent's
        one-hop neighborhood including its own node, with coordinates so
        clients can highlight and hit-test them) and blocks until a valid
        action arrives. Invalid answers are rejected and re-prompted.
        """
        if self.mode is not VisMode.STREAM or self.server is None:
            raise NoClientConnectedError("no streaming backend attached")
        agent = ctx.agents.get(agent_name)
        current = agent.effective_node(ctx.graph)
        target_ids = [current] + [t for _, t in ctx.graph.neighbors(current) if t != current]
        targets = set(target_ids)
        request = {
            "type": "action_request",
            "agent": agent_name,
            "targets": [
                {"id": t, "x": ctx.graph.nodes[t].x, "y": ctx.graph.nodes[t].y}
                for t in target_ids
            ],
        }
        deadline = None if timeout is None else time.monotonic() + timeout
        prompted = False
        while True:
            if deadline is not None and time.monotonic() > deadline:
                raise HumanInputTimeoutError(f"no action for {agent_name} within {timeout}s")
            if self.server.client_count() == 0:
                time.sleep(0.01)
                prompted = False
                continue
            if not prompted:
                self.server.broadcast(request)
                prompted = True
            message = self.server.poll_inbox(0.05)
            if message is None:
                continue
            if message.get("type") == "camera":
                self._handle_input(ctx, message)
                continue
            if message.get("type") != "action":
                continue
            if message.get("agent") != agent_name:
                self._handle_input(ctx, message)
                continue
            target = message.get("target")
            if isinstance(target, int) and target in targets:
                return target
            logger.warning("agent %s: rejected target %r; re-prompting", agent_name, target)
            self.server.broadcast(request)


# --- built-in drawers ---------------------------------------------------------

_EDGE_COLOR = (130, 130, 130)
_NODE_COLOR = (190, 190, 190)


def _draw_graph(ctx: "Context", data: dict[str, Any]) -> None:
    visual = ctx.visual
    graph = ctx.graph
    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        if edge.linestring:
            pts = edge.linestring
            for i in range(len(pts) - 1):
                visual.render_line(pts[i][0], pts[i][1], pts[i + 1][0], pts[i + 1][1],
                                   1.0, _EDGE_COLOR)
        else:
            src = graph.nodes[edge.source]
            dst = graph.nodes[edge.target]
            visual.render_line(src.x, src.y, dst.x, dst.y, 1.0, _EDGE_COLOR)
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        visual.render_circle(node.x, node.y, 2.0, _NODE_COLOR)


def _draw_agent(ctx: "Context", data: dict[str, Any]) -> None:
    agent = ctx.agents.get(data["agent"])
    if agent.kind is AgentKind.AERIAL and agent.position is not None:
        x, y = agent.position
    else:
        node = ctx.graph.get_node(agent.current_node)
        x, y = node.x, node.y
    ctx.visual.render_circle(x, y, data["size"], data["color"])


def _draw_sensor(ctx: "Context", data: dict[str, Any]) -> None:
    sensor_name = data["sensor"]
    graph = ctx.graph
    for agent in ctx.agents.create_iter():
        if sensor_name not in agent.sensors or agent.last_state is None:
            continue
        reading = agent.last_state.sensor_readings.get(sensor_name)
        if reading is None:
            continue
        nodes: list[int] = []
        edges: list[int] = []
        if reading.kind is SensorKind.ARC and isinstance(reading.payload, ArcView):
            nodes = sorted(reading.payload.nodes)
            edges = sorted(reading.payload.edges)
        elif reading.kind is SensorKind.NEIGHBOR:
            nodes = list(reading.payload)
        elif reading.kind is SensorKind.AGENT:
            nodes = sorted(set(reading.payload.values()))
        else:
            continue
        for edge_id in edges:
            edge = graph.edges.get(edge_id)
            if edge is None:
                continue
            src, dst = graph.nodes[edge.source], graph.nodes[edge.target]
            ctx.visual.render_line(src.x, src.y, dst.x, dst.y, 1.5, data["edge_color"])
        for node_id in nodes:
            node = graph.nodes.get(node_id)
            if node is not None:
                ctx.visual.render_circle(node.x, node.y, 2.5, data["node_color"])
