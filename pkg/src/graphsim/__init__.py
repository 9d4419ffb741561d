"""graphsim: scalable graph-based multi-agent simulator.

Agents move on graphs derived from real road networks or synthetic grids,
observe through pluggable sensors, act through user strategies and are
governed by custom rules, with deterministic binary recordings for replay
and an optional frame-streaming viewer for human-in-the-loop play.
"""

from .agents import Agent, AgentEngine, AgentKind, AgentState, ProposedAction
from .context import (
    AllowAll,
    Context,
    CustomResolver,
    Priority,
    RandomChoice,
    Rule,
    Termination,
    create_context,
    resolve_conflicts,
)
from .config import load_config, resolve_config, semantic_digest
from .graph import Edge, Graph, Node, document_to_json, load_document
from .osm import IngestConfig, build_graph, parse_osm_xml, project
from .recorder import (
    AerialMoved,
    AgentMoved,
    AgentReset,
    Custom,
    Recorder,
    Terminated,
    TurnBegin,
    decode,
    replay,
    self_check,
    translate,
)
from .scenarios import (
    PRESETS,
    create_grid,
    install_default_visuals,
    random_neighbor_strategy,
    voronoi_territories,
)
from .sensors import ArcView, Sensor, SensorEngine, SensorKind, SensorReading
from .viz import Artist, Circle, Frame, Line, Rectangle, Text, Viewport, VisMode, VisualEngine

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentEngine",
    "AgentKind",
    "AgentState",
    "ProposedAction",
    "AllowAll",
    "Context",
    "CustomResolver",
    "Priority",
    "RandomChoice",
    "Rule",
    "Termination",
    "create_context",
    "resolve_conflicts",
    "load_config",
    "resolve_config",
    "semantic_digest",
    "Edge",
    "Graph",
    "Node",
    "document_to_json",
    "load_document",
    "IngestConfig",
    "build_graph",
    "parse_osm_xml",
    "project",
    "AerialMoved",
    "AgentMoved",
    "AgentReset",
    "Custom",
    "Recorder",
    "Terminated",
    "TurnBegin",
    "decode",
    "replay",
    "self_check",
    "translate",
    "PRESETS",
    "create_grid",
    "install_default_visuals",
    "random_neighbor_strategy",
    "voronoi_territories",
    "ArcView",
    "Sensor",
    "SensorEngine",
    "SensorKind",
    "SensorReading",
    "Artist",
    "Circle",
    "Frame",
    "Line",
    "Rectangle",
    "Text",
    "Viewport",
    "VisMode",
    "VisualEngine",
    "__version__",
]
