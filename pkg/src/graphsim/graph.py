"""Mutable directed graph with planar coordinates — the simulation environment.

Nodes carry planar positions in meters; edges are directed, carry a length
and an optional polyline geometry for rendering curved roads. Bidirectional
roads are represented as two directed edges. Node and edge ids are
caller-assigned so that source identifiers (OSM ids, grid indices) survive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .errors import (
    DuplicateEdgeError,
    DuplicateNodeError,
    InconsistentDocumentError,
    MissingEndpointError,
    UnknownNodeError,
)

NodeId = int
EdgeId = int

_MAX_ID = 2**64 - 1


@dataclass
class Node:
    id: NodeId
    x: float
    y: float
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0 <= self.id <= _MAX_ID):
            raise ValueError(f"node id out of range: {self.id}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"node {self.id} has non-finite coordinates")


@dataclass
class Edge:
    id: EdgeId
    source: NodeId
    target: NodeId
    length: float
    linestring: Optional[list[tuple[float, float]]] = None

    def __post_init__(self) -> None:
        if not (0 <= self.id <= _MAX_ID):
            raise ValueError(f"edge id out of range: {self.id}")
        if not (self.length > 0):
            raise ValueError(f"edge {self.id} has non-positive length")


def _polyline_length(points: list[tuple[float, float]]) -> float:
    return sum(
        math.dist(points[i], points[i + 1]) for i in range(len(points) - 1)
    )


class Graph:
    """Directed graph with deterministic neighbor ordering (ascending edge id)."""

    def __init__(self) -> None:
        self.nodes: dict[NodeId, Node] = {}
        self.edges: dict[EdgeId, Edge] = {}
        self.adjacency: dict[NodeId, list[EdgeId]] = {}
        # incoming index keeps remove_node linear in the node's degree
        self._incoming: dict[NodeId, list[EdgeId]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def add_node(self, node: Node) -> None:
        if node.id in self.nodes:
            raise DuplicateNodeError(f"node {node.id} already exists")
        self.nodes[node.id] = node
        self.adjacency[node.id] = []
        self._incoming[node.id] = []

    def get_node(self, node_id: NodeId) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id}") from None

    def add_edge(self, edge: Edge) -> None:
        if edge.id in self.edges:
            raise DuplicateEdgeError(f"edge {edge.id} already exists")
        if edge.source not in self.nodes:
            raise MissingEndpointError(
                f"edge {edge.id}: source {edge.source} not in graph"
            )
        if edge.target not in self.nodes:
            raise MissingEndpointError(
                f"edge {edge.id}: target {edge.target} not in graph"
            )
        if edge.linestring is not None:
            self._check_linestring(edge)
        self.edges[edge.id] = edge
        # keep adjacency sorted so neighbor order is stable without re-sorting
        adj = self.adjacency[edge.source]
        adj.append(edge.id)
        if len(adj) > 1 and adj[-2] > edge.id:
            adj.sort()
        self._incoming[edge.target].append(edge.id)

    def _check_linestring(self, edge: Edge) -> None:
        ls = edge.linestring
        assert ls is not None
        if len(ls) < 2:
            raise ValueError(f"edge {edge.id}: linestring needs >= 2 points")
        src = self.nodes[edge.source]
        dst = self.nodes[edge.target]
        if ls[0] != (src.x, src.y) or ls[-1] != (dst.x, dst.y):
            raise ValueError(
                f"edge {edge.id}: linestring endpoints do not match node coordinates"
            )
        arc = _polyline_length(ls)
        if abs(arc - edge.length) > 1e-6 * max(abs(edge.length), 1.0):
            raise ValueError(
                f"edge {edge.id}: linestring arc length {arc} != length {edge.length}"
            )

    def get_edge(self, edge_id: EdgeId) -> Edge:
        return self.edges[edge_id]

    def remove_node(self, node_id: NodeId) -> None:
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id}")
        incident = set(self.adjacency[node_id]) | set(self._incoming[node_id])
        for edge_id in incident:
            edge = self.edges.pop(edge_id)
            if edge.source != node_id:
                self.adjacency[edge.source].remove(edge_id)
            if edge.target != node_id:
                self._incoming[edge.target].remove(edge_id)
        del self.nodes[node_id]
        del self.adjacency[node_id]
        del self._incoming[node_id]

    def neighbors(self, node_id: NodeId) -> list[tuple[EdgeId, NodeId]]:
        """Outgoing edges of a node as (edge id, target id), ascending edge id."""
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id}")
        return [(eid, self.edges[eid].target) for eid in self.adjacency[node_id]]

    def iter_nodes(self) -> Iterator[Node]:
        return iter(self.nodes.values())

    def iter_edges(self) -> Iterator[Edge]:
        return iter(self.edges.values())

    def nearest_node(self, x: float, y: float) -> NodeId:
        """Closest node to a planar point (linear scan, ties to lower id)."""
        if not self.nodes:
            raise UnknownNodeError("graph is empty")
        best_id = -1
        best_d = math.inf
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            d = (node.x - x) ** 2 + (node.y - y) ** 2
            if d < best_d:
                best_d = d
                best_id = node_id
        return best_id

    def clear(self) -> None:
        self.nodes.clear()
        self.edges.clear()
        self.adjacency.clear()
        self._incoming.clear()

    def copy(self) -> "Graph":
        """Independent snapshot; mutating it never touches the original."""
        g = Graph()
        for node in self.nodes.values():
            g.add_node(Node(node.id, node.x, node.y, dict(node.meta)))
        for edge in self.edges.values():
            ls = list(edge.linestring) if edge.linestring is not None else None
            g.add_edge(Edge(edge.id, edge.source, edge.target, edge.length, ls))
        return g

    def bulk_attach(self, document: dict[str, Any]) -> None:
        """Replace the graph contents with a GraphDocument.

        The document must be internally consistent: every edge endpoint has
        to be declared in the node list.
        """
        nodes = []
        for raw in document.get("nodes", []):
            nodes.append(
                Node(
                    int(raw["id"]),
                    float(raw["x"]),
                    float(raw["y"]),
                    dict(raw.get("meta", {})),
                )
            )
        declared = {n.id for n in nodes}
        edges = []
        for raw in document.get("edges", []):
            eid = int(raw["id"])
            src, dst = int(raw["source"]), int(raw["target"])
            if src not in declared or dst not in declared:
                raise InconsistentDocumentError(
                    eid, f"edge {eid} references undeclared node"
                )
            ls = raw.get("linestring")
            if ls is not None:
                ls = [(float(p[0]), float(p[1])) for p in ls]
            edges.append(Edge(eid, src, dst, float(raw["length"]), ls))
        self.clear()
        for node in nodes:
            self.add_node(node)
        for edge in edges:
            self.add_edge(edge)

    def export_document(self) -> dict[str, Any]:
        """Portable GraphDocument; bulk_attach(export_document()) round-trips."""
        nodes = []
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            entry: dict[str, Any] = {"id": node.id, "x": node.x, "y": node.y}
            if node.meta:
                entry["meta"] = dict(node.meta)
            nodes.append(entry)
        edges = []
        for edge_id in sorted(self.edges):
            edge = self.edges[edge_id]
            entry = {
                "id": edge.id,
                "source": edge.source,
                "target": edge.target,
                "length": edge.length,
            }
            if edge.linestring is not None:
                entry["linestring"] = [[p[0], p[1]] for p in edge.linestring]
            edges.append(entry)
        return {"nodes": nodes, "edges": edges}


def document_to_json(document: dict[str, Any]) -> str:
    """Canonical GraphDocument serialization (stable byte-for-byte)."""
    return json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n"


def load_document(text: str) -> dict[str, Any]:
    return json.loads(text)
