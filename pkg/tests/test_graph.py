from __future__ import annotations

import json
import random

import pytest

from graphsim import Edge, Graph, Node, create_grid, document_to_json
from graphsim.errors import (
    DuplicateEdgeError,
    DuplicateNodeError,
    InconsistentDocumentError,
    MissingEndpointError,
    UnknownNodeError,
)

from conftest import make_path_graph


def adjacency_cross_scan(g: Graph) -> None:
    """Oracle: adjacency lists exactly mirror the edge set, both directions."""
    listed = {(src, eid) for src, eids in g.adjacency.items() for eid in eids}
    stored = {(e.source, e.id) for e in g.edges.values()}
    assert listed == stored
    for eid in g.edges:
        assert g.edges[eid].source in g.nodes
        assert g.edges[eid].target in g.nodes


def test_add_node_empty_graph():
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    assert len(g) == 1
    assert len(g.edges) == 0
    assert g.neighbors(0) == []


def test_add_node_duplicate():
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    with pytest.raises(DuplicateNodeError):
        g.add_node(Node(0, 1.0, 1.0))


def test_grid_node_count():
    # n^2 nodes for an n-by-n grid built through repeated add_node
    g = Graph()
    create_grid(g, 20)
    assert len(g.nodes) == 20 * 20 == 400


def test_add_edge_and_neighbors():
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    g.add_node(Node(1, 10.0, 0.0))
    g.add_edge(Edge(0, 0, 1, 10.0))
    assert g.neighbors(0) == [(0, 1)]
    assert g.neighbors(1) == []


def test_add_edge_missing_endpoint():
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    with pytest.raises(MissingEndpointError):
        g.add_edge(Edge(0, 0, 99, 10.0))


def test_add_edge_duplicate_id():
    g = make_path_graph(3)
    with pytest.raises(DuplicateEdgeError):
        g.add_edge(Edge(0, 2, 1, 10.0))


def test_grid_edge_count():
    # 4-connected, both directions: 2 * 2 * n * (n - 1)
    g = Graph()
    create_grid(g, 20)
    assert len(g.edges) == 2 * 2 * 20 * 19 == 1520


def test_edge_validation():
    g = make_path_graph(2)
    with pytest.raises(ValueError):
        Edge(5, 0, 1, 0.0)  # non-positive length
    with pytest.raises(ValueError):
        g.add_edge(Edge(5, 0, 1, 5.0, linestring=[(0.0, 0.0), (10.0, 0.0)]))
    # consistent linestring is accepted
    g.add_edge(Edge(5, 1, 0, 10.0, linestring=[(10.0, 0.0), (0.0, 0.0)]))


def test_remove_node_cascades():
    g = make_path_graph(3)
    g.remove_node(1)
    assert len(g.nodes) == 2
    assert len(g.edges) == 0
    adjacency_cross_scan(g)


def test_remove_unknown_node():
    g = make_path_graph(3)
    with pytest.raises(UnknownNodeError):
        g.remove_node(99)


def test_remove_then_readd():
    g = make_path_graph(3)
    g.remove_node(1)
    g.add_node(Node(1, 1.0, 1.0))
    assert g.neighbors(1) == []
    adjacency_cross_scan(g)


def test_neighbors_isolated_and_order():
    g = Graph()
    for i in range(4):
        g.add_node(Node(i, float(i), 0.0))
    assert g.neighbors(3) == []
    # edges inserted out of id order must still come back ascending
    g.add_edge(Edge(7, 0, 1, 1.0))
    g.add_edge(Edge(2, 0, 2, 2.0))
    g.add_edge(Edge(5, 0, 3, 3.0))
    assert g.neighbors(0) == [(2, 2), (5, 3), (7, 1)]
    assert g.neighbors(0) == g.neighbors(0)


def test_grid_neighbor_degrees():
    g = Graph()
    create_grid(g, 5)
    interior = 2 * 5 + 2  # row 2, col 2
    assert len(g.neighbors(interior)) == 4
    assert len(g.neighbors(0)) == 2  # corner


def test_unknown_node_neighbors():
    g = Graph()
    with pytest.raises(UnknownNodeError):
        g.neighbors(0)


def test_bulk_attach_minimal():
    g = Graph()
    g.bulk_attach(
        {
            "nodes": [{"id": 0, "x": 0.0, "y": 0.0}, {"id": 1, "x": 3.0, "y": 4.0}],
            "edges": [{"id": 0, "source": 0, "target": 1, "length": 5.0}],
        }
    )
    assert len(g.nodes) == 2 and len(g.edges) == 1
    adjacency_cross_scan(g)


def test_bulk_attach_inconsistent():
    g = Graph()
    with pytest.raises(InconsistentDocumentError) as err:
        g.bulk_attach(
            {
                "nodes": [{"id": 0, "x": 0.0, "y": 0.0}],
                "edges": [{"id": 9, "source": 0, "target": 1, "length": 5.0}],
            }
        )
    assert err.value.edge_id == 9


def test_bulk_attach_replaces_contents():
    g = make_path_graph(4)
    g.bulk_attach({"nodes": [{"id": 42, "x": 1.0, "y": 2.0}], "edges": []})
    assert list(g.nodes) == [42]
    assert g.edges == {}


def test_export_round_trip():
    g = make_path_graph(5)
    g.nodes[2].meta["territory"] = "red"
    doc = g.export_document()
    h = Graph()
    h.bulk_attach(doc)
    assert h == g
    # and the canonical serialization is stable
    assert document_to_json(doc) == document_to_json(h.export_document())
    assert json.loads(document_to_json(doc)) == doc


def test_random_op_sequences_keep_adjacency_consistent():
    # property: arbitrary add/remove sequences never desync adjacency
    rng = random.Random(1234)
    g = Graph()
    next_node, next_edge = 0, 0
    for _ in range(500):
        op = rng.random()
        if op < 0.45 or not g.nodes:
            g.add_node(Node(next_node, rng.uniform(-10, 10), rng.uniform(-10, 10)))
            next_node += 1
        elif op < 0.8 and len(g.nodes) >= 2:
            ids = list(g.nodes)
            a, b = rng.choice(ids), rng.choice(ids)
            if a != b:
                g.add_edge(Edge(next_edge, a, b, 1.0))
                next_edge += 1
        else:
            victim = rng.choice(list(g.nodes))
            g.remove_node(victim)
            assert all(e.source != victim and e.target != victim for e in g.edges.values())
        adjacency_cross_scan(g)


def test_nearest_node():
    g = make_path_graph(3)  # nodes at x = 0, 10, 20
    assert g.nearest_node(4.9, 0.0) == 0
    assert g.nearest_node(5.1, 0.0) == 1
    assert g.nearest_node(5.0, 0.0) == 0  # tie goes to the lower id
