from __future__ import annotations

import math
import random
from pathlib import Path

import pytest

from graphsim import Edge, Graph, Node

FIXTURES = Path(__file__).parent / "fixtures"


def make_path_graph(n: int, length: float = 10.0) -> Graph:
    """0 -> 1 -> ... -> n-1 with nodes on the x axis."""
    g = Graph()
    for i in range(n):
        g.add_node(Node(i, x=float(i) * length, y=0.0))
    for i in range(n - 1):
        g.add_edge(Edge(i, i, i + 1, length))
    return g


def make_random_graph(rng: random.Random, n_nodes: int, extent: float = 200.0) -> Graph:
    """Random planar graph: nodes in a square, sparse random directed edges."""
    g = Graph()
    for i in range(n_nodes):
        g.add_node(Node(i, rng.uniform(-extent, extent), rng.uniform(-extent, extent)))
    eid = 0
    n_edges = rng.randrange(n_nodes, 3 * n_nodes)
    for _ in range(n_edges):
        a = rng.randrange(n_nodes)
        b = rng.randrange(n_nodes)
        if a == b:
            continue
        na, nb = g.nodes[a], g.nodes[b]
        g.add_edge(Edge(eid, a, b, max(math.dist((na.x, na.y), (nb.x, nb.y)), 1e-9)))
        eid += 1
    return g


def ctx_from_graph(graph: Graph, sensors=(), agents=(), seed: int = 0, **extra):
    """Real context over an in-memory graph document (no files involved)."""
    from graphsim import create_context

    config = {
        "seed": seed,
        "graph": {"source": "document", "params": {"document": graph.export_document()}},
        "sensors": list(sensors),
        "agents": list(agents),
        **extra,
    }
    return create_context(config)


@pytest.fixture
def grid_ctx():
    """5x5 grid context with a NEIGHBOR sensor and one scripted agent."""
    from graphsim import create_context

    return create_context(
        {
            "seed": 7,
            "graph": {"source": "grid", "params": {"n": 5, "spacing": 20.0}},
            "sensors": [{"name": "nbr", "kind": "neighbor"}],
            "agents": [
                {
                    "name": "walker",
                    "start_node": 12,
                    "team": "solo",
                    "sensors": ["nbr"],
                    "strategy": "random_neighbor",
                }
            ],
        }
    )
