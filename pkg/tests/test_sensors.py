from __future__ import annotations

import math
import random

import pytest

from graphsim import Edge, Graph, Node, SensorKind, create_grid
from graphsim.errors import (
    DuplicateSensorNameError,
    KindMismatchError,
    UnknownNodeError,
    UnknownSensorError,
)
from graphsim.sensors import ArcView

from conftest import ctx_from_graph, make_random_graph


def star_graph() -> Graph:
    """Origin node 0 plus nodes at controlled distances/angles."""
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    g.add_node(Node(1, 30.0, 0.0))
    g.add_node(Node(2, 49.9, 0.0))
    g.add_node(Node(3, 50.1, 0.0))
    g.add_node(Node(4, 50.0, 0.0))  # exactly on the range boundary
    g.add_edge(Edge(0, 0, 1, 30.0))
    g.add_edge(Edge(1, 1, 2, 19.9))
    g.add_edge(Edge(2, 2, 3, 0.2))
    return g


def test_create_sensor_and_duplicate():
    ctx = ctx_from_graph(star_graph())
    ctx.sensors.create_sensor("nbr", SensorKind.NEIGHBOR)
    assert ctx.sensors.get("nbr").kind is SensorKind.NEIGHBOR
    with pytest.raises(DuplicateSensorNameError):
        ctx.sensors.create_sensor("nbr", SensorKind.MAP)


def test_create_arc_sensor_with_paper_params():
    ctx = ctx_from_graph(star_graph())
    camera = ctx.sensors.create_sensor("camera", SensorKind.ARC, sensor_range=50, fov=2.5)
    assert camera.sensor_range == 50
    assert camera.fov == 2.5


def test_arc_sensor_rejects_bad_params():
    ctx = ctx_from_graph(star_graph())
    with pytest.raises(ValueError):
        ctx.sensors.create_sensor("bad", SensorKind.ARC, sensor_range=0, fov=1.0)
    with pytest.raises(ValueError):
        ctx.sensors.create_sensor("bad2", SensorKind.ARC, sensor_range=10, fov=7.0)


def test_neighbor_isolated_node():
    g = Graph()
    g.add_node(Node(5, 0.0, 0.0))
    ctx = ctx_from_graph(g)
    nbr = ctx.sensors.create_sensor("nbr", SensorKind.NEIGHBOR)
    assert nbr.sense(ctx, 5).payload == [5]


def test_neighbor_matches_adjacency_oracle():
    rng = random.Random(21)
    for _ in range(25):
        g = make_random_graph(rng, rng.randrange(5, 40))
        ctx = ctx_from_graph(g)
        nbr = ctx.sensors.create_sensor("nbr", SensorKind.NEIGHBOR)
        for node_id in g.nodes:
            reading = nbr.sense(ctx, node_id).payload
            expected = {node_id} | {t for _, t in g.neighbors(node_id)}
            assert set(reading) == expected
            assert reading[0] == node_id
            assert len(reading) == len(set(reading))


def test_neighbor_unknown_position():
    ctx = ctx_from_graph(star_graph())
    nbr = ctx.sensors.create_sensor("nbr", SensorKind.NEIGHBOR)
    with pytest.raises(UnknownNodeError):
        nbr.sense(ctx, 999)


def test_arc_distance_thresholds():
    ctx = ctx_from_graph(star_graph())
    arc = ctx.sensors.create_sensor("arc", SensorKind.ARC, sensor_range=50.0, fov=2 * math.pi)
    view = arc.sense(ctx, 0, heading=0.0).payload
    assert {0, 1, 2, 4} <= view.nodes  # 30, 49.9 and the exact 50.0 boundary
    assert 3 not in view.nodes  # 50.1 is out


def test_arc_angular_window():
    g = Graph()
    g.add_node(Node(0, 0.0, 0.0))
    g.add_node(Node(1, 10 * math.cos(math.radians(44)), 10 * math.sin(math.radians(44))))
    g.add_node(Node(2, 10 * math.cos(math.radians(46)), 10 * math.sin(math.radians(46))))
    ctx = ctx_from_graph(g)
    arc = ctx.sensors.create_sensor("arc", SensorKind.ARC, sensor_range=50.0, fov=math.pi / 2)
    view = arc.sense(ctx, 0, heading=0.0).payload
    assert 1 in view.nodes  # 44 degrees is inside the +/- 45 degree window
    assert 2 not in view.nodes  # 46 degrees is outside


def test_arc_full_circle_matches_brute_force():
    rng = random.Random(4242)
    for _ in range(30):
        g = make_random_graph(rng, rng.randrange(10, 80))
        ctx = ctx_from_graph(g)
        sensor_range = rng.uniform(20.0, 250.0)
        arc = ctx.sensors.create_sensor(
            "arc", SensorKind.ARC, sensor_range=sensor_range, fov=2 * math.pi
        )
        position = rng.choice(list(g.nodes))
        heading = rng.uniform(-math.pi, math.pi)
        view = arc.sense(ctx, position, heading).payload
        origin = g.nodes[position]
        expected = {
            n.id
            for n in g.nodes.values()
            if math.dist((n.x, n.y), (origin.x, origin.y)) <= sensor_range
        }
        assert view.nodes == expected


def test_arc_edges_are_exactly_pairs_of_visible_endpoints():
    rng = random.Random(77)
    g = make_random_graph(rng, 40)
    ctx = ctx_from_graph(g)
    arc = ctx.sensors.create_sensor("arc", SensorKind.ARC, sensor_range=120.0, fov=2.0)
    view = arc.sense(ctx, 0, heading=0.3).payload
    expected = {
        e.id for e in g.edges.values() if e.source in view.nodes and e.target in view.nodes
    }
    assert view.edges == expected


def test_arc_range_monotonicity():
    rng = random.Random(3333)
    for _ in range(10):
        g = make_random_graph(rng, rng.randrange(10, 50))
        ctx = ctx_from_graph(g)
        fov = rng.uniform(0.5, 2 * math.pi)
        heading = rng.uniform(-math.pi, math.pi)
        position = rng.choice(list(g.nodes))
        previous: frozenset[int] = frozenset()
        for i, sensor_range in enumerate(sorted(rng.uniform(5, 300) for _ in range(5))):
            arc = ctx.sensors.create_sensor(
                f"arc{i}", SensorKind.ARC, sensor_range=sensor_range, fov=fov
            )
            nodes = arc.sense(ctx, position, heading).payload.nodes
            assert previous <= nodes
            previous = nodes


def test_map_sensor_returns_snapshot_copy():
    g = star_graph()
    ctx = ctx_from_graph(g)
    m = ctx.sensors.create_sensor("m", SensorKind.MAP)
    snapshot = m.sense(ctx, 0).payload
    assert snapshot == ctx.graph
    snapshot.remove_node(0)  # mutating the reading must not touch the world
    assert 0 in ctx.graph.nodes


def test_agent_sensor_reports_positions():
    g = star_graph()
    ctx = ctx_from_graph(
        g,
        agents=[
            {"name": "a", "start_node": 0},
            {"name": "b", "start_node": 2},
        ],
    )
    s = ctx.sensors.create_sensor("who", SensorKind.AGENT)
    assert s.sense(ctx, 0).payload == {"a": 0, "b": 2}


def test_custom_inject_round_trip():
    ctx = ctx_from_graph(star_graph())
    ctx.sensors.create_sensor("ext", SensorKind.CUSTOM, key="ext")
    sensor = ctx.sensors.get("ext")
    assert sensor.sense(ctx, 0).payload is None  # nothing injected yet
    ctx.sensors.inject("ext", {"wind": 3.5})
    assert sensor.sense(ctx, 0).payload == {"wind": 3.5}


def test_inject_errors():
    ctx = ctx_from_graph(star_graph())
    ctx.sensors.create_sensor("arc", SensorKind.ARC, sensor_range=50, fov=2.5)
    with pytest.raises(UnknownSensorError):
        ctx.sensors.inject("ghost", 1)
    with pytest.raises(KindMismatchError):
        ctx.sensors.inject("arc", 1)


def test_sensing_never_mutates_state():
    g = Graph()
    create_grid(g, 4)
    ctx = ctx_from_graph(
        g,
        agents=[{"name": "a", "start_node": 5}],
    )
    for kind, kw in [
        (SensorKind.NEIGHBOR, {}),
        (SensorKind.MAP, {}),
        (SensorKind.AGENT, {}),
        (SensorKind.ARC, {"sensor_range": 45.0, "fov": 2 * math.pi}),
    ]:
        sensor = ctx.sensors.create_sensor(f"s_{kind.value}", kind, **kw)
        before = (ctx.state_digest(), ctx.graph.export_document())
        sensor.sense(ctx, 5, heading=0.25)
        after = (ctx.state_digest(), ctx.graph.export_document())
        assert before == after


def test_arc_reading_is_hashable_view():
    view = ArcView(frozenset({1, 2}), frozenset({7}))
    assert 1 in view.nodes and 7 in view.edges
    assert hash(view) == hash(ArcView(frozenset({1, 2}), frozenset({7})))
