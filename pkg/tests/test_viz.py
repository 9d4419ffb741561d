from __future__ import annotations

import pytest

from graphsim import Circle, Line, Rectangle, Text, Viewport, VisMode, create_context
from graphsim.errors import (
    DuplicateArtistError,
    PrimitiveOutsideFrameError,
    UnknownAgentError,
    UnknownSensorError,
)
from graphsim.viz import Artist, cull


def stream_ctx(**overrides):
    cfg = {
        "seed": 3,
        "graph": {"source": "grid", "params": {"n": 3, "spacing": 10.0}},
        "sensors": [{"name": "nbr", "kind": "neighbor"}],
        "agents": [{"name": "a", "start_node": 4, "sensors": ["nbr"],
                    "strategy": "random_neighbor"}],
        "vis": {"mode": "stream", "width": 400, "height": 400},
    }
    cfg.update(overrides)
    return create_context(cfg)


# --- commands and culling -------------------------------------------------------

def test_command_bboxes():
    assert Circle(0, 0, 5, (255, 0, 0)).bbox() == (-5, -5, 5, 5)
    assert Rectangle(10, 10, 4, 2, (0, 0, 0)).bbox() == (8, 9, 12, 11)
    assert Line(0, 0, 10, 10, 2, (0, 0, 0)).bbox() == (-1, -1, 11, 11)
    minx, miny, maxx, maxy = Text(1, 2, "hi", 10, (0, 0, 0)).bbox()
    assert (minx, miny) == (1, 2) and maxx > 1 and maxy == 12


def test_cull_drops_far_commands():
    viewport = Viewport(0, 0, 50, 50)
    inside = Circle(0, 0, 5, (1, 2, 3))
    outside = Circle(500, 500, 5, (1, 2, 3))
    straddling = Rectangle(50, 0, 20, 20, (1, 2, 3))  # overlaps the right edge
    kept = cull([inside, outside, straddling], viewport)
    assert kept == [inside, straddling]


def test_cull_without_viewport_keeps_everything():
    commands = [Circle(i * 1000, 0, 1, (0, 0, 0)) for i in range(5)]
    assert cull(commands, None) == commands


def test_cull_whole_world_viewport_equals_unculled():
    ctx = stream_ctx()
    ctx.visual.set_graph_visual()
    ctx.visual.set_agent_visual("a", (255, 0, 0), 10)
    unculled = ctx.visual.build_frame(ctx).commands
    ctx.visual.viewport = Viewport(10, 10, 1e6, 1e6)
    culled = ctx.visual.build_frame(ctx).commands
    assert culled == unculled


def test_wire_format_field_names():
    wire = Circle(1.0, 2.0, 3.0, (9, 8, 7)).to_wire()
    assert wire == {"kind": "circle", "x": 1.0, "y": 2.0, "radius": 3.0, "color": [9, 8, 7]}
    wire = Rectangle(1, 2, 3, 4, (0, 0, 0)).to_wire()
    assert wire["kind"] == "rectangle" and wire["width"] == 3 and wire["height"] == 4


def test_color_validation():
    ctx = stream_ctx()
    with pytest.raises(UnknownAgentError):
        ctx.visual.set_agent_visual("ghost", (255, 0, 0), 5)
    with pytest.raises(ValueError):
        ctx.visual.set_agent_visual("a", (300, 0, 0), 5)


# --- artists ----------------------------------------------------------------------

def test_layer_ordering_and_insertion_stability():
    ctx = stream_ctx()
    order: list[str] = []

    def drawer(tag):
        def run(c, data):
            order.append(tag)
            c.visual.render_circle(0, 0, 1, (1, 1, 1))
        return run

    ctx.visual.add_artist("late_low", Artist(drawer("low_a"), layer=5))
    ctx.visual.add_artist("user", Artist(drawer("high"), layer=35))
    ctx.visual.add_artist("second_low", Artist(drawer("low_b"), layer=5))
    ctx.visual.build_frame(ctx)
    assert order == ["low_a", "low_b", "high"]


def test_duplicate_artist_rejected():
    ctx = stream_ctx()
    ctx.visual.add_artist("x", Artist(lambda c, d: None, layer=1))
    with pytest.raises(DuplicateArtistError):
        ctx.visual.add_artist("x", Artist(lambda c, d: None, layer=2))


def test_primitives_outside_drawer_rejected():
    ctx = stream_ctx()
    with pytest.raises(PrimitiveOutsideFrameError):
        ctx.visual.render_circle(0, 0, 1, (0, 0, 0))


def test_flag_style_artist_draws_above_agents():
    ctx = stream_ctx()
    ctx.visual.set_agent_visual("a", (255, 0, 0), 10)

    def draw_flags(c, data):
        node = c.graph.get_node(data["red_id"])
        c.visual.render_rectangle(node.x, node.y, 10, 10, (255, 0, 0))
        node = c.graph.get_node(data["blue_id"])
        c.visual.render_rectangle(node.x, node.y, 10, 10, (0, 255, 0))

    ctx.visual.add_artist("flags", Artist(draw_flags, layer=35,
                                          data={"red_id": 0, "blue_id": 8}))
    frame = ctx.visual.build_frame(ctx)
    kinds = [type(c).__name__ for c in frame.commands]
    assert kinds.index("Rectangle") > kinds.index("Circle")
    assert kinds.count("Rectangle") == 2


def test_builtin_graph_artist_emits_edges_and_nodes():
    ctx = stream_ctx()
    ctx.visual.set_graph_visual(400, 400)
    frame = ctx.visual.build_frame(ctx)
    lines = [c for c in frame.commands if isinstance(c, Line)]
    circles = [c for c in frame.commands if isinstance(c, Circle)]
    assert len(lines) == len(ctx.graph.edges)
    assert len(circles) == len(ctx.graph.nodes)


def test_sensor_visual_highlights_latest_reading():
    ctx = stream_ctx()
    ctx.visual.set_sensor_visual("nbr", (0, 255, 0), (0, 255, 0))
    ctx.step()  # populates last_state
    frame = ctx.visual.last_frame
    greens = [c for c in frame.commands if isinstance(c, Circle) and c.color == (0, 255, 0)]
    assert len(greens) == 5  # interior node: self + 4 neighbors
    with pytest.raises(UnknownSensorError):
        ctx.visual.set_sensor_visual("ghost", (0, 255, 0), (0, 255, 0))


# --- modes ----------------------------------------------------------------------------

def test_no_vis_runs_no_drawers():
    ctx = stream_ctx(vis={"mode": "none"})
    ctx.visual.set_graph_visual()
    ctx.visual.set_agent_visual("a", (255, 0, 0), 10)
    for _ in range(1000):
        ctx.step()
    assert ctx.turn == 1000  # the loop completes
    assert ctx.visual.drawer_calls == 0
    assert ctx.visual.frames_built == 0
    assert ctx.visual.mode is VisMode.NO_VIS


def test_stream_mode_builds_frames_each_step():
    ctx = stream_ctx()
    ctx.visual.set_graph_visual()
    for _ in range(3):
        ctx.step()
    assert ctx.visual.frames_built == 3
    assert ctx.visual.last_frame.turn == 3
