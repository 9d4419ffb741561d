"""OSM XML to simulation graph: parse, project, consolidate, resample, emit.

The pipeline turns raw road data into a graph with near-uniform node
spacing: project to planar meters (local equirectangular around the data
centroid), merge near-coincident intersections (single linkage), then
subdivide every straight segment so no edge exceeds the target resolution.
Everything is pure and sequential so identical input bytes plus config
always produce a byte-identical GraphDocument.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional

from .errors import EmptyNetworkError, MalformedXmlError, MissingCoordinateError

EARTH_RADIUS_M = 6_371_000.0


@dataclass
class Way:
    id: int
    refs: list[int]
    highway: str
    oneway: bool = False


@dataclass
class RawRoadNetwork:
    """Parsed OSM data: geographic points (lat, lon degrees) plus ways."""

    points: dict[int, tuple[float, float]] = field(default_factory=dict)
    ways: list[Way] = field(default_factory=list)


@dataclass
class PlanarNetwork:
    """Road network projected to planar meters."""

    points: dict[int, tuple[float, float]] = field(default_factory=dict)
    ways: list[Way] = field(default_factory=list)


@dataclass
class IngestConfig:
    resolution: float
    consolidation_tolerance: Optional[float] = None  # None -> resolution / 2
    allowed_highway_classes: Optional[frozenset[str]] = None  # None -> any
    respect_oneway: bool = True

    def __post_init__(self) -> None:
        if not (self.resolution > 0):
            raise ValueError("resolution must be positive")
        if self.consolidation_tolerance is not None and self.consolidation_tolerance < 0:
            raise ValueError("consolidation tolerance must be >= 0")

    @property
    def tolerance(self) -> float:
        if self.consolidation_tolerance is None:
            return self.resolution / 2
        return self.consolidation_tolerance


_ONEWAY_FORWARD = {"yes", "true", "1"}


def parse_osm_xml(
    data: bytes | str,
    allowed_highway_classes: Optional[Iterable[str]] = None,
) -> RawRoadNetwork:
    """Extract points and highway ways from OSM XML.

    Ways without a highway tag are dropped; with an allow-list, only the
    listed highway classes are kept. A way referencing an undeclared node
    raises MissingCoordinateError.
    """
    allowed = frozenset(allowed_highway_classes) if allowed_highway_classes else None
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else 0
        raise MalformedXmlError(line, str(exc)) from exc

    network = RawRoadNetwork()
    for elem in root:
        if elem.tag == "node":
            node_id = int(elem.attrib["id"])
            lat_s, lon_s = elem.attrib.get("lat"), elem.attrib.get("lon")
            if lat_s is None or lon_s is None:
                raise MissingCoordinateError(node_id)
            lat, lon = float(lat_s), float(lon_s)
            if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
                raise ValueError(f"node {node_id}: lat/lon out of range")
            network.points[node_id] = (lat, lon)
        elif elem.tag == "way":
            way_id = int(elem.attrib["id"])
            refs: list[int] = []
            highway: Optional[str] = None
            oneway_value = ""
            for child in elem:
                if child.tag == "nd":
                    refs.append(int(child.attrib["ref"]))
                elif child.tag == "tag":
                    key = child.attrib.get("k")
                    if key == "highway":
                        highway = child.attrib.get("v", "")
                    elif key == "oneway":
                        oneway_value = child.attrib.get("v", "")
            if highway is None:
                continue
            if allowed is not None and highway not in allowed:
                continue
            if len(refs) < 2:
                continue
            for ref in refs:
                if ref not in network.points:
                    raise MissingCoordinateError(ref)
            if oneway_value == "-1":
                refs = list(reversed(refs))
                oneway = True
            else:
                oneway = oneway_value in _ONEWAY_FORWARD
            network.ways.append(Way(way_id, refs, highway, oneway))
    return network


def project(
    lat: float, lon: float, origin_lat: float, origin_lon: float
) -> tuple[float, float]:
    """Local equirectangular projection to meters around an origin."""
    x = EARTH_RADIUS_M * math.radians(lon - origin_lon) * math.cos(math.radians(origin_lat))
    y = EARTH_RADIUS_M * math.radians(lat - origin_lat)
    return x, y


def project_network(network: RawRoadNetwork) -> PlanarNetwork:
    """Project all points with the origin at the centroid of the data."""
    if not network.points:
        return PlanarNetwork({}, [replace(w, refs=list(w.refs)) for w in network.ways])
    ids = sorted(network.points)
    origin_lat = sum(network.points[i][0] for i in ids) / len(ids)
    origin_lon = sum(network.points[i][1] for i in ids) / len(ids)
    points = {
        i: project(network.points[i][0], network.points[i][1], origin_lat, origin_lon)
        for i in ids
    }
    return PlanarNetwork(points, [replace(w, refs=list(w.refs)) for w in network.ways])


class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {i: i for i in items}

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # lower id wins so cluster representatives are deterministic
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _cluster_points(
    points: dict[int, tuple[float, float]], tolerance: float, frozen: frozenset[int]
) -> dict[int, int]:
    """Single-linkage clusters under Euclidean distance <= tolerance.

    Returns a point-id -> representative-id map (representative = min id of
    the cluster). Frozen points never merge with anything.
    """
    uf = _UnionFind(points)
    cell = max(tolerance, 1e-9)
    grid: dict[tuple[int, int], list[int]] = {}
    for pid in sorted(points):
        if pid in frozen:
            continue
        x, y = points[pid]
        key = (int(math.floor(x / cell)), int(math.floor(y / cell)))
        grid.setdefault(key, []).append(pid)
    tol_sq = tolerance * tolerance
    for (cx, cy), members in grid.items():
        neighborhood: list[int] = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neighborhood.extend(grid.get((cx + dx, cy + dy), ()))
        for pid in members:
            px, py = points[pid]
            for other in neighborhood:
                if other <= pid:
                    continue
                ox, oy = points[other]
                if (px - ox) ** 2 + (py - oy) ** 2 <= tol_sq:
                    uf.union(pid, other)
    return {pid: uf.find(pid) for pid in points}


def consolidate_intersections(
    network: PlanarNetwork,
    tolerance: float,
    exclude: Optional[Iterable[int]] = None,
) -> PlanarNetwork:
    """Merge clusters of near-coincident intersection nodes.

    Each cluster collapses to a single node at the cluster centroid (keeping
    the minimum member id). Way segments that become self-loops disappear,
    and duplicate segments between the same two nodes collapse to one.
    Points listed in `exclude` (e.g. nodes inserted by resampling) are never
    merged.
    """
    frozen = frozenset(exclude) if exclude is not None else frozenset()
    rep = _cluster_points(network.points, tolerance, frozen)

    clusters: dict[int, list[int]] = {}
    for pid in sorted(network.points):
        clusters.setdefault(rep[pid], []).append(pid)

    points: dict[int, tuple[float, float]] = {}
    for rep_id, members in clusters.items():
        xs = [network.points[m][0] for m in members]
        ys = [network.points[m][1] for m in members]
        points[rep_id] = (sum(xs) / len(xs), sum(ys) / len(ys))

    ways: list[Way] = []
    seen_segments: set[tuple[int, int]] = set()
    for way in network.ways:
        refs = [rep[r] for r in way.refs]
        collapsed: list[int] = []
        for r in refs:
            if not collapsed or collapsed[-1] != r:
                collapsed.append(r)
        # split the way wherever a duplicate segment is dropped
        run: list[int] = []
        for i in range(len(collapsed) - 1):
            seg = (collapsed[i], collapsed[i + 1])
            if seg in seen_segments:
                if len(run) >= 2:
                    ways.append(Way(way.id, run, way.highway, way.oneway))
                run = []
                continue
            seen_segments.add(seg)
            if not run:
                run = [seg[0]]
            run.append(seg[1])
        if len(run) >= 2:
            ways.append(Way(way.id, run, way.highway, way.oneway))
    return PlanarNetwork(points, ways)


def resample_edges(network: PlanarNetwork, resolution: float) -> PlanarNetwork:
    """Subdivide every straight way segment into equal parts <= resolution.

    A segment of length L splits into k = ceil(L / resolution) pieces,
    inserting k - 1 evenly spaced points. Inserted point ids are sequential
    from max(existing id) + 1, in way order, so output is deterministic.
    """
    if not (resolution > 0):
        raise ValueError("resolution must be positive")
    points = dict(network.points)
    next_id = max(points) + 1 if points else 0
    ways: list[Way] = []
    for way in network.ways:
        refs: list[int] = [way.refs[0]]
        for i in range(len(way.refs) - 1):
            a, b = way.refs[i], way.refs[i + 1]
            ax, ay = points[a]
            bx, by = points[b]
            length = math.dist((ax, ay), (bx, by))
            # tiny slack so fp noise on exact multiples never adds a split
            k = max(1, math.ceil(length / resolution - 1e-12))
            for j in range(1, k):
                t = j / k
                points[next_id] = (ax + (bx - ax) * t, ay + (by - ay) * t)
                refs.append(next_id)
                next_id += 1
            refs.append(b)
        ways.append(Way(way.id, refs, way.highway, way.oneway))
    return PlanarNetwork(points, ways)


def build_graph(network: RawRoadNetwork, config: IngestConfig) -> dict[str, Any]:
    """Full pipeline: project, consolidate, resample, emit a GraphDocument.

    Every way segment yields one directed edge plus the reverse edge unless
    the way is oneway and the config respects it. Duplicate directed edges
    between the same nodes collapse to the shorter one.
    """
    if not network.ways:
        raise EmptyNetworkError("no ways to build a graph from")
    planar = project_network(network)
    planar = consolidate_intersections(planar, config.tolerance)
    if not planar.ways:
        raise EmptyNetworkError("consolidation left no usable ways")
    planar = resample_edges(planar, config.resolution)

    best: dict[tuple[int, int], float] = {}
    order: list[tuple[int, int]] = []
    for way in planar.ways:
        for i in range(len(way.refs) - 1):
            a, b = way.refs[i], way.refs[i + 1]
            length = math.dist(planar.points[a], planar.points[b])
            pairs = [(a, b)] if (config.respect_oneway and way.oneway) else [(a, b), (b, a)]
            for pair in pairs:
                if pair not in best:
                    best[pair] = length
                    order.append(pair)
                elif length < best[pair]:
                    best[pair] = length

    used: list[int] = sorted({n for pair in order for n in pair})
    nodes = [
        {"id": nid, "x": planar.points[nid][0], "y": planar.points[nid][1]}
        for nid in used
    ]
    edges = []
    for eid, (src, dst) in enumerate(order):
        sx, sy = planar.points[src]
        tx, ty = planar.points[dst]
        edges.append(
            {
                "id": eid,
                "source": src,
                "target": dst,
                "length": best[(src, dst)],
                "linestring": [[sx, sy], [tx, ty]],
            }
        )
    return {"nodes": nodes, "edges": edges}
