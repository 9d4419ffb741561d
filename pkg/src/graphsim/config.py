"""Scenario configuration: loading, preset expansion, validation, digest.

A scenario file (TOML primary, JSON accepted) describes seed, graph source,
sensors, agents, rules, conflict policy, visualization and recording. The
semantic digest covers only fields that influence simulation state — vis,
recording and log settings are excluded so headless and streaming runs of
the same scenario bind to the same recordings.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Union

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError

SENSOR_KINDS = {"neighbor", "map", "agent", "arc", "custom"}
AGENT_KINDS = {"ground", "aerial"}
RULE_NAMES = {"tag", "flag_capture", "max_turns"}
VIS_MODES = {"none", "stream"}

# fields covered by the semantic digest (the recording binds to these)
_SEMANTIC_FIELDS = ("seed", "graph", "sensors", "agents", "rules", "conflict_policy")


def load_config(path: Union[str, Path]) -> dict[str, Any]:
    """Read a TOML or JSON scenario file (by extension, TOML otherwise)."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(str(p), f"cannot read config: {exc}") from exc
    if p.suffix.lower() == ".json":
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(p), f"invalid JSON: {exc}") from exc
    try:
        return tomllib.loads(data.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(str(p), f"invalid TOML: {exc}") from exc


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _require(raw: dict, key: str, path: str) -> Any:
    if key not in raw:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return raw[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected integer, got {value!r}")
    return value


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected number, got {value!r}")
    return float(value)


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(path, f"expected string, got {value!r}")
    return value


def resolve_config(raw: dict[str, Any]) -> dict[str, Any]:
    """Expand presets, apply defaults, validate shape. Idempotent."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "expected a table/object")
    raw = copy.deepcopy(raw)
    preset_name = raw.pop("preset", None)
    if preset_name is not None:
        from .scenarios import PRESETS

        if preset_name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset_name!r}")
        raw = _deep_merge(copy.deepcopy(PRESETS[preset_name]), raw)

    known = {
        "seed",
        "graph",
        "sensors",
        "agents",
        "rules",
        "conflict_policy",
        "vis",
        "recording",
        "human_timeout",
        "log_level",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown config field")

    resolved: dict[str, Any] = {}
    resolved["seed"] = _as_int(raw.get("seed", 0), "seed")
    if not (0 <= resolved["seed"] < 2**64):
        raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
    resolved["graph"] = _resolve_graph(raw.get("graph", {"source": "empty"}))
    resolved["sensors"] = _resolve_sensors(raw.get("sensors", []))
    resolved["agents"] = _resolve_agents(raw.get("agents", []))
    resolved["rules"] = _resolve_rules(raw.get("rules", []))
    resolved["conflict_policy"] = _resolve_policy(raw.get("conflict_policy", "allow_all"))
    resolved["vis"] = _resolve_vis(raw.get("vis", {}))
    recording = raw.get("recording", {})
    if not isinstance(recording, dict):
        raise ConfigError("recording", "expected a table")
    rec_path = recording.get("path")
    if rec_path is not None:
        rec_path = _as_str(rec_path, "recording.path")
    resolved["recording"] = {"path": rec_path}
    timeout = raw.get("human_timeout")
    if timeout is not None:
        timeout = _as_number(timeout, "human_timeout")
        if timeout <= 0:
            raise ConfigError("human_timeout", "must be positive")
    resolved["human_timeout"] = timeout
    level = _as_str(raw.get("log_level", "warn"), "log_level")
    if level not in {"error", "warn", "info", "debug"}:
        raise ConfigError("log_level", f"unknown level {level!r}")
    resolved["log_level"] = level
    return resolved


def _resolve_graph(raw: Any) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError("graph", "expected a table")
    source = _as_str(raw.get("source", "empty"), "graph.source")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("graph.params", "expected a table")
    params = copy.deepcopy(params)
    if source == "empty":
        return {"source": "empty", "params": {}}
    if source == "grid":
        n = _as_int(_require(params, "n", "graph.params"), "graph.params.n")
        if n < 1:
            raise ConfigError("graph.params.n", "must be >= 1")
        spacing = _as_number(params.get("spacing", 20.0), "graph.params.spacing")
        if spacing <= 0:
            raise ConfigError("graph.params.spacing", "must be positive")
        return {"source": "grid", "params": {"n": n, "spacing": spacing}}
    if source == "document":
        if "document" in params:
            if not isinstance(params["document"], dict):
                raise ConfigError("graph.params.document", "expected a GraphDocument object")
            return {"source": "document", "params": {"document": params["document"]}}
        path = _as_str(_require(params, "path", "graph.params"), "graph.params.path")
        return {"source": "document", "params": {"path": path}}
    if source == "osm":
        path = _as_str(_require(params, "path", "graph.params"), "graph.params.path")
        resolution = _as_number(
            _require(params, "resolution", "graph.params"), "graph.params.resolution"
        )
        if resolution <= 0:
            raise ConfigError("graph.params.resolution", "must be positive")
        out: dict[str, Any] = {"path": path, "resolution": resolution}
        if params.get("consolidation_tolerance") is not None:
            tol = _as_number(
                params["consolidation_tolerance"], "graph.params.consolidation_tolerance"
            )
            if tol < 0:
                raise ConfigError("graph.params.consolidation_tolerance", "must be >= 0")
            out["consolidation_tolerance"] = tol
        if params.get("highway_classes") is not None:
            classes = params["highway_classes"]
            if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
                raise ConfigError("graph.params.highway_classes", "expected a list of strings")
            out["highway_classes"] = sorted(classes)
        out["respect_oneway"] = bool(params.get("respect_oneway", True))
        return {"source": "osm", "params": out}
    raise ConfigError("graph.source", f"unknown source {source!r}")


def _resolve_sensors(raw: Any) -> list[dict[str, Any]]:
    if not isinstance(raw, list):
        raise ConfigError("sensors", "expected a list")
    out = []
    seen = set()
    for i, entry in enumerate(raw):
        path = f"sensors[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a table")
        name = _as_str(_require(entry, "name", path), f"{path}.name")
        if name in seen:
            raise ConfigError(f"{path}.name", f"duplicate sensor name {name!r}")
        seen.add(name)
        kind = _as_str(_require(entry, "kind", path), f"{path}.kind")
        if kind not in SENSOR_KINDS:
            raise ConfigError(f"{path}.kind", f"unknown sensor kind {kind!r}")
        resolved: dict[str, Any] = {"name": name, "kind": kind}
        if kind == "arc":
            rng = _as_number(_require(entry, "sensor_range", path), f"{path}.sensor_range")
            fov = _as_number(_require(entry, "fov", path), f"{path}.fov")
            if rng <= 0:
                raise ConfigError(f"{path}.sensor_range", "must be positive")
            if not (0 < fov <= 6.283185307179587):
                raise ConfigError(f"{path}.fov", "must be in (0, 2*pi] radians")
            resolved["sensor_range"] = rng
            resolved["fov"] = fov
        elif kind == "custom":
            resolved["key"] = _as_str(entry.get("key", name), f"{path}.key")
        out.append(resolved)
    return out


def _resolve_agents(raw: Any) -> list[dict[str, Any]]:
    if not isinstance(raw, list):
        raise ConfigError("agents", "expected a list")
    out = []
    seen = set()
    for i, entry in enumerate(raw):
        path = f"agents[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a table")
        name = _as_str(_require(entry, "name", path), f"{path}.name")
        if name in seen:
            raise ConfigError(f"{path}.name", f"duplicate agent name {name!r}")
        seen.add(name)
        kind = _as_str(entry.get("kind", "ground"), f"{path}.kind")
        if kind not in AGENT_KINDS:
            raise ConfigError(f"{path}.kind", f"unknown agent kind {kind!r}")
        start = _as_int(_require(entry, "start_node", path), f"{path}.start_node")
        resolved: dict[str, Any] = {
            "name": name,
            "kind": kind,
            "start_node": start,
            "team": _as_str(entry.get("team", ""), f"{path}.team"),
            "sensors": entry.get("sensors", []),
            "strategy": entry.get("strategy") or "human",
        }
        if not isinstance(resolved["sensors"], list) or not all(
            isinstance(s, str) for s in resolved["sensors"]
        ):
            raise ConfigError(f"{path}.sensors", "expected a list of sensor names")
        if not isinstance(resolved["strategy"], str):
            raise ConfigError(f"{path}.strategy", "expected a strategy name or 'human'")
        if kind == "aerial":
            speed = _as_number(_require(entry, "speed", path), f"{path}.speed")
            if speed <= 0:
                raise ConfigError(f"{path}.speed", "must be positive")
            resolved["speed"] = speed
        out.append(resolved)
    return out


def _resolve_rules(raw: Any) -> list[dict[str, Any]]:
    if not isinstance(raw, list):
        raise ConfigError("rules", "expected a list")
    out = []
    for i, entry in enumerate(raw):
        path = f"rules[{i}]"
        if isinstance(entry, str):
            entry = {"name": entry, "params": {}}
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a rule name or table")
        name = _as_str(_require(entry, "name", path), f"{path}.name")
        if name not in RULE_NAMES:
            raise ConfigError(f"{path}.name", f"unknown rule {name!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{path}.params", "expected a table")
        if name == "max_turns":
            limit = _as_int(_require(params, "limit", f"{path}.params"), f"{path}.params.limit")
            if limit < 1:
                raise ConfigError(f"{path}.params.limit", "must be >= 1")
            params = {"limit": limit}
        out.append({"name": name, "params": copy.deepcopy(params)})
    return out


def _resolve_policy(raw: Any) -> Any:
    if isinstance(raw, str):
        if raw not in {"allow_all", "random"}:
            raise ConfigError("conflict_policy", f"unknown policy {raw!r}")
        return raw
    if isinstance(raw, dict) and set(raw) == {"priority"}:
        ranks = raw["priority"]
        if not isinstance(ranks, dict) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in ranks.values()
        ):
            raise ConfigError("conflict_policy.priority", "expected agent-name -> integer rank")
        return {"priority": dict(ranks)}
    raise ConfigError("conflict_policy", f"unknown policy {raw!r}")


def _resolve_vis(raw: Any) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError("vis", "expected a table")
    mode = _as_str(raw.get("mode", "none"), "vis.mode")
    if mode not in VIS_MODES:
        raise ConfigError("vis.mode", f"unknown mode {mode!r}")
    width = _as_int(raw.get("width", 800), "vis.width")
    height = _as_int(raw.get("height", 600), "vis.height")
    if width < 1 or height < 1:
        raise ConfigError("vis.width", "dimensions must be positive")
    listen = _as_str(raw.get("listen", "127.0.0.1:8750"), "vis.listen")
    return {"mode": mode, "width": width, "height": height, "listen": listen}


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def semantic_digest(resolved: dict[str, Any]) -> bytes:
    """32-byte digest of the state-relevant part of a resolved config."""
    core = {key: resolved[key] for key in _SEMANTIC_FIELDS}
    return hashlib.sha256(canonical_json(core).encode()).digest()
