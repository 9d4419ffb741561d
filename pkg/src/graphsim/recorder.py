"""Versioned binary recording of scenario runs, with replay and translation.

A recording is a compact delta stream: agent movements, resets, custom
payloads and turn markers — never full state snapshots. Layout:

    header:  magic "GMAR" | version u16 LE | seed u64 LE | config digest (32B)
    events:  1-byte tag followed by little-endian fixed-width fields
    trailer: sha256 of all preceding bytes (32B)

Event layouts (current version 2; version 1 used 32-bit node ids):

    1 TurnBegin    turn u64
    2 AgentMoved   agent u16, from u64, to u64
    3 AerialMoved  agent u16, x f64, y f64
    4 AgentReset   agent u16, to u64
    5 Custom       key_len u16, key utf-8, payload_len u32, payload
    6 Terminated   turn u64

Older recordings are translated forward through a chain of single-step
translators before replay. Re-recording while replaying a recording must
reproduce the exact same bytes (see self_check).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterator, Union

from .errors import (
    ConfigMismatchError,
    CorruptRecordingError,
    RecorderClosedError,
    UnsupportedVersionError,
)

if TYPE_CHECKING:
    from .context import Context

MAGIC = b"GMAR"
CURRENT_VERSION = 2
KNOWN_VERSIONS = (1, 2)
HEADER_SIZE = 4 + 2 + 8 + 32
TRAILER_SIZE = 32

TAG_TURN_BEGIN = 1
TAG_AGENT_MOVED = 2
TAG_AERIAL_MOVED = 3
TAG_AGENT_RESET = 4
TAG_CUSTOM = 5
TAG_TERMINATED = 6

# node-id field width per format version
_NODE_FMT = {1: "I", 2: "Q"}


@dataclass(frozen=True)
class TurnBegin:
    turn: int


@dataclass(frozen=True)
class AgentMoved:
    agent: int
    from_node: int
    to_node: int


@dataclass(frozen=True)
class AerialMoved:
    agent: int
    x: float
    y: float


@dataclass(frozen=True)
class AgentReset:
    agent: int
    to_node: int


@dataclass(frozen=True)
class Custom:
    key: str
    payload: bytes


@dataclass(frozen=True)
class Terminated:
    turn: int


RecordEvent = Union[TurnBegin, AgentMoved, AerialMoved, AgentReset, Custom, Terminated]


def encode_event(event: RecordEvent, version: int = CURRENT_VERSION) -> bytes:
    if version not in _NODE_FMT:
        raise UnsupportedVersionError(f"cannot encode version {version}")
    n = _NODE_FMT[version]
    if isinstance(event, TurnBegin):
        return struct.pack("<BQ", TAG_TURN_BEGIN, event.turn)
    if isinstance(event, AgentMoved):
        return struct.pack(
            f"<BH{n}{n}", TAG_AGENT_MOVED, event.agent, event.from_node, event.to_node
        )
    if isinstance(event, AerialMoved):
        return struct.pack("<BHdd", TAG_AERIAL_MOVED, event.agent, event.x, event.y)
    if isinstance(event, AgentReset):
        return struct.pack(f"<BH{n}", TAG_AGENT_RESET, event.agent, event.to_node)
    if isinstance(event, Custom):
        key = event.key.encode()
        return (
            struct.pack("<BH", TAG_CUSTOM, len(key))
            + key
            + struct.pack("<I", len(event.payload))
            + event.payload
        )
    if isinstance(event, Terminated):
        return struct.pack("<BQ", TAG_TERMINATED, event.turn)
    raise TypeError(f"not a record event: {event!r}")


def _decode_events(body: bytes, version: int) -> list[RecordEvent]:
    n = _NODE_FMT[version]
    moved = struct.Struct(f"<H{n}{n}")
    aerial = struct.Struct("<Hdd")
    reset = struct.Struct(f"<H{n}")
    turn = struct.Struct("<Q")
    events: list[RecordEvent] = []
    pos = 0
    end = len(body)
    try:
        while pos < end:
            tag = body[pos]
            pos += 1
            if tag == TAG_TURN_BEGIN:
                (value,) = turn.unpack_from(body, pos)
                pos += turn.size
                events.append(TurnBegin(value))
            elif tag == TAG_AGENT_MOVED:
                agent, src, dst = moved.unpack_from(body, pos)
                pos += moved.size
                events.append(AgentMoved(agent, src, dst))
            elif tag == TAG_AERIAL_MOVED:
                agent, x, y = aerial.unpack_from(body, pos)
                pos += aerial.size
                events.append(AerialMoved(agent, x, y))
            elif tag == TAG_AGENT_RESET:
                agent, dst = reset.unpack_from(body, pos)
                pos += reset.size
                events.append(AgentReset(agent, dst))
            elif tag == TAG_CUSTOM:
                (key_len,) = struct.unpack_from("<H", body, pos)
                pos += 2
                key = body[pos : pos + key_len].decode()
                pos += key_len
                (payload_len,) = struct.unpack_from("<I", body, pos)
                pos += 4
                if pos + payload_len > end:
                    raise CorruptRecordingError("custom payload overruns stream")
                payload = body[pos : pos + payload_len]
                pos += payload_len
                events.append(Custom(key, payload))
            elif tag == TAG_TERMINATED:
                (value,) = turn.unpack_from(body, pos)
                pos += turn.size
                events.append(Terminated(value))
            else:
                raise CorruptRecordingError(f"unknown event tag {tag} at offset {pos - 1}")
    except struct.error as exc:
        raise CorruptRecordingError(f"truncated event stream: {exc}") from exc
    return events


@dataclass(frozen=True)
class RecordHeader:
    version: int
    seed: int
    config_digest: bytes


def _pack_header(header: RecordHeader) -> bytes:
    return MAGIC + struct.pack("<HQ", header.version, header.seed) + header.config_digest


class Recorder:
    """Append-only event sink; finalize() seals the stream with a hash."""

    def __init__(self, seed: int, config_digest: bytes, version: int = CURRENT_VERSION):
        if version not in KNOWN_VERSIONS:
            raise UnsupportedVersionError(f"unknown recorder version {version}")
        if len(config_digest) != 32:
            raise ValueError("config digest must be 32 bytes")
        self.version = version
        self.seed = seed
        self.config_digest = config_digest
        self._buf = bytearray(_pack_header(RecordHeader(version, seed, config_digest)))
        self._closed = False
        self.event_count = 0

    @property
    def closed(self) -> bool:
        return self._closed

    def record(self, event: RecordEvent) -> None:
        if self._closed:
            raise RecorderClosedError("recorder is finalized")
        self._buf += encode_event(event, self.version)
        self.event_count += 1

    def finalize(self) -> bytes:
        if self._closed:
            raise RecorderClosedError("recorder is finalized")
        self._closed = True
        self._buf += hashlib.sha256(self._buf).digest()
        return bytes(self._buf)


def decode(data: bytes) -> tuple[RecordHeader, list[RecordEvent]]:
    """Parse and integrity-check a recording (no version translation)."""
    if len(data) < HEADER_SIZE + TRAILER_SIZE:
        raise CorruptRecordingError("recording shorter than header + trailer")
    if data[:4] != MAGIC:
        raise CorruptRecordingError("bad magic")
    expect = hashlib.sha256(data[:-TRAILER_SIZE]).digest()
    if data[-TRAILER_SIZE:] != expect:
        raise CorruptRecordingError("trailer hash mismatch")
    version, seed = struct.unpack_from("<HQ", data, 4)
    if version not in KNOWN_VERSIONS:
        raise UnsupportedVersionError(f"recording version {version} is not supported")
    digest = data[14:HEADER_SIZE]
    events = _decode_events(data[HEADER_SIZE:-TRAILER_SIZE], version)
    return RecordHeader(version, seed, digest), events


def translate(data: bytes, from_version: int, to_version: int) -> bytes:
    """Re-encode a recording along the chain of single-step translators."""
    header, _ = decode(data)
    if header.version != from_version:
        raise UnsupportedVersionError(
            f"recording is version {header.version}, not {from_version}"
        )
    if from_version == to_version:
        return data
    if not (from_version < to_version <= CURRENT_VERSION):
        raise UnsupportedVersionError(
            f"no translator chain from {from_version} to {to_version}"
        )
    out = data
    for step in range(from_version, to_version):
        out = _translate_step(out, step, step + 1)
    return out


def _translate_step(data: bytes, from_version: int, to_version: int) -> bytes:
    header, events = decode(data)
    rec = Recorder(header.seed, header.config_digest, version=to_version)
    for event in events:
        rec.record(event)
    return rec.finalize()


def replay(
    data: bytes, config: dict[str, Any], ctx: "Context | None" = None
) -> Iterator["Context"]:
    """Reconstruct per-turn state from a recording; yields after each turn.

    The recording is translated to the current version if older. The config
    must canonicalize to the digest stored in the header; strategies are
    never executed. Pass a prebuilt strategy-free context to drive replay
    rendering; otherwise one is created from the config.
    """
    from .config import resolve_config, semantic_digest
    from .context import create_context

    header, events = decode(data)
    if header.version < CURRENT_VERSION:
        header, events = decode(translate(data, header.version, CURRENT_VERSION))
    resolved = resolve_config(config)
    if semantic_digest(resolved) != header.config_digest:
        raise ConfigMismatchError("recording was produced under a different config")
    if ctx is None:
        ctx = create_context(resolved, for_replay=True)
    started = False
    for event in events:
        if isinstance(event, TurnBegin):
            if started:
                yield ctx
            started = True
        _apply_event(ctx, event)
    if started:
        yield ctx


def _apply_event(ctx: "Context", event: RecordEvent) -> None:
    agents = list(ctx.agents.create_iter())
    if isinstance(event, TurnBegin):
        ctx.turn = event.turn
    elif isinstance(event, AgentMoved):
        agents[event.agent].current_node = event.to_node
    elif isinstance(event, AerialMoved):
        agents[event.agent].position = (event.x, event.y)
    elif isinstance(event, AgentReset):
        agents[event.agent].reset_to(ctx.graph, event.to_node)
    elif isinstance(event, Custom):
        ctx.custom_events.append((ctx.turn, event.key, event.payload))
    elif isinstance(event, Terminated):
        ctx.terminated = True


def self_check(data: bytes, config: dict[str, Any]) -> bool:
    """Re-record while replaying; true iff the bytes come out identical."""
    from .config import resolve_config, semantic_digest
    from .context import create_context

    header, events = decode(data)
    resolved = resolve_config(config)
    if semantic_digest(resolved) != header.config_digest:
        raise ConfigMismatchError("recording was produced under a different config")
    ctx = create_context(resolved, for_replay=True)
    rec = Recorder(header.seed, header.config_digest, version=header.version)
    for event in events:
        _apply_event(ctx, event)
        rec.record(event)
    return rec.finalize() == data
