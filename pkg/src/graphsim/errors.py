"""Exception hierarchy shared by all simulator modules."""

from __future__ import annotations


class SimulatorError(Exception):
    """Base class for every error raised by graphsim."""


# --- graph ---------------------------------------------------------------

class GraphError(SimulatorError):
    pass


class DuplicateNodeError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class MissingEndpointError(GraphError):
    pass


class UnknownNodeError(GraphError):
    pass


class InconsistentDocumentError(GraphError):
    """Raised by bulk loads; carries the first offending edge id."""

    def __init__(self, edge_id: int, message: str):
        super().__init__(message)
        self.edge_id = edge_id


class NonEmptyGraphError(GraphError):
    """A generator that requires an empty graph was given a populated one."""


# --- osm ingestion -------------------------------------------------------

class IngestError(SimulatorError):
    pass


class MalformedXmlError(IngestError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingCoordinateError(IngestError):
    def __init__(self, node_id: int):
        super().__init__(f"way references node {node_id} with no coordinates")
        self.node_id = node_id


class EmptyNetworkError(IngestError):
    pass


# --- sensors / agents ----------------------------------------------------

class DuplicateSensorNameError(SimulatorError):
    pass


class UnknownSensorError(SimulatorError):
    pass


class KindMismatchError(SimulatorError):
    pass


class DuplicateAgentNameError(SimulatorError):
    pass


class UnknownAgentError(SimulatorError):
    pass


class MissingSensorError(SimulatorError):
    """A strategy required a sensor reading the agent does not have."""


# --- context -------------------------------------------------------------

class ConfigError(SimulatorError):
    """Invalid scenario configuration; carries the offending field path."""

    def __init__(self, field: str, message: str = ""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class TerminatedError(SimulatorError):
    """step() was called on a terminated context."""


# --- recorder ------------------------------------------------------------

class RecorderClosedError(SimulatorError):
    pass


class CorruptRecordingError(SimulatorError):
    pass


class ConfigMismatchError(SimulatorError):
    pass


class UnsupportedVersionError(SimulatorError):
    pass


# --- visualization / streaming -------------------------------------------

class DuplicateArtistError(SimulatorError):
    pass


class PrimitiveOutsideFrameError(SimulatorError):
    """A render primitive was called outside an artist drawer."""


class NoClientConnectedError(SimulatorError):
    pass


class HumanInputTimeoutError(SimulatorError):
    pass
