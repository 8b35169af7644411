"""Exception types shared across the simulator.

All model-level failures derive from :class:`SimulationError` so callers can
distinguish them from configuration problems (:class:`ConfigError`) and plain
I/O failures when mapping to process exit codes.
"""


class SimulationError(Exception):
    """Base class for runtime model errors."""


class InvalidBitLength(SimulationError):
    """Bit stream length is not a multiple of bits-per-symbol."""


class EmptyInput(SimulationError):
    """An operation that needs samples received none."""


class DegenerateGeometry(SimulationError):
    """A transmitter coincides with a receiver (zero propagation distance)."""


class LengthMismatch(SimulationError):
    """Two sequences that must be equally long are not."""


class DegenerateFsoGain(SimulationError):
    """FSO override requested but the reference-path gain a22 is zero."""


class SingularMatrixError(SimulationError):
    """2x2 matrix is numerically singular (relative determinant test)."""


class DegenerateRow(SimulationError):
    """Row normalization impossible: a row has no positive entry."""


class InsufficientSamples(SimulationError):
    """Too few samples for a meaningful statistical estimate."""


class DegenerateInput(SimulationError):
    """Observation is rank-deficient or has a zero-power channel."""


class DegenerateReference(SimulationError):
    """Reference sequence has zero power."""


class AmbiguityUnresolved(SimulationError):
    """Neither separated output correlates with the pilot above threshold."""


class InvalidPilot(SimulationError):
    """Pilot sequence is empty or shorter than the minimum window."""


class InvalidPower(SimulationError):
    """A power argument that must be positive is not."""


class ConfigError(Exception):
    """Configuration is invalid; message names the offending field path."""
