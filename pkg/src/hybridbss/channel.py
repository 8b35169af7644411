"""2x2 mixing channel: geometry-derived gains, conditioning, FSO override.

The channel is magnitude-only: gains are real and nonnegative, derived from
transmitter-receiver distances by an inverse-distance amplitude law with a
1 cm reference distance. Conditioning uses the induced 1-norm (maximum
absolute column sum); the separability index row-normalizes the matrix
first, which models per-receiver automatic gain control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateFsoGain,
    DegenerateGeometry,
    DegenerateRow,
    LengthMismatch,
    SingularMatrixError,
)
from .signals import add_awgn

REFERENCE_DISTANCE_CM = 1.0
SINGULARITY_RTOL = 1e-12


class ChannelMode(Enum):
    MIMO = "MIMO"
    FSO = "FSO"


@dataclass(frozen=True)
class Geometry:
    """Antenna positions in cm: two transmitters, two receivers."""

    tx_soi: tuple[float, float]
    tx_int: tuple[float, float]
    rx1: tuple[float, float]
    rx2: tuple[float, float]


def default_geometry() -> Geometry:
    """Receivers 2 cm apart; SOI 111 cm and interferer 60 cm from their midpoint."""
    return Geometry(
        tx_soi=(0.0, 111.0),
        tx_int=(36.0, 48.0),
        rx1=(-1.0, 0.0),
        rx2=(1.0, 0.0),
    )


@dataclass(frozen=True)
class MixingMatrix:
    """Row i = receiver i; column 1 = SOI path, column 2 = interference path."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        entries = (self.a11, self.a12, self.a21, self.a22)
        if not all(math.isfinite(a) and a >= 0.0 for a in entries):
            raise ValueError("gains must be finite and nonnegative")
        if not any(a > 0.0 for a in entries):
            raise ValueError("at least one gain must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])


@dataclass(frozen=True)
class Observation:
    """The two received streams; x2 doubles as the FSO reference in FSO mode."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        if len(self.x1) != len(self.x2):
            raise LengthMismatch(
                f"observation channels differ in length: {len(self.x1)} vs {len(self.x2)}"
            )

    def __len__(self) -> int:
        return len(self.x1)

    def stack(self) -> np.ndarray:
        return np.vstack([self.x1, self.x2])


def _dist(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def mixing_from_geometry(geom: Geometry) -> MixingMatrix:
    """Inverse-distance amplitude gains a_ij = d0 / dist(tx_j, rx_i)."""
    gains = {}
    for i, rx in ((1, geom.rx1), (2, geom.rx2)):
        for j, tx in ((1, geom.tx_soi), (2, geom.tx_int)):
            d = _dist(tx, rx)
            if d <= 0.0:
                raise DegenerateGeometry(f"tx{j} coincides with rx{i}")
            gains[(i, j)] = REFERENCE_DISTANCE_CM / d
    return MixingMatrix(gains[(1, 1)], gains[(1, 2)], gains[(2, 1)], gains[(2, 2)])


def mix(
    a: MixingMatrix,
    s_soi: np.ndarray,
    s_int: np.ndarray,
    snr_db: float = math.inf,
    seed: int = 0,
) -> Observation:
    """Linear 2x2 mixing plus independent per-receiver AWGN.

    Noise is scaled to each receiver's own mixed-signal power; receiver 2
    draws from seed+1 so the two noise streams are independent.
    """
    s_soi = np.asarray(s_soi, dtype=np.complex128)
    s_int = np.asarray(s_int, dtype=np.complex128)
    if len(s_soi) != len(s_int):
        raise LengthMismatch(
            f"source lengths differ: {len(s_soi)} vs {len(s_int)}"
        )
    x1 = a.a11 * s_soi + a.a12 * s_int
    x2 = a.a21 * s_soi + a.a22 * s_int
    if not (math.isinf(snr_db) and snr_db > 0):
        x1 = add_awgn(x1, snr_db, seed)
        x2 = add_awgn(x2, snr_db, seed + 1)
    return Observation(x1, x2)


def apply_fso_override(a: MixingMatrix) -> MixingMatrix:
    """Replace receiver 2 by the optical reference link: a21 becomes exactly 0."""
    if a.a22 <= 0.0:
        raise DegenerateFsoGain("a22 must be positive to carry the FSO reference")
    return MixingMatrix(a.a11, a.a12, 0.0, a.a22)


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, MixingMatrix):
        return a.as_array()
    m = np.asarray(a, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


def matrix_one_norm(a) -> float:
    """Induced 1-norm: maximum absolute column sum."""
    m = _as_matrix(a)
    return float(np.max(np.sum(np.abs(m), axis=0)))


def invert_2x2(a) -> np.ndarray:
    """Adjugate inverse; raises when |det| <= rtol * ||A||_1^2."""
    m = _as_matrix(a)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) <= SINGULARITY_RTOL * matrix_one_norm(m) ** 2:
        raise SingularMatrixError(f"matrix is numerically singular (det={det:g})")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def condition_number(a) -> float:
    """1-norm condition number; math.inf for singular matrices."""
    m = _as_matrix(a)
    try:
        inv = invert_2x2(m)
    except SingularMatrixError:
        return math.inf
    return matrix_one_norm(m) * matrix_one_norm(inv)


def separability_index(a) -> float:
    """Condition number after scaling each row so its largest entry is 1.

    Row normalization is the mathematical image of per-receiver AGC: it
    removes the overall gain gap between the two receive paths so the
    index reflects only how parallel the rows are.
    """
    m = _as_matrix(a)
    row_max = np.max(np.abs(m), axis=1)
    if np.any(row_max <= 0.0):
        raise DegenerateRow("each row needs a positive maximum for AGC scaling")
    return condition_number(m / row_max[:, None])
