"""Source recovery: kurtosis-contrast ICA for MIMO mode, reference
cancellation for FSO mode, pilot-based ambiguity resolution.

For a real 2x2 mixing of uncorrelated unit-power sources, whitening reduces
the remaining unknown to a single Givens angle, so the blind search is a 1-D
maximization of the summed kurtosis magnitudes of the rotated pair. The
contrast is evaluated from precomputed fourth-order moments of the whitened
pair, which makes the value at any angle an O(1) algebraic expression that
is identical (up to roundoff) to computing the sample kurtosis of the
explicitly rotated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Observation, MixingMatrix
from .errors import (
    AmbiguityUnresolved,
    DegenerateInput,
    DegenerateReference,
    InsufficientSamples,
    InvalidPilot,
    LengthMismatch,
)

MIN_SAMPLES = 100
MIN_PILOT_LEN = 16
GRID_POINTS = 1024
ANGLE_TOL = 1e-6
LOW_CONFIDENCE_SPAN = 0.01
CORRELATION_THRESHOLD = 0.5
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WhiteningTransform:
    """Real 2x2 transform mapping the observation to unit sample covariance."""

    matrix: np.ndarray


@dataclass(frozen=True)
class RotationSearch:
    theta: float
    contrast: float
    low_confidence: bool
    grid_theta: float
    grid_contrast: float


@dataclass(frozen=True)
class DemixResult:
    w: np.ndarray
    outputs: tuple[np.ndarray, np.ndarray]
    contrast: float
    gain_matrix: np.ndarray | None


@dataclass(frozen=True)
class CancellationResult:
    soi_estimate: np.ndarray
    coefficient: complex
    delay: int


def _real_covariance(x: Observation) -> np.ndarray:
    n = len(x)
    c11 = np.mean(np.abs(x.x1) ** 2)
    c22 = np.mean(np.abs(x.x2) ** 2)
    c12 = np.real(np.mean(x.x1 * np.conj(x.x2)))
    return np.array([[c11, c12], [c12, c22]])


def whiten(x: Observation) -> tuple[Observation, WhiteningTransform]:
    """Decorrelate and power-normalize via the real part of the covariance."""
    if len(x) < MIN_SAMPLES:
        raise InsufficientSamples(f"whitening needs >= {MIN_SAMPLES} samples, got {len(x)}")
    cov = _real_covariance(x)
    if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0:
        raise DegenerateInput("a channel has zero power")
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] <= 1e-12 * evals[1]:
        raise DegenerateInput("observation covariance is rank deficient")
    t = (evecs / np.sqrt(evals)).T  # rows: 1/sqrt(lambda_i) * e_i^T
    z1 = t[0, 0] * x.x1 + t[0, 1] * x.x2
    z2 = t[1, 0] * x.x1 + t[1, 1] * x.x2
    return Observation(z1, z2), WhiteningTransform(matrix=t)


def complex_kurtosis(y: np.ndarray) -> float:
    """Fourth-order cumulant E|y|^4 - 2(E|y|^2)^2 - |E[y^2]|^2 (sample moments)."""
    y = np.asarray(y, dtype=np.complex128)
    if y.size < MIN_SAMPLES:
        raise InsufficientSamples(f"kurtosis needs >= {MIN_SAMPLES} samples, got {y.size}")
    m4 = np.mean(np.abs(y) ** 4)
    m2 = np.mean(np.abs(y) ** 2)
    p2 = np.mean(y * y)
    return float(m4 - 2.0 * m2**2 - abs(p2) ** 2)


class _ContrastProfile:
    """Summed |kurtosis| of the Givens-rotated pair as a function of angle.

    Precomputes the second- and fourth-order moments of (z1, z2) so each
    evaluation is closed-form in cos/sin of the angle.
    """

    def __init__(self, z: Observation):
        products = np.vstack([z.x1 * z.x1, z.x1 * z.x2, z.x2 * z.x2])
        n = products.shape[1]
        self.q = (products @ products.conj().T) / n  # E[m_p conj(m_q)], Hermitian
        self.p = products.mean(axis=1)  # E[m_p]
        self.r11 = float(np.mean(np.abs(z.x1) ** 2))
        self.r22 = float(np.mean(np.abs(z.x2) ** 2))
        self.r12 = complex(np.mean(z.x1 * np.conj(z.x2)))

    def _kurtosis(self, w: np.ndarray, c: float, s: float, sign: float) -> float:
        m4 = float(np.real(w @ self.q @ w))
        p2 = w @ self.p
        m2 = c * c * self.r11 + 2.0 * sign * c * s * self.r12.real + s * s * self.r22
        return m4 - 2.0 * m2 * m2 - abs(p2) ** 2

    def __call__(self, theta: float) -> float:
        c, s = math.cos(theta), math.sin(theta)
        w1 = np.array([c * c, 2.0 * c * s, s * s])
        w2 = np.array([s * s, -2.0 * s * c, c * c])
        k1 = self._kurtosis(w1, c, s, 1.0)
        k2 = self._kurtosis(w2, s, c, -1.0)
        return abs(k1) + abs(k2)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def find_rotation(z: Observation) -> RotationSearch:
    """Grid-plus-golden-section search for the separating Givens angle.

    The refined angle is guaranteed to score at least as high as the best
    grid point; a low-confidence flag marks a flat contrast landscape.
    """
    if len(z) < MIN_SAMPLES:
        raise InsufficientSamples(
            f"rotation search needs >= {MIN_SAMPLES} samples, got {len(z)}"
        )
    profile = _ContrastProfile(z)
    grid = np.arange(GRID_POINTS) * (math.pi / 2.0) / GRID_POINTS
    values = np.array([profile(t) for t in grid])
    best = int(np.argmax(values))
    grid_theta = float(grid[best])
    grid_value = float(values[best])
    low_confidence = float(values.max() - values.min()) < LOW_CONFIDENCE_SPAN

    step = math.pi / 2.0 / GRID_POINTS
    theta, value = _golden_section_max(profile, grid_theta - step, grid_theta + step, ANGLE_TOL)
    if value < grid_value:
        theta, value = grid_theta, grid_value
    theta %= math.pi / 2.0
    return RotationSearch(
        theta=theta,
        contrast=value,
        low_confidence=low_confidence,
        grid_theta=grid_theta,
        grid_contrast=grid_value,
    )


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def demix(x: Observation, true_mixing: MixingMatrix | None = None) -> DemixResult:
    """Blind separation: whiten, then rotate to maximize the kurtosis contrast.

    When the caller knows the true mixing (simulation harness), the product
    W @ A is attached for leakage diagnostics.
    """
    z, transform = whiten(x)
    search = find_rotation(z)
    w = rotation_matrix(search.theta) @ transform.matrix
    y1 = w[0, 0] * x.x1 + w[0, 1] * x.x2
    y2 = w[1, 0] * x.x1 + w[1, 1] * x.x2
    gain = w @ true_mixing.as_array() if true_mixing is not None else None
    return DemixResult(w=w, outputs=(y1, y2), contrast=search.contrast, gain_matrix=gain)


def _overlap(x1: np.ndarray, ref: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """x1 and ref delayed by d samples, restricted to their common support."""
    if d >= 0:
        return x1[d:], ref[: len(ref) - d]
    return x1[: len(x1) + d], ref[-d:]


def cancel_with_reference(
    x1: np.ndarray, ref: np.ndarray, max_delay: int
) -> CancellationResult:
    """Subtract the best delayed, complex-scaled copy of the reference.

    The integer delay maximizing the normalized cross-correlation plays the
    role of the tunable delay line; the least-squares coefficient plays the
    role of the tunable attenuator. The residual is returned on the
    overlapping support and is orthogonal to the delayed reference.
    """
    x1 = np.asarray(x1, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    if len(x1) != len(ref):
        raise LengthMismatch(f"lengths differ: {len(x1)} vs {len(ref)}")
    if max_delay < 0 or max_delay >= len(x1) // 4:
        raise ValueError("max_delay must satisfy 0 <= max_delay < length/4")
    if np.mean(np.abs(ref) ** 2) == 0.0:
        raise DegenerateReference("reference has zero power")

    best = None
    for d in range(-max_delay, max_delay + 1):
        xa, ra = _overlap(x1, ref, d)
        energy = np.real(np.vdot(ra, ra))
        if energy == 0.0:
            continue
        score = abs(np.vdot(ra, xa)) / math.sqrt(energy)
        if best is None or score > best[0]:
            best = (score, d)
    if best is None:
        raise DegenerateReference("reference has zero power at every delay")

    d = best[1]
    xa, ra = _overlap(x1, ref, d)
    coeff = np.vdot(ra, xa) / np.vdot(ra, ra)
    return CancellationResult(
        soi_estimate=xa - coeff * ra, coefficient=complex(coeff), delay=d
    )


def _pilot_fit(output: np.ndarray, pilot: np.ndarray) -> tuple[float, complex]:
    """(normalized correlation, LS scale/phase) of an output's pilot window."""
    window = output[: len(pilot)]
    wnorm = np.linalg.norm(window)
    pnorm = np.linalg.norm(pilot)
    inner = np.vdot(window, pilot)
    if wnorm == 0.0 or pnorm == 0.0:
        return 0.0, 0.0 + 0.0j
    corr = abs(inner) / (wnorm * pnorm)
    gain = inner / np.real(np.vdot(window, window))
    return float(corr), complex(gain)


def select_by_pilot(
    outputs: tuple[np.ndarray, np.ndarray], pilot: np.ndarray
) -> tuple[int, float, complex]:
    """Best output index by pilot correlation, with its LS scale/phase gain."""
    pilot = np.asarray(pilot, dtype=np.complex128)
    if len(pilot) < MIN_PILOT_LEN:
        raise InvalidPilot(f"pilot must have >= {MIN_PILOT_LEN} symbols, got {len(pilot)}")
    if any(len(out) <= len(pilot) for out in outputs):
        raise InvalidPilot("outputs must be longer than the pilot window")
    fits = [_pilot_fit(np.asarray(out, dtype=np.complex128), pilot) for out in outputs]
    best = int(np.argmax([f[0] for f in fits]))
    corr, gain = fits[best]
    return best, corr, gain


def resolve_ambiguity(
    outputs: tuple[np.ndarray, np.ndarray], pilot: np.ndarray
) -> np.ndarray:
    """Pick the output carrying the pilot and undo its scale/phase ambiguity."""
    best, corr, gain = select_by_pilot(outputs, pilot)
    if corr < CORRELATION_THRESHOLD:
        raise AmbiguityUnresolved(
            f"best pilot correlation {corr:.3f} is below {CORRELATION_THRESHOLD}"
        )
    return gain * np.asarray(outputs[best], dtype=np.complex128)
