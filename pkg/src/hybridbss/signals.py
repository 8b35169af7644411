"""Baseband waveform generation: QAM modulation, interference sources, AWGN.

Normative symbol mapping
------------------------
Square QAM with independent per-axis reflected Gray coding. A group of
``bits_per_symbol`` bits is split in half: the first half (MSB first)
selects the I-axis level, the second half the Q-axis level. On each axis
the bit pattern ``b`` is the reflected Gray code of its position ``k``
(``gray(k) = k ^ (k >> 1)``) and position ``k`` maps to level
``(2**m - 1) - 2k``, i.e. bit pattern 0...0 is always the most positive
level. The resulting axis tables are:

    1 bit  (QPSK):   0 -> +1,  1 -> -1
    2 bits (16QAM):  00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3
    3 bits (64QAM):  000 -> +7, 001 -> +5, 011 -> +3, 010 -> +1,
                     110 -> -1, 111 -> -3, 101 -> -5, 100 -> -7

Constellations are scaled by 1/sqrt(2), 1/sqrt(10) and 1/sqrt(42) so the
mean symbol power is exactly 1. Demodulation is nearest-point with ties
broken toward the smaller symbol index (index = bit group read MSB-first).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EmptyInput, InvalidBitLength

PILOT_SEED = 20211  # fixed so every frame carries the same known preamble
DEFAULT_PILOT_LEN = 64


class ModulationScheme(enum.Enum):
    QPSK = "QPSK"
    QAM16 = "QAM16"
    QAM64 = "QAM64"

    @property
    def bits_per_symbol(self) -> int:
        return {"QPSK": 2, "QAM16": 4, "QAM64": 6}[self.value]

    @property
    def points(self) -> np.ndarray:
        """Constellation table indexed by the bit-group integer."""
        return _constellation(self)


def _axis_levels(m: int) -> np.ndarray:
    """Map each m-bit axis pattern (as integer) to its amplitude level."""
    n = 1 << m
    levels = np.empty(n)
    for k in range(n):
        levels[k ^ (k >> 1)] = (n - 1) - 2 * k
    return levels


@lru_cache(maxsize=None)
def _constellation(scheme: ModulationScheme) -> np.ndarray:
    m = scheme.bits_per_symbol // 2
    levels = _axis_levels(m)
    # mean of level^2 is (4^m - 1)/3; times two axes gives the norm constant
    norm = math.sqrt(2.0 * (4**m - 1) / 3.0)
    idx = np.arange(1 << scheme.bits_per_symbol)
    i_part = levels[idx >> m]
    q_part = levels[idx & ((1 << m) - 1)]
    pts = (i_part + 1j * q_part) / norm
    pts.setflags(write=False)
    return pts


def modulate(bits: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    """Map a {0,1} bit stream to constellation symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    b = scheme.bits_per_symbol
    if bits.size % b != 0:
        raise InvalidBitLength(
            f"bit stream length {bits.size} is not a multiple of {b}"
        )
    if bits.size == 0:
        return np.empty(0, dtype=np.complex128)
    groups = bits.reshape(-1, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    return scheme.points[groups @ weights]


def decide_indices(symbols: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    """Nearest-point decision; ties go to the smaller table index."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size == 0:
        return np.empty(0, dtype=np.int64)
    d2 = np.abs(symbols[:, None] - scheme.points[None, :]) ** 2
    return np.argmin(d2, axis=1)


def indices_to_bits(indices: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    b = scheme.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.int64).reshape(-1)


def bits_to_indices(bits: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    b = scheme.bits_per_symbol
    if bits.size % b != 0:
        raise InvalidBitLength(
            f"bit stream length {bits.size} is not a multiple of {b}"
        )
    if bits.size == 0:
        return np.empty(0, dtype=np.int64)
    weights = 1 << np.arange(b - 1, -1, -1)
    return bits.reshape(-1, b) @ weights


def demodulate(symbols: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    """Hard-decision inverse of :func:`modulate`."""
    return indices_to_bits(decide_indices(symbols, scheme), scheme)


@dataclass(frozen=True)
class QamStream:
    scheme: ModulationScheme


@dataclass(frozen=True)
class Tone:
    normalized_frequency: float


@dataclass(frozen=True)
class FilteredNoise:
    bandwidth_fraction: float

    def __post_init__(self):
        if not 0.0 < self.bandwidth_fraction <= 1.0:
            raise ValueError("bandwidth_fraction must be in (0, 1]")


InterferenceKind = QamStream | Tone | FilteredNoise


def generate_interference(kind: InterferenceKind, n: int, seed: int) -> np.ndarray:
    """Unit-mean-power interference waveform, deterministic in (kind, n, seed)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    if isinstance(kind, QamStream):
        bits = rng.integers(0, 2, size=n * kind.scheme.bits_per_symbol)
        return modulate(bits, kind.scheme)
    if isinstance(kind, Tone):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        t = np.arange(n)
        return np.exp(1j * (2.0 * np.pi * kind.normalized_frequency * t + phase))
    if isinstance(kind, FilteredNoise):
        if n == 0:
            return np.empty(0, dtype=np.complex128)
        white = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        spectrum = np.fft.fft(white)
        freqs = np.fft.fftfreq(n)
        spectrum[np.abs(freqs) > kind.bandwidth_fraction / 2.0] = 0.0
        shaped = np.fft.ifft(spectrum)
        power = np.mean(np.abs(shaped) ** 2)
        return shaped / math.sqrt(power)
    raise TypeError(f"unknown interference kind: {kind!r}")


def mean_power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(np.asarray(x)) ** 2))


def add_awgn(x: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Add circularly symmetric complex Gaussian noise at the given SNR.

    Noise variance is measured-signal-power * 10^(-snr_db/10), split equally
    between real and imaginary parts. ``snr_db = +inf`` returns a copy.
    """
    x = np.asarray(x, dtype=np.complex128)
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    if x.size == 0:
        raise EmptyInput("cannot add noise at finite SNR to an empty sequence")
    p = mean_power(x)
    sigma2 = p * 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)) * math.sqrt(
        sigma2 / 2.0
    )
    return x + noise


def make_pilot(length: int = DEFAULT_PILOT_LEN) -> np.ndarray:
    """Known QPSK preamble, identical for every frame (fixed internal seed)."""
    rng = np.random.default_rng(PILOT_SEED)
    bits = rng.integers(0, 2, size=2 * length)
    return modulate(bits, ModulationScheme.QPSK)


@dataclass(frozen=True)
class Frame:
    """One transmitted SOI frame: known pilot followed by payload symbols."""

    pilot: np.ndarray
    payload: np.ndarray
    scheme: ModulationScheme
    payload_bits: np.ndarray

    @property
    def symbols(self) -> np.ndarray:
        return np.concatenate([self.pilot, self.payload])


def build_frame(
    scheme: ModulationScheme, n_payload: int, seed: int, pilot_len: int = DEFAULT_PILOT_LEN
) -> Frame:
    """Random payload frame with the fixed pilot prepended."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=n_payload * scheme.bits_per_symbol)
    return Frame(
        pilot=make_pilot(pilot_len),
        payload=modulate(bits, scheme),
        scheme=scheme,
        payload_bits=bits,
    )
