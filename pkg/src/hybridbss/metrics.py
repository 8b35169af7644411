"""Signal quality scoring and result export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .channel import ChannelMode
from .errors import DegenerateReference, InvalidPower, LengthMismatch

SUPPRESSION_CAP_DB = 120.0


def evm_rms(y: np.ndarray, ref_symbols: np.ndarray) -> float:
    """RMS error vector magnitude in percent, normalized by mean reference power."""
    y = np.asarray(y, dtype=np.complex128)
    ref = np.asarray(ref_symbols, dtype=np.complex128)
    if len(y) != len(ref):
        raise LengthMismatch(f"lengths differ: {len(y)} vs {len(ref)}")
    ref_power = np.mean(np.abs(ref) ** 2) if len(ref) else 0.0
    if ref_power == 0.0:
        raise DegenerateReference("reference has zero power")
    err_power = np.mean(np.abs(y - ref) ** 2)
    return float(100.0 * math.sqrt(err_power / ref_power))


def symbol_error_rate(decided: np.ndarray, truth: np.ndarray) -> float:
    decided = np.asarray(decided)
    truth = np.asarray(truth)
    if decided.shape != truth.shape or decided.size == 0:
        raise LengthMismatch(
            f"need equal nonzero counts, got {decided.size} vs {truth.size}"
        )
    return float(np.mean(decided != truth))


def bit_error_rate(decided_bits: np.ndarray, truth_bits: np.ndarray) -> float:
    return symbol_error_rate(decided_bits, truth_bits)


def suppression_db(int_power_before: float, int_power_after: float) -> float:
    """Interference power reduction in dB, capped at +120."""
    if int_power_before <= 0.0:
        raise InvalidPower(f"pre-cancellation power must be > 0, got {int_power_before}")
    if int_power_after < 0.0:
        raise InvalidPower(f"post-cancellation power must be >= 0, got {int_power_after}")
    if int_power_after == 0.0:
        return SUPPRESSION_CAP_DB
    return float(min(10.0 * math.log10(int_power_before / int_power_after), SUPPRESSION_CAP_DB))


def export_constellation(
    y: np.ndarray, decided_indices: np.ndarray, destination: str | Path
) -> Path:
    """Write one CSV row per symbol: index, I, Q, decided constellation index."""
    y = np.asarray(y, dtype=np.complex128)
    decided = np.asarray(decided_indices, dtype=np.int64)
    if len(y) != len(decided):
        raise LengthMismatch(f"lengths differ: {len(y)} vs {len(decided)}")
    path = Path(destination)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("index,re,im,decided_index\n")
            for k, (v, d) in enumerate(zip(y, decided)):
                fh.write(f"{k},{v.real:.12g},{v.imag:.12g},{d}\n")
    except OSError as exc:
        raise OSError(f"failed writing constellation CSV to {path}: {exc}") from exc
    return path


@dataclass(frozen=True)
class RunReport:
    """Aggregate outcome of one simulation run; serializes to a single JSON doc."""

    mode_trace: list[str]
    evm_percent: float
    ser: float
    ber: float
    suppression_db: float
    separability_before: float
    separability_after: float
    seed: int
    config_digest: str

    def to_json(self) -> str:
        def _enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v

        payload = {k: _enc(v) for k, v in asdict(self).items()}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def write(self, destination: str | Path) -> Path:
        path = Path(destination)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def mode_trace_strings(trace: list[ChannelMode]) -> list[str]:
    return [m.value for m in trace]
