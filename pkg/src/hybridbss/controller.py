"""Mode switching: blind separability estimation plus hysteresis logic.

The controller prefers FSO when the RF mixing looks ill-conditioned and the
optical path is clear, but a blocked optical path forces MIMO immediately,
bypassing any dwell requirement: availability beats smoothness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMode, Observation
from .errors import InsufficientSamples

MIN_ESTIMATE_SAMPLES = 1000
EIGENVALUE_RTOL = 1e-12


@dataclass(frozen=True)
class SwitchPolicy:
    kappa_hi: float = 50.0
    kappa_lo: float = 10.0
    dwell_up: int = 3
    dwell_down: int = 3

    def __post_init__(self):
        if not self.kappa_lo < self.kappa_hi:
            raise ValueError("kappa_lo must be < kappa_hi")
        if self.dwell_up < 1 or self.dwell_down < 1:
            raise ValueError("dwell counts must be >= 1")


@dataclass(frozen=True)
class ModeState:
    mode: ChannelMode = ChannelMode.MIMO
    consecutive_above: int = 0
    consecutive_below: int = 0
    last_estimate: float = 1.0


@dataclass(frozen=True)
class FrameReport:
    separability_estimate: float
    fso_clear: bool


def estimate_separability(x: Observation) -> float:
    """Blind condition estimate: sqrt of the covariance eigenvalue ratio.

    For uncorrelated unit-power sources this equals the 2-norm condition
    number of the effective mixing; rank deficiency maps to +inf.
    """
    if len(x) < MIN_ESTIMATE_SAMPLES:
        raise InsufficientSamples(
            f"separability estimate needs >= {MIN_ESTIMATE_SAMPLES} samples, got {len(x)}"
        )
    c11 = np.mean(np.abs(x.x1) ** 2)
    c22 = np.mean(np.abs(x.x2) ** 2)
    c12 = np.real(np.mean(x.x1 * np.conj(x.x2)))
    cov = np.array([[c11, c12], [c12, c22]])
    evals = np.linalg.eigvalsh(cov)
    if evals[0] <= EIGENVALUE_RTOL * evals[1]:
        return math.inf
    return float(math.sqrt(evals[1] / evals[0]))


def step(
    state: ModeState, report: FrameReport, policy: SwitchPolicy
) -> tuple[ModeState, ChannelMode]:
    """One controller transition; pure function of its arguments.

    A blocked FSO path forces MIMO on the spot. Otherwise a mode change
    needs the estimate past the threshold for a full dwell streak.
    """
    est = report.separability_estimate

    if state.mode is ChannelMode.FSO and not report.fso_clear:
        new = ModeState(ChannelMode.MIMO, 0, 0, est)
        return new, new.mode

    if state.mode is ChannelMode.MIMO:
        if report.fso_clear and est >= policy.kappa_hi:
            above = state.consecutive_above + 1
            if above >= policy.dwell_up:
                new = ModeState(ChannelMode.FSO, 0, 0, est)
            else:
                new = ModeState(ChannelMode.MIMO, above, 0, est)
        else:
            new = ModeState(ChannelMode.MIMO, 0, 0, est)
        return new, new.mode

    # FSO with a clear path
    if est < policy.kappa_lo:
        below = state.consecutive_below + 1
        if below >= policy.dwell_down:
            new = ModeState(ChannelMode.MIMO, 0, 0, est)
        else:
            new = ModeState(ChannelMode.FSO, 0, below, est)
    else:
        new = ModeState(ChannelMode.FSO, 0, 0, est)
    return new, new.mode
