import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_qam_stream
from hybridbss.channel import ChannelMode, MixingMatrix, Observation, mix
from hybridbss.controller import (
    FrameReport,
    ModeState,
    SwitchPolicy,
    estimate_separability,
    step,
)
from hybridbss.errors import InsufficientSamples
from hybridbss.signals import ModulationScheme

report_strategy = st.builds(
    FrameReport,
    separability_estimate=st.one_of(
        st.floats(min_value=1.0, max_value=1e4), st.just(math.inf)
    ),
    fso_clear=st.booleans(),
)


class TestEstimator:
    def test_orthogonal_mixing_estimates_one(self, rng):
        # rotation by 30 degrees: covariance is the identity
        theta = math.pi / 6
        s1 = random_qam_stream(ModulationScheme.QPSK, 100_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 100_000, rng)
        c, s = math.cos(theta), math.sin(theta)
        x = Observation(c * s1 - s * s2, s * s1 + c * s2)
        est = estimate_separability(x)
        assert 1.0 <= est <= 1.1

    def test_identical_channels_infinite(self, rng):
        x1 = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        assert estimate_separability(Observation(x1, x1.copy())) == math.inf

    def test_too_short(self, rng):
        x1 = rng.standard_normal(500) + 0j
        with pytest.raises(InsufficientSamples):
            estimate_separability(Observation(x1, x1 + 1.0))

    def test_scale_invariance(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 10_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 10_000, rng)
        x = mix(MixingMatrix(1.0, 0.6, 0.2, 0.8), s1, s2)
        base = estimate_separability(x)
        for c in (1e-3, 7.0, 1e3):
            scaled = Observation(c * x.x1, c * x.x2)
            assert estimate_separability(scaled) == pytest.approx(base, rel=1e-9)

    def test_noiseless_matches_svd_oracle(self, rng):
        # with unit-power uncorrelated sources the estimate equals cond_2(A)
        a = np.array([[1.0, 0.45], [0.3, 0.85]])
        s1 = random_qam_stream(ModulationScheme.QPSK, 100_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 100_000, rng)
        x = Observation(a[0, 0] * s1 + a[0, 1] * s2, a[1, 0] * s1 + a[1, 1] * s2)
        oracle = np.linalg.cond(a, 2)
        assert estimate_separability(x) == pytest.approx(oracle, rel=0.05)

    def test_estimate_at_least_one(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 5000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 5000, rng)
        x = mix(MixingMatrix(0.9, 0.1, 0.2, 0.8), s1, s2, snr_db=10.0, seed=3)
        assert estimate_separability(x) >= 1.0


class TestStep:
    def test_blocked_fso_forces_mimo_immediately(self):
        state = ModeState(ChannelMode.FSO, 0, 2, 300.0)
        policy = SwitchPolicy()
        new, mode = step(state, FrameReport(500.0, fso_clear=False), policy)
        assert mode is ChannelMode.MIMO
        assert new.consecutive_above == 0 and new.consecutive_below == 0

    def test_switch_on_third_consecutive_frame(self):
        policy = SwitchPolicy(kappa_hi=50, kappa_lo=10, dwell_up=3, dwell_down=3)
        state = ModeState(ChannelMode.MIMO, consecutive_above=2)
        new, mode = step(state, FrameReport(300.0, fso_clear=True), policy)
        assert mode is ChannelMode.FSO
        assert new.consecutive_above == 0

    def test_alternating_estimates_never_switch(self):
        policy = SwitchPolicy(kappa_hi=50, kappa_lo=10, dwell_up=3, dwell_down=3)
        state = ModeState()
        for est in [45.0, 55.0, 45.0, 55.0, 45.0, 55.0, 45.0, 55.0]:
            state, mode = step(state, FrameReport(est, fso_clear=True), policy)
            assert mode is ChannelMode.MIMO

    def test_return_to_mimo_needs_dwell(self):
        policy = SwitchPolicy(kappa_hi=50, kappa_lo=10, dwell_up=1, dwell_down=2)
        state = ModeState(ChannelMode.FSO)
        state, mode = step(state, FrameReport(5.0, fso_clear=True), policy)
        assert mode is ChannelMode.FSO  # first low frame only counts
        state, mode = step(state, FrameReport(5.0, fso_clear=True), policy)
        assert mode is ChannelMode.MIMO

    def test_infinite_estimate_counts_as_high(self):
        policy = SwitchPolicy(dwell_up=1)
        state = ModeState()
        _, mode = step(state, FrameReport(math.inf, fso_clear=True), policy)
        assert mode is ChannelMode.FSO

    def test_blocked_while_mimo_resets_streak(self):
        policy = SwitchPolicy(dwell_up=2)
        state = ModeState(ChannelMode.MIMO, consecutive_above=1)
        new, mode = step(state, FrameReport(300.0, fso_clear=False), policy)
        assert mode is ChannelMode.MIMO
        assert new.consecutive_above == 0

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            SwitchPolicy(kappa_hi=10, kappa_lo=10)
        with pytest.raises(ValueError):
            SwitchPolicy(dwell_up=0)


def replay(reports, policy):
    state = ModeState()
    trace = []
    for r in reports:
        state, mode = step(state, r, policy)
        trace.append(mode)
        assert not (state.consecutive_above > 0 and state.consecutive_below > 0)
    return trace


@settings(max_examples=200, deadline=None)
@given(reports=st.lists(report_strategy, max_size=40))
def test_safety_and_hysteresis_properties(reports):
    policy = SwitchPolicy(kappa_hi=50, kappa_lo=10, dwell_up=3, dwell_down=3)
    trace = replay(reports, policy)

    # safety: a blocked frame is never served in FSO mode
    for report, mode in zip(reports, trace):
        if not report.fso_clear:
            assert mode is ChannelMode.MIMO

    # no chattering: entering FSO requires dwell_up consecutive qualifying frames
    for k, mode in enumerate(trace):
        previous = trace[k - 1] if k else ChannelMode.MIMO
        if mode is ChannelMode.FSO and previous is ChannelMode.MIMO:
            window = reports[k - policy.dwell_up + 1 : k + 1]
            assert len(window) == policy.dwell_up
            assert all(
                r.fso_clear and r.separability_estimate >= policy.kappa_hi
                for r in window
            )

    # determinism: replay reproduces the identical trace
    assert replay(reports, policy) == trace
