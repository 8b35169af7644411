import math

import numpy as np
import pytest

from conftest import offdiag_leakage_db, random_qam_stream
from hybridbss.channel import MixingMatrix, Observation, mix, mixing_from_geometry, default_geometry
from hybridbss.errors import (
    AmbiguityUnresolved,
    DegenerateInput,
    DegenerateReference,
    InsufficientSamples,
    InvalidPilot,
    LengthMismatch,
)
from hybridbss.metrics import symbol_error_rate
from hybridbss.separation import (
    CancellationResult,
    _ContrastProfile,
    cancel_with_reference,
    complex_kurtosis,
    demix,
    find_rotation,
    resolve_ambiguity,
    rotation_matrix,
    whiten,
)
from hybridbss.signals import (
    ModulationScheme,
    QamStream,
    build_frame,
    decide_indices,
    generate_interference,
    make_pilot,
)

N_LARGE = 100_000


def rotated_pair(theta, s1, s2):
    c, s = math.cos(theta), math.sin(theta)
    return Observation(c * s1 - s * s2, s * s1 + c * s2)


def angle_error_mod_quarter(a, b):
    d = abs(a - b) % (math.pi / 2)
    return min(d, math.pi / 2 - d)


class TestWhiten:
    def test_already_white_stays_near_identity(self, rng):
        x = Observation(
            random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng),
            random_qam_stream(ModulationScheme.QAM16, N_LARGE, rng),
        )
        z, _ = whiten(x)
        cov = np.array(
            [
                [np.mean(np.abs(z.x1) ** 2), np.real(np.mean(z.x1 * np.conj(z.x2)))],
                [np.real(np.mean(z.x1 * np.conj(z.x2))), np.mean(np.abs(z.x2) ** 2)],
            ]
        )
        assert np.max(np.abs(cov - np.eye(2))) < 2e-2

    def test_self_covariance_is_identity_to_machine_precision(self, rng):
        # applying the fitted transform to its own data is exact regardless
        # of how correlated the input was
        s1 = random_qam_stream(ModulationScheme.QPSK, 20_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 20_000, rng)
        x = mix(MixingMatrix(1.0, 0.8, 0.2, 0.9), s1, s2)
        z, t = whiten(x)
        cov = np.array(
            [
                [np.mean(np.abs(z.x1) ** 2), np.real(np.mean(z.x1 * np.conj(z.x2)))],
                [np.real(np.mean(z.x1 * np.conj(z.x2))), np.mean(np.abs(z.x2) ** 2)],
            ]
        )
        assert np.max(np.abs(cov - np.eye(2))) < 1e-10

    def test_whitened_mixing_is_orthogonal(self, rng):
        a = np.array([[1.0, 0.4], [0.3, 0.8]])
        s1 = random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, N_LARGE, rng)
        x = Observation(a[0, 0] * s1 + a[0, 1] * s2, a[1, 0] * s1 + a[1, 1] * s2)
        _, t = whiten(x)
        ta = t.matrix @ a
        assert np.max(np.abs(ta @ ta.T - np.eye(2))) < 2e-2

    def test_zero_channel_rejected(self, rng):
        x1 = rng.standard_normal(500) + 0j
        with pytest.raises(DegenerateInput):
            whiten(Observation(x1, np.zeros(500, complex)))

    def test_rank_deficient_rejected(self, rng):
        x1 = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        with pytest.raises(DegenerateInput):
            whiten(Observation(x1, 2.0 * x1))

    def test_too_short(self, rng):
        x1 = rng.standard_normal(50) + 0j
        with pytest.raises(InsufficientSamples):
            whiten(Observation(x1, x1.copy() + 1.0))


class TestComplexKurtosis:
    def test_qpsk_exact_enumeration(self):
        # uniform over the four points: E|y|^4 = 1, E[y^2] = 0 -> 1 - 2 - 0
        pts = ModulationScheme.QPSK.points[np.tile(np.arange(4), 50)]
        assert complex_kurtosis(pts) == pytest.approx(-1.0, abs=1e-12)

    def test_tone_full_periods(self):
        # 10_000 samples at f = 0.1 covers exactly 1000 periods
        y = np.exp(1j * 2 * np.pi * 0.1 * np.arange(10_000))
        assert complex_kurtosis(y) == pytest.approx(-1.0, abs=1e-9)

    def test_gaussian_near_zero(self, rng):
        y = (rng.standard_normal(N_LARGE) + 1j * rng.standard_normal(N_LARGE)) / math.sqrt(2)
        assert abs(complex_kurtosis(y)) < 0.05

    def test_qam_table_values(self):
        # closed form for square QAM with unit mean power
        for scheme, expected in [
            (ModulationScheme.QAM16, -0.68),
            (ModulationScheme.QAM64, None),
        ]:
            pts = scheme.points[np.tile(np.arange(len(scheme.points)), 10)]
            kappa = complex_kurtosis(pts)
            enumerated = (
                np.mean(np.abs(scheme.points) ** 4)
                - 2 * np.mean(np.abs(scheme.points) ** 2) ** 2
                - abs(np.mean(scheme.points**2)) ** 2
            )
            assert kappa == pytest.approx(enumerated, abs=1e-12)
            if expected is not None:
                assert kappa == pytest.approx(expected, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientSamples):
            complex_kurtosis(np.ones(99, complex))


class TestFindRotation:
    def test_recovers_planted_angle(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng)
        s2 = random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng)
        theta0 = 0.61
        res = find_rotation(rotated_pair(theta0, s1, s2))
        assert angle_error_mod_quarter(res.theta, theta0) < 1e-3
        assert not res.low_confidence

    def test_contrast_profile_matches_direct_kurtosis(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 5000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 5000, rng)
        z = rotated_pair(0.2, s1, s2)
        profile = _ContrastProfile(z)
        for theta in (0.0, 0.13, 0.5, 1.1):
            c, s = math.cos(theta), math.sin(theta)
            y1 = c * z.x1 + s * z.x2
            y2 = -s * z.x1 + c * z.x2
            direct = abs(complex_kurtosis(y1)) + abs(complex_kurtosis(y2))
            assert profile(theta) == pytest.approx(direct, abs=1e-10)

    def test_quarter_period_symmetry(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 5000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 5000, rng)
        profile = _ContrastProfile(rotated_pair(0.37, s1, s2))
        for theta in (0.1, 0.4, 0.9):
            assert profile(theta) == pytest.approx(profile(theta + math.pi / 2), rel=1e-9)

    def test_gaussian_pair_flags_low_confidence(self, rng):
        g1 = (rng.standard_normal(N_LARGE) + 1j * rng.standard_normal(N_LARGE)) / math.sqrt(2)
        g2 = (rng.standard_normal(N_LARGE) + 1j * rng.standard_normal(N_LARGE)) / math.sqrt(2)
        res = find_rotation(Observation(g1, g2))
        assert res.low_confidence

    def test_refined_never_below_best_grid_point(self, rng):
        for seed in range(5):
            local = np.random.default_rng(seed)
            s1 = random_qam_stream(ModulationScheme.QPSK, 20_000, local)
            s2 = random_qam_stream(ModulationScheme.QAM16, 20_000, local)
            res = find_rotation(rotated_pair(local.uniform(0, np.pi / 2), s1, s2))
            assert res.contrast >= res.grid_contrast

    def test_too_short(self, rng):
        x = rng.standard_normal(50) + 0j
        with pytest.raises(InsufficientSamples):
            find_rotation(Observation(x, x + 1.0))


class TestDemix:
    def test_identity_mixing_low_leakage(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, N_LARGE, rng)
        a = MixingMatrix(1, 0, 0, 1)
        res = demix(mix(a, s1, s2), true_mixing=a)
        assert offdiag_leakage_db(res.gain_matrix) < -30.0

    def test_outputs_have_unit_power(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 20_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 20_000, rng)
        res = demix(mix(MixingMatrix(1.0, 0.5, 0.3, 0.9), s1, s2))
        for out in res.outputs:
            assert np.mean(np.abs(out) ** 2) == pytest.approx(1.0, abs=1e-6)

    def test_too_few_samples(self, rng):
        x = rng.standard_normal(50) + 0j
        with pytest.raises(InsufficientSamples):
            demix(Observation(x, x + 1.0))

    def test_ill_conditioned_geometry_fails_to_separate(self, rng):
        # the paper's failure mode: near-equal rows at 25 dB SNR
        a = mixing_from_geometry(default_geometry())
        frame = build_frame(ModulationScheme.QAM64, N_LARGE - 64, seed=21)
        s_int = generate_interference(QamStream(ModulationScheme.QAM16), N_LARGE, seed=22)
        x = mix(a, frame.symbols, s_int, snr_db=25.0, seed=23)
        res = demix(x, true_mixing=a)
        assert offdiag_leakage_db(res.gain_matrix) > -10.0
        # downstream decisions are hopeless for 64QAM
        pilot = make_pilot(64)
        try:
            aligned = resolve_ambiguity(res.outputs, pilot)
        except AmbiguityUnresolved:
            return  # even pilot alignment failed; separation clearly failed
        decided = decide_indices(aligned[64:], ModulationScheme.QAM64)
        truth = decide_indices(frame.payload, ModulationScheme.QAM64)
        assert symbol_error_rate(decided, truth) > 0.10

    def test_determinism(self, rng):
        s1 = random_qam_stream(ModulationScheme.QPSK, 10_000, rng)
        s2 = random_qam_stream(ModulationScheme.QAM16, 10_000, rng)
        x = mix(MixingMatrix(1.0, 0.5, 0.3, 0.9), s1, s2, snr_db=20.0, seed=5)
        r1 = demix(x)
        r2 = demix(x)
        assert np.array_equal(r1.w, r2.w)
        assert np.array_equal(r1.outputs[0], r2.outputs[0])


class TestCancellation:
    def make_delayed_mixture(self, rng, n=20_000, delay=3, coeff=0.5):
        r = generate_interference(QamStream(ModulationScheme.QAM16), n, seed=31)
        rd = np.roll(r, delay)
        rd[:delay] = 0.0
        s = random_qam_stream(ModulationScheme.QPSK, n, rng)
        # orthogonalize the SOI against the delayed reference so the LS
        # coefficient is exactly the planted one
        s = s - (np.vdot(rd, s) / np.vdot(rd, rd)) * rd
        return s + coeff * rd, r, s

    def test_recovers_delay_and_coefficient(self, rng):
        x1, r, s = self.make_delayed_mixture(rng)
        res = cancel_with_reference(x1, r, max_delay=8)
        assert res.delay == 3
        assert abs(res.coefficient - 0.5) < 1e-6

    def test_residual_interference_below_minus_80_db(self, rng):
        x1, r, s = self.make_delayed_mixture(rng)
        res = cancel_with_reference(x1, r, max_delay=8)
        pre = np.mean(np.abs(x1 - s) ** 2)
        post = np.mean(np.abs(res.soi_estimate - s[res.delay :]) ** 2)
        assert 10 * math.log10(post / pre) < -80.0

    def test_residual_orthogonal_to_delayed_reference(self, rng):
        x1, r, s = self.make_delayed_mixture(rng)
        res = cancel_with_reference(x1, r, max_delay=8)
        ra = r[: len(r) - res.delay]
        rho = abs(np.vdot(res.soi_estimate, ra)) / (
            np.linalg.norm(res.soi_estimate) * np.linalg.norm(ra)
        )
        assert rho < 1e-6

    def test_uncorrelated_reference_leaves_signal(self, rng):
        x1 = random_qam_stream(ModulationScheme.QPSK, N_LARGE, rng)
        r = generate_interference(QamStream(ModulationScheme.QAM16), N_LARGE, seed=41)
        res = cancel_with_reference(x1, r, max_delay=0)
        assert abs(res.coefficient) < 0.02
        assert np.mean(np.abs(res.soi_estimate - x1) ** 2) < 4e-4

    def test_zero_delay_is_plain_projection(self, rng):
        x1 = random_qam_stream(ModulationScheme.QPSK, 5000, rng)
        r = generate_interference(QamStream(ModulationScheme.QAM16), 5000, seed=43)
        res = cancel_with_reference(x1, r, max_delay=0)
        assert res.delay == 0
        rho = abs(np.vdot(res.soi_estimate, r)) / (
            np.linalg.norm(res.soi_estimate) * np.linalg.norm(r)
        )
        assert rho < 1e-6

    def test_residual_power_non_increasing_in_max_delay(self, rng):
        x1, r, s = self.make_delayed_mixture(rng, delay=5)
        powers = []
        for md in range(0, 9):
            res = cancel_with_reference(x1, r, max_delay=md)
            powers.append(np.mean(np.abs(res.soi_estimate) ** 2))
        for earlier, later in zip(powers, powers[1:]):
            assert later <= earlier + 1e-12

    def test_zero_reference(self, rng):
        x1 = rng.standard_normal(1000) + 0j
        with pytest.raises(DegenerateReference):
            cancel_with_reference(x1, np.zeros(1000, complex), max_delay=4)

    def test_bad_max_delay(self, rng):
        x1 = rng.standard_normal(100) + 0j
        with pytest.raises(ValueError):
            cancel_with_reference(x1, x1.copy(), max_delay=25)

    def test_length_mismatch(self, rng):
        with pytest.raises(LengthMismatch):
            cancel_with_reference(np.zeros(10, complex), np.zeros(11, complex), 0)


class TestResolveAmbiguity:
    def test_undoes_scale_and_phase(self, rng, pilot):
        payload = random_qam_stream(ModulationScheme.QAM16, 2000, rng)
        s = np.concatenate([pilot, payload])
        distorted = 0.3 * np.exp(1j * np.pi / 7) * s
        junk = generate_interference(QamStream(ModulationScheme.QAM16), len(s), seed=51)
        aligned = resolve_ambiguity((distorted, junk), pilot)
        assert np.max(np.abs(aligned - s)) < 1e-6

    def test_channel_order_does_not_matter(self, rng, pilot):
        s = np.concatenate([pilot, random_qam_stream(ModulationScheme.QPSK, 500, rng)])
        junk = generate_interference(QamStream(ModulationScheme.QAM16), len(s), seed=52)
        a = resolve_ambiguity((2.0 * s, junk), pilot)
        b = resolve_ambiguity((junk, 2.0 * s), pilot)
        assert np.allclose(a, b, atol=1e-9)

    def test_unrelated_outputs_unresolved(self, pilot):
        r1 = generate_interference(QamStream(ModulationScheme.QAM16), 1000, seed=53)
        r2 = generate_interference(QamStream(ModulationScheme.QAM16), 1000, seed=54)
        with pytest.raises(AmbiguityUnresolved):
            resolve_ambiguity((r1, r2), pilot)

    def test_empty_pilot(self, rng):
        outs = (np.ones(100, complex), np.ones(100, complex))
        with pytest.raises(InvalidPilot):
            resolve_ambiguity(outs, np.array([], dtype=complex))

    def test_short_pilot(self, rng):
        outs = (np.ones(100, complex), np.ones(100, complex))
        with pytest.raises(InvalidPilot):
            resolve_ambiguity(outs, make_pilot(8))
