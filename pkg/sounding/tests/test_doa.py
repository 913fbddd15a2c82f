import math

import numpy as np
from django.test import SimpleTestCase
from scipy import special

from sounding.doa import (
    ModeVector,
    beamspace_transform,
    estimate_bins,
    music_azimuth,
    phase_mode_excitation,
    threshold_bins,
)
from sounding.exceptions import DomainError, NumericError
from sounding.models import ISOTROPIC, AntennaPattern
from sounding.pipeline import envelope_and_pdp, process_capture
from sounding.synth import synthesize_idsf

from .helpers import BENCH, WIDE_FILTER, bench_evaluation, circular_distance, make_scene


def ideal_column(azimuth, sounder=BENCH, gain=1.0):
    psi = np.deg2rad(sounder.antenna_azimuths)
    return gain * np.exp(1j * sounder.array_phase * np.cos(math.radians(azimuth) - psi))


def transform(column, sounder=BENCH, **kwargs):
    return beamspace_transform(
        column,
        sounder.antenna_azimuths,
        sounder.carrier_frequency,
        sounder.vuca_radius,
        **kwargs,
    )


class ThresholdTestCase(SimpleTestCase):
    def test_relative_threshold(self):
        envelope = [1.0, 0.01, 0.001]
        np.testing.assert_array_equal(threshold_bins(envelope, 25.0), [0, 1])
        np.testing.assert_array_equal(threshold_bins(envelope, 0.0), [0])

    def test_all_zero_envelope_has_no_bins(self):
        self.assertEqual(len(threshold_bins(np.zeros(8), 25.0)), 0)

    def test_negative_threshold(self):
        with self.assertRaises(DomainError):
            threshold_bins([1.0], -1.0)


class BeamspaceTestCase(SimpleTestCase):
    def test_isotropic_excitation_is_bessel(self):
        modes = np.arange(-5, 6)
        expected = (1j ** modes) * special.jv(modes, BENCH.array_phase)
        np.testing.assert_allclose(phase_mode_excitation(BENCH.array_phase, 5), expected, atol=1e-12)

    def test_directive_pattern_is_divided_out(self):
        pattern = AntennaPattern(kind="cosine_power", boresight_gain=6.0)
        psi = np.deg2rad(BENCH.antenna_azimuths)
        offset = math.radians(140.0) - psi
        column = pattern.amplitude_gain(np.rad2deg(offset)) * np.exp(
            1j * BENCH.array_phase * np.cos(offset)
        )
        estimate = music_azimuth(transform(column, pattern=pattern))
        self.assertLessEqual(circular_distance(estimate.azimuth, 140.0), 0.1)

    def test_compensated_modes_are_pure_phase(self):
        azimuth = 77.0
        vector = transform(ideal_column(azimuth))
        expected = np.exp(1j * vector.modes * math.radians(azimuth))
        error = np.angle(vector.values / expected, deg=True)
        self.assertLessEqual(np.max(np.abs(error)), 1.0)
        self.assertFalse(vector.partial_aperture)

    def test_spatial_aliasing(self):
        sparse = np.deg2rad(360.0 * np.arange(8) / 8)
        with self.assertRaisesMessage(DomainError, "spatial aliasing"):
            beamspace_transform(
                np.ones(8),
                np.rad2deg(sparse),
                BENCH.carrier_frequency,
                BENCH.vuca_radius,
            )

    def test_partial_arc_is_flagged(self):
        azimuths = 180.0 * np.arange(32) / 32
        psi = np.deg2rad(azimuths)
        column = np.exp(1j * BENCH.array_phase * np.cos(math.radians(90.0) - psi))
        vector = beamspace_transform(
            column, azimuths, BENCH.carrier_frequency, BENCH.vuca_radius, arc_coverage=180.0
        )
        self.assertTrue(vector.partial_aperture)


class MusicTestCase(SimpleTestCase):
    def test_single_source_accuracy(self):
        for azimuth in (123.4, 359.97, 0.0, 200.01):
            with self.subTest(azimuth=azimuth):
                estimate = music_azimuth(transform(ideal_column(azimuth)))
                self.assertLessEqual(circular_distance(estimate.azimuth, azimuth), 0.05)
                self.assertGreaterEqual(estimate.azimuth, 0.0)
                self.assertLess(estimate.azimuth, 360.0)

    def test_gain_does_not_move_the_estimate(self):
        first = music_azimuth(transform(ideal_column(45.0)))
        second = music_azimuth(transform(ideal_column(45.0, gain=-1e-3j)))
        self.assertAlmostEqual(first.azimuth, second.azimuth, places=9)

    def test_two_sources_in_one_bin_degrade_quality(self):
        single = music_azimuth(transform(ideal_column(60.0)))
        mixed = music_azimuth(transform(ideal_column(60.0) + ideal_column(150.0, gain=0.8)))
        self.assertLess(mixed.peak_quality, single.peak_quality)

    def test_rotation_shifts_the_estimate(self):
        shift = 360.0 / BENCH.num_virtual_antennas
        column = ideal_column(100.0)
        base = music_azimuth(transform(column))
        rolled = music_azimuth(transform(np.roll(column, 1)))
        self.assertLessEqual(circular_distance(rolled.azimuth, base.azimuth + shift), 0.05)

    def test_spectrum_is_kept_on_request(self):
        estimate = music_azimuth(transform(ideal_column(10.0)), keep_spectrum=True)
        self.assertEqual(len(estimate.grid), 7200)
        self.assertEqual(estimate.spectrum.shape, (7200,))

    def test_zero_snapshot(self):
        vector = ModeVector(modes=np.arange(-2, 3), values=np.zeros(5))
        with self.assertRaises(NumericError):
            music_azimuth(vector)

    def test_rms_error_at_30_db_snr(self):
        errors = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            azimuth = float(rng.uniform(0.0, 360.0))
            draws = rng.standard_normal((2, BENCH.num_virtual_antennas))
            noise = math.sqrt(1e-3 / 2.0) * (draws[0] + 1j * draws[1])
            estimate = music_azimuth(transform(ideal_column(azimuth) + noise))
            errors.append(circular_distance(estimate.azimuth, azimuth))
        self.assertLessEqual(math.sqrt(np.mean(np.square(errors))), 0.5)


class EstimateBinsTestCase(SimpleTestCase):
    def test_bins_carry_envelope_power_and_azimuth(self):
        evaluation = bench_evaluation(**WIDE_FILTER)
        scene = make_scene((40e-9, 212.5, 0.5))
        processed = process_capture(synthesize_idsf(scene, BENCH), BENCH, evaluation)
        profile = envelope_and_pdp(processed)
        estimates, partial = estimate_bins(processed, profile, evaluation, ISOTROPIC)

        self.assertFalse(partial)
        strongest = max(estimates, key=lambda estimate: estimate.power)
        self.assertEqual(strongest.index, 50)
        self.assertAlmostEqual(10 * math.log10(strongest.power), 10 * math.log10(0.25), delta=0.05)
        for estimate in estimates:
            self.assertLessEqual(circular_distance(estimate.azimuth, 212.5), 0.5)
