import math
from dataclasses import replace

from django.test import SimpleTestCase

from sounding.exceptions import DomainError
from sounding.models import (
    DESK,
    FR3_14GHZ,
    SPEED_OF_LIGHT,
    AntennaPattern,
    EvalConfig,
    GroundTruthPath,
    k_min,
    max_doppler_delay_shift,
    normalize_azimuth,
    preset,
)

from .helpers import make_scene


class KMinTestCase(SimpleTestCase):
    def test_reproduces_preset_array_sizes(self):
        self.assertEqual(k_min(14e9, 0.144), 85)
        self.assertEqual(k_min(160e9, 0.085), 571)

    def test_exact_integer_ratio_is_not_rounded_up(self):
        radius = 0.1
        carrier = SPEED_OF_LIGHT / (4 * math.pi * radius)
        self.assertEqual(k_min(carrier, radius), 1)

    def test_monotone_in_frequency_and_radius(self):
        self.assertLessEqual(k_min(14e9, 0.144), k_min(28e9, 0.144))
        self.assertLessEqual(k_min(14e9, 0.1), k_min(14e9, 0.144))

    def test_rejects_non_positive_inputs(self):
        with self.assertRaises(DomainError):
            k_min(0, 0.1)
        with self.assertRaises(DomainError):
            k_min(14e9, -1)


class DopplerShiftTestCase(SimpleTestCase):
    def test_half_sampling_period(self):
        self.assertAlmostEqual(max_doppler_delay_shift(2e9), 0.25e-9, places=20)
        self.assertAlmostEqual(max_doppler_delay_shift(1e9), 0.5e-9, places=20)
        self.assertAlmostEqual(max_doppler_delay_shift(500e6), 1.0e-9, places=20)


class PresetTestCase(SimpleTestCase):
    def test_fr3_preset(self):
        sounder, evaluation = preset("fr3_14ghz")
        self.assertEqual(sounder.num_virtual_antennas, 1000)
        self.assertEqual(sounder.vuca_radius, 0.144)
        self.assertEqual(evaluation.spectral_filter_length, 85)
        self.assertEqual(evaluation.spectral_filter_alpha, 0.5)
        self.assertAlmostEqual(evaluation.delay_cluster_grid, 0.25e-9, places=20)
        self.assertEqual(evaluation.relative_threshold, 25.0)
        self.assertEqual(evaluation.music_grid_resolution, 0.05)

    def test_subthz_preset(self):
        sounder, evaluation = preset("subthz_160ghz")
        self.assertEqual(sounder.num_virtual_antennas, 1440)
        self.assertEqual(sounder.vuca_radius, 0.085)
        self.assertEqual(evaluation.spectral_filter_length, 571)

    def test_desk_preset_is_four_times_k_min(self):
        self.assertEqual(DESK.num_virtual_antennas, 4 * 85)
        self.assertEqual(DESK.sequence_length, 8192)
        self.assertAlmostEqual(DESK.rx_sampling_rate / DESK.bandwidth, 1.25)

    def test_derived_gains(self):
        self.assertAlmostEqual(FR3_14GHZ.correlation_gain_db, 60.0, places=9)
        self.assertAlmostEqual(FR3_14GHZ.oversampling_gain_db, 10 * math.log10(1.25), places=12)
        self.assertAlmostEqual(FR3_14GHZ.measurement_time, 0.5, places=12)

    def test_unknown_preset(self):
        with self.assertRaisesMessage(DomainError, "unknown preset"):
            preset("wifi")

    def test_invalid_sounder_fields(self):
        with self.assertRaises(DomainError):
            replace(FR3_14GHZ, bandwidth=3e9)
        with self.assertRaises(DomainError):
            replace(FR3_14GHZ, arc_coverage=400.0)


class EvalConfigTestCase(SimpleTestCase):
    def test_filter_longer_than_array_is_rejected(self):
        evaluation = EvalConfig.for_sounder(FR3_14GHZ, spectral_filter_length=1001)
        with self.assertRaisesMessage(DomainError, "exceeds K = 1000"):
            evaluation.validate_against(FR3_14GHZ)

    def test_taper_range(self):
        with self.assertRaises(DomainError):
            EvalConfig(spectral_filter_length=10, spectral_filter_alpha=1.5)


class AntennaPatternTestCase(SimpleTestCase):
    def test_default_exponent_follows_boresight_gain(self):
        pattern = AntennaPattern(kind="cosine_power", boresight_gain=4.0)
        self.assertAlmostEqual(pattern.exponent, 10 ** 0.4 - 1.0)

    def test_boresight_and_back_lobe(self):
        pattern = AntennaPattern(kind="cosine_power", boresight_gain=4.0, front_to_back=20.0)
        self.assertAlmostEqual(float(pattern.power_gain(0.0)), 10 ** 0.4)
        self.assertAlmostEqual(float(pattern.power_gain(180.0)), 10 ** 0.4 * 0.01)

    def test_isotropic_gain_is_flat(self):
        pattern = AntennaPattern(boresight_gain=3.0)
        self.assertTrue(pattern.is_isotropic)
        self.assertAlmostEqual(float(pattern.power_gain(123.0)), 10 ** 0.3)

    def test_unknown_kind(self):
        with self.assertRaises(DomainError):
            AntennaPattern(kind="yagi")


class SceneTestCase(SimpleTestCase):
    def test_paths_are_sorted_by_delay(self):
        scene = make_scene((50e-9, 10.0, 0.5), (20e-9, 20.0, 1.0))
        self.assertEqual([path.delay for path in scene.paths], [20e-9, 50e-9])

    def test_path_before_line_of_sight_is_rejected(self):
        with self.assertRaisesMessage(DomainError, "line-of-sight"):
            make_scene((5e-9, 0.0, 1.0), distance=3.0)

    def test_noise_floor_must_be_negative(self):
        with self.assertRaises(DomainError):
            make_scene(noise_floor=3.0)

    def test_azimuth_is_normalized(self):
        self.assertEqual(GroundTruthPath(0.0, -90.0, 1.0).azimuth, 270.0)
        self.assertEqual(float(normalize_azimuth(-1e-20)), 0.0)

    def test_zero_gain_is_rejected(self):
        with self.assertRaises(DomainError):
            GroundTruthPath(0.0, 0.0, 0.0)
