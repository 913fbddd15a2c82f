import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from sounding.doa import threshold_bins
from sounding.exceptions import DataFormatError
from sounding.models import DESK, AntennaPattern, EvalConfig
from sounding.pipeline import (
    check_delay_grid,
    envelope_and_pdp,
    estimate_paths,
    frequency_window,
    process_capture,
    processed_noise_gain,
    spectral_lowpass,
)
from sounding.synth import synthesize_idsf

from .helpers import (
    BENCH,
    BENCH_DELAY_STEP,
    IDENTITY_FILTER,
    WIDE_FILTER,
    bench_evaluation,
    circular_distance,
    make_scene,
    noise_idsf,
)


class ProcessCaptureTestCase(SimpleTestCase):
    def setUp(self):
        self.evaluation = bench_evaluation()
        self.raw = synthesize_idsf(make_scene((40e-9, 0.0, 1.0)), BENCH)

    def test_processed_capture_is_flagged_and_oversampled(self):
        processed = process_capture(self.raw, BENCH, self.evaluation)
        self.assertTrue(processed.processed)
        self.assertEqual(processed.data.shape, (64, 4 * 256))
        self.assertAlmostEqual(processed.delay_grid_step, BENCH_DELAY_STEP)

    def test_double_processing(self):
        processed = process_capture(self.raw, BENCH, self.evaluation)
        with self.assertRaisesMessage(DataFormatError, "double processing"):
            process_capture(processed, BENCH, self.evaluation)

    def test_config_mismatch(self):
        other = replace(BENCH, num_virtual_antennas=128)
        with self.assertRaisesMessage(DataFormatError, "config mismatch"):
            process_capture(self.raw, other, self.evaluation)

    def test_processing_is_linear(self):
        first = synthesize_idsf(make_scene((40e-9, 30.0, 1.0), (200e-9, 150.0, 0.3j)), BENCH)
        second = synthesize_idsf(
            make_scene((96e-9, 270.0, 0.5), noise_floor=-40.0), BENCH, noise_seed=5
        )
        a, b = 0.7 - 1.3j, -2.1 + 0.4j
        combined = first.replace_data(a * first.data + b * second.data)

        expected = (
            a * process_capture(first, BENCH, self.evaluation).data
            + b * process_capture(second, BENCH, self.evaluation).data
        )
        actual = process_capture(combined, BENCH, self.evaluation).data
        np.testing.assert_allclose(
            actual, expected, rtol=1e-10, atol=1e-10 * np.abs(expected).max()
        )

    def test_back_to_back_capture(self):
        # A zero-delay unit path on an isotropic antenna is the back-to-back setup.
        sounder = replace(BENCH, vuca_radius=1e-4, num_virtual_antennas=4)
        raw = synthesize_idsf(make_scene((0.0, 0.0, 1.0)), sounder)
        evaluation = bench_evaluation(spectral_filter_length=4, spectral_filter_alpha=0.0)
        profile = envelope_and_pdp(process_capture(raw, sounder, evaluation))
        self.assertEqual(int(np.argmax(profile.envelope)), 0)
        self.assertAlmostEqual(10 * math.log10(profile.envelope[0]), 0.0, delta=0.01)

    def test_noise_gain_uses_the_frequency_window(self):
        window = frequency_window(BENCH, self.evaluation)
        self.assertEqual(window.length, 205)
        self.assertGreater(processed_noise_gain(BENCH, self.evaluation), 0.0)


class SpectralLowpassTestCase(SimpleTestCase):
    def test_white_noise_power_reduction(self):
        for antennas, length, reduction in ((1000, 85, 10.7), (1440, 571, 4.0)):
            with self.subTest(antennas=antennas):
                ratios = []
                for seed in range(10):
                    idsf = noise_idsf(antennas, 64, seed)
                    filtered = spectral_lowpass(idsf, length, 0.5)
                    ratios.append(np.mean(np.abs(idsf.data) ** 2) / np.mean(np.abs(filtered.data) ** 2))
                self.assertAlmostEqual(10 * math.log10(np.mean(ratios)), reduction, delta=0.5)

    def test_identity(self):
        idsf = noise_idsf(64, 32, seed=5)
        filtered = spectral_lowpass(idsf, 64, 0.0)
        np.testing.assert_allclose(filtered.data, idsf.data, atol=1e-12)

    def test_physical_modes_pass_undistorted(self):
        raw = synthesize_idsf(make_scene((40e-9, 75.0, 1.0)), BENCH)
        unfiltered = process_capture(raw, BENCH, bench_evaluation(**IDENTITY_FILTER))
        filtered = spectral_lowpass(unfiltered, WIDE_FILTER["spectral_filter_length"], 0.5)
        index = int(round(40e-9 / BENCH_DELAY_STEP))
        before = np.abs(unfiltered.data[:, index]) ** 2
        after = np.abs(filtered.data[:, index]) ** 2
        self.assertLessEqual(np.max(np.abs(10 * np.log10(after / before))), 0.1)


class EnvelopeTestCase(SimpleTestCase):
    def process(self, scene, **filter_overrides):
        evaluation = bench_evaluation(**(filter_overrides or WIDE_FILTER))
        return process_capture(synthesize_idsf(scene, BENCH), BENCH, evaluation)

    def test_isotropic_envelope_equals_minimum(self):
        profile = envelope_and_pdp(self.process(make_scene((40e-9, 45.0, 0.1))))
        peak = int(np.argmax(profile.envelope))
        self.assertEqual(peak, 50)
        self.assertAlmostEqual(
            10 * math.log10(profile.envelope[peak] / profile.pdp_min[peak]), 0.0, delta=0.1
        )
        self.assertAlmostEqual(10 * math.log10(profile.envelope[peak]), -20.0, delta=0.05)

    def test_directive_pointing(self):
        pattern = AntennaPattern(kind="cosine_power", boresight_gain=6.0)
        profile = envelope_and_pdp(
            self.process(make_scene((40e-9, 0.0, 1.0), pattern=pattern), **IDENTITY_FILTER)
        )
        peak = int(np.argmax(profile.envelope))
        self.assertEqual(int(profile.pointing[peak]), 0)
        self.assertEqual(float(profile.pointing_azimuths[peak]), 0.0)

    def test_all_zero_capture(self):
        profile = envelope_and_pdp(self.process(make_scene()))
        self.assertFalse(np.any(profile.envelope))
        self.assertEqual(profile.noise_floor, 0.0)

    def test_rows_for_export(self):
        profile = envelope_and_pdp(self.process(make_scene((40e-9, 45.0, 0.1))))
        rows = list(profile.to_rows())
        self.assertEqual(len(rows), 4 * 256)
        delay_ns, envelope_db, _, pointing = rows[50]
        self.assertAlmostEqual(delay_ns, 40.0)
        self.assertAlmostEqual(envelope_db, -20.0, delta=0.05)


class EstimatePathsTestCase(SimpleTestCase):
    truth = [(40e-9, 30.0, 1.0), (100e-9, 150.0, 10 ** (-5 / 20) * 1j), (180e-9, 258.0, -(10 ** (-10 / 20)))]

    def estimate(self, scene, pattern=None, **overrides):
        evaluation = bench_evaluation(**(overrides or WIDE_FILTER))
        processed = process_capture(synthesize_idsf(scene, BENCH, noise_seed=11), BENCH, evaluation)
        return estimate_paths(processed, evaluation, pattern or scene.rotating_antenna_pattern)

    def test_recovers_three_paths(self):
        path_set = self.estimate(make_scene(*self.truth, noise_floor=-60.0))
        self.assertEqual(len(path_set), 3)
        for path, (delay, azimuth, gain) in zip(path_set, self.truth):
            self.assertLessEqual(abs(path.delay - delay), 0.25e-9)
            self.assertLessEqual(circular_distance(path.azimuth, azimuth), 1.0)
            self.assertAlmostEqual(10 * math.log10(path.power / abs(gain) ** 2), 0.0, delta=1.0)
        self.assertTrue(path_set.metadata["gain_compensated"])
        self.assertFalse(path_set.metadata["noise_limited"])
        self.assertEqual(path_set.metadata["config_ref"], "bench")

    def test_boresight_gain_is_compensated(self):
        pattern = AntennaPattern(kind="cosine_power", boresight_gain=4.0)
        path_set = self.estimate(make_scene((40e-9, 30.0, 1.0), pattern=pattern))
        self.assertEqual(len(path_set), 1)
        self.assertAlmostEqual(10 * math.log10(path_set.paths[0].power), 0.0, delta=0.5)
        self.assertLessEqual(circular_distance(path_set.paths[0].azimuth, 30.0), 1.0)

    def test_noise_only_capture_is_flagged(self):
        path_set = self.estimate(make_scene(noise_floor=-60.0))
        self.assertTrue(path_set.metadata["noise_limited"])

    def test_empty_capture_gives_empty_path_set(self):
        with self.assertLogs("sounding.pipeline", "WARNING"):
            path_set = self.estimate(make_scene())
        self.assertEqual(len(path_set), 0)

    def test_needs_processed_input(self):
        raw = synthesize_idsf(make_scene((40e-9, 0.0, 1.0)), BENCH)
        with self.assertRaises(DataFormatError):
            estimate_paths(raw, bench_evaluation())

    def test_debug_spectrum_sink(self):
        received = []
        evaluation = bench_evaluation(**WIDE_FILTER)
        processed = process_capture(
            synthesize_idsf(make_scene((40e-9, 30.0, 1.0)), BENCH), BENCH, evaluation
        )
        estimate_paths(
            processed,
            evaluation,
            spectrum_sink=lambda delay, grid, spectrum: received.append((delay, len(grid), len(spectrum))),
        )
        self.assertTrue(received)
        self.assertEqual(received[0][1], 7200)
        self.assertEqual(received[0][1], received[0][2])

    def test_bin_sink_marks_cluster_maxima(self):
        received = {}
        evaluation = bench_evaluation(**WIDE_FILTER)
        raw = synthesize_idsf(make_scene(*self.truth, noise_floor=-60.0), BENCH, noise_seed=11)
        processed = process_capture(raw, BENCH, evaluation)
        path_set = estimate_paths(
            processed,
            evaluation,
            bin_sink=lambda bins, selected: received.update(bins=bins, selected=selected),
        )

        envelope = envelope_and_pdp(processed).envelope
        self.assertEqual(
            len(received["bins"]), len(threshold_bins(envelope, evaluation.relative_threshold))
        )
        self.assertEqual(len(received["selected"]), len(path_set))
        powers = {estimate.index: estimate.power for estimate in received["bins"]}
        self.assertEqual(
            sorted(powers[index] for index in received["selected"]),
            sorted(path.power for path in path_set),
        )


class DelayGridCheckTestCase(SimpleTestCase):
    def test_preset_grid_fits_its_own_delay_step(self):
        self.assertTrue(check_delay_grid(EvalConfig.for_sounder(DESK), 0.8e-9))

    def test_grid_of_another_sounder_warns(self):
        with self.assertLogs("sounding.pipeline", "WARNING") as cm:
            self.assertFalse(check_delay_grid(EvalConfig.for_sounder(DESK), 0.1e-9))
        self.assertIn("20.0 delay steps", cm.output[0])

    def test_single_bin_profile_is_accepted(self):
        self.assertTrue(check_delay_grid(EvalConfig.for_sounder(DESK), 0.0))


class DeskRecoveryTestCase(SimpleTestCase):
    """Seeded random scenes on the desk preset, synthesized and estimated end to end."""

    scenes = 20
    min_delay_separation = 2.0 / DESK.bandwidth
    min_azimuth_separation = 10.0

    def random_scene(self, rng):
        count = int(rng.integers(1, 11))
        delays, azimuths = [], []
        while len(delays) < count:
            delay = float(rng.uniform(20e-9, 25e-6))
            azimuth = float(rng.uniform(0.0, 360.0))
            if all(abs(delay - other) >= self.min_delay_separation for other in delays) and all(
                circular_distance(azimuth, other) >= self.min_azimuth_separation
                for other in azimuths
            ):
                delays.append(delay)
                azimuths.append(azimuth)
        # Strongest path at -60 dB, the rest within 20 dB of it; floor at -130 dB.
        levels = rng.uniform(-20.0, 0.0, count)
        levels += -60.0 - levels.max()
        phases = rng.uniform(0.0, 2.0 * math.pi, count)
        gains = 10.0 ** (levels / 20.0) * np.exp(1j * phases)
        return make_scene(*zip(delays, azimuths, gains), noise_floor=-130.0)

    def recovered(self, scene, path_set):
        if len(path_set) != len(scene.paths):
            return False
        return all(
            abs(path.delay - truth.delay) <= 0.25e-9
            and circular_distance(path.azimuth, truth.azimuth) <= 1.0
            and abs(10.0 * math.log10(path.power / truth.power)) <= 1.0
            for path, truth in zip(path_set, scene.paths)
        )

    def test_random_scenes(self):
        rng = np.random.default_rng(2024)
        evaluation = EvalConfig.for_sounder(DESK)
        recovered = 0
        for index in range(self.scenes):
            scene = self.random_scene(rng)
            raw = synthesize_idsf(scene, DESK, noise_seed=index, evaluation=evaluation)
            processed = process_capture(raw, DESK, evaluation)
            del raw
            recovered += self.recovered(scene, estimate_paths(processed, evaluation))
        self.assertGreaterEqual(recovered, 19)
