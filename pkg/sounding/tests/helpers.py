import csv
import math
import tempfile
from pathlib import Path

import numpy as np

from sounding.models import ISOTROPIC, EvalConfig, GroundTruthPath, Scene, SounderConfig
from sounding.synth import Idsf


# Small sounder for fast tests: beta = 2*pi*R/lambda ~ 5, K_min = 11.
BENCH = SounderConfig(
    name="bench",
    carrier_frequency=4.8e9,
    bandwidth=250e6,
    rx_sampling_rate=312.5e6,
    sequence_length=256,
    num_virtual_antennas=64,
    sequence_duration=256 / 312.5e6,
    vuca_radius=0.05,
)

# Oversampled delay step of BENCH with the default oversampling of 4.
BENCH_DELAY_STEP = 0.8e-9

# Spectral filter whose flat region holds every physical mode of BENCH.
WIDE_FILTER = {"spectral_filter_length": 32}

IDENTITY_FILTER = {"spectral_filter_length": 64, "spectral_filter_alpha": 0.0}


def bench_evaluation(**overrides):
    return EvalConfig.for_sounder(BENCH, **overrides)


def make_scene(*paths, noise_floor=-math.inf, pattern=ISOTROPIC, distance=0.0):
    """Scene from (delay, azimuth, gain) triples."""

    return Scene(
        paths=tuple(GroundTruthPath(*path) for path in paths),
        tx_rx_distance=distance,
        noise_floor=noise_floor,
        rotating_antenna_pattern=pattern,
    )


def noise_idsf(num_antennas, num_delays, seed, processed=True):
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((2, num_antennas, num_delays))
    return Idsf(
        data=(draws[0] + 1j * draws[1]) / math.sqrt(2.0),
        delay_grid_start=0.0,
        delay_grid_step=1e-9,
        antenna_azimuths=360.0 * np.arange(num_antennas) / num_antennas,
        carrier_frequency=BENCH.carrier_frequency,
        vuca_radius=BENCH.vuca_radius,
        processed=processed,
    )


def circular_distance(a, b):
    difference = abs(a - b) % 360.0
    return min(difference, 360.0 - difference)


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TemporaryDirectoryMixin:
    """Gives each test a scratch directory as ``self.tmp``."""

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()
