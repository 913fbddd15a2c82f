"""Domain types, physical constants and sounder presets.

The types here are plain immutable dataclasses rather than ORM tables: a
capture, its configuration and its estimates are exchanged as files, never
stored in a database.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from django.utils.translation import gettext_lazy as _

from .exceptions import DomainError


SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

SCHEMA_VERSION = "vuca-1"

PRESET_CHOICES = (
    ("fr3_14ghz", _("FR3 band, 14 GHz")),
    ("subthz_160ghz", _("D-band, 160 GHz")),
    ("desk", _("Desk scale, 14 GHz geometry")),
)

PATTERN_CHOICES = (
    ("isotropic", _("Isotropic")),
    ("cosine_power", _("Cosine power")),
)

MODE_CHOICES = (
    ("ideal", _("Ideal per-antenna responses")),
    ("full_waveform", _("Full waveform with continuous rotation")),
)


def _require(condition, message):
    if not condition:
        raise DomainError(message)


def wavelength(carrier_frequency):
    _require(carrier_frequency > 0, "carrier frequency must be positive")
    return SPEED_OF_LIGHT / carrier_frequency


def k_min(carrier_frequency, vuca_radius):
    """Minimum number of virtual antennas, ceil(4*pi*R_A / lambda_0)."""

    _require(
        carrier_frequency > 0 and vuca_radius > 0,
        "carrier frequency and VUCA radius must be positive",
    )
    ratio = 4.0 * math.pi * vuca_radius / wavelength(carrier_frequency)
    # Absorb rounding so that an exact integer ratio is not pushed to the next count.
    return max(1, math.ceil(ratio * (1.0 - 1e-12)))


def max_doppler_delay_shift(bandwidth):
    """Largest delay shift caused by continuous rotation at K = K_min, 1/(2B)."""

    _require(bandwidth > 0, "bandwidth must be positive")
    return 1.0 / (2.0 * bandwidth)


def power_to_db(power):
    """10*log10 of a linear power; zero maps to -inf."""

    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def normalize_azimuth(azimuth):
    """Map degrees onto [0, 360)."""

    wrapped = np.mod(azimuth, 360.0)
    # np.mod can return 360.0 for tiny negative inputs.
    return np.where(wrapped >= 360.0, 0.0, wrapped)


@dataclass(frozen=True)
class AntennaPattern:
    """Power pattern of the rotating antenna, boresight pointing radially outward.

    ``cosine_power`` follows G(theta) = G0 * max(cos(theta), 0)**q with a
    back-lobe floor ``front_to_back`` dB below boresight. When ``exponent``
    is omitted it is derived from the boresight gain as q = G0 - 1.
    """

    kind: str = "isotropic"
    boresight_gain: float = 0.0
    exponent: float | None = None
    front_to_back: float = 30.0

    def __post_init__(self):
        _require(
            self.kind in dict(PATTERN_CHOICES),
            f"unknown antenna pattern kind {self.kind!r}",
        )
        _require(math.isfinite(self.boresight_gain), "boresight gain must be finite")
        _require(self.front_to_back > 0, "front-to-back ratio must be positive")
        if self.kind == "cosine_power":
            if self.exponent is None:
                object.__setattr__(
                    self, "exponent", max(self.boresight_linear - 1.0, 0.0)
                )
            _require(self.exponent >= 0, "pattern exponent must be non-negative")

    @property
    def boresight_linear(self):
        return 10.0 ** (self.boresight_gain / 10.0)

    @property
    def is_isotropic(self):
        return self.kind == "isotropic" or (
            self.kind == "cosine_power" and self.exponent == 0
        )

    def power_gain(self, offset_deg):
        """Linear power gain at ``offset_deg`` away from boresight."""

        offset = np.deg2rad(np.asarray(offset_deg, dtype=float))
        if self.kind == "isotropic":
            return np.full(offset.shape, self.boresight_linear)
        shape = np.clip(np.cos(offset), 0.0, None) ** self.exponent
        floor = 10.0 ** (-self.front_to_back / 10.0)
        return self.boresight_linear * np.maximum(shape, floor)

    def amplitude_gain(self, offset_deg):
        return np.sqrt(self.power_gain(offset_deg))


ISOTROPIC = AntennaPattern()


@dataclass(frozen=True)
class GroundTruthPath:
    delay: float
    azimuth: float
    complex_gain: complex

    def __post_init__(self):
        _require(self.delay >= 0, "path delay must be non-negative")
        _require(abs(self.complex_gain) > 0, "path gain must be non-zero")
        object.__setattr__(self, "azimuth", float(normalize_azimuth(self.azimuth)))
        object.__setattr__(self, "complex_gain", complex(self.complex_gain))

    @property
    def power(self):
        return abs(self.complex_gain) ** 2


@dataclass(frozen=True)
class Scene:
    """Ground-truth discrete multipath channel at one test point.

    ``noise_floor`` is given on the processed channel-gain scale; ``-inf``
    means a noise-free capture.
    """

    paths: tuple = ()
    tx_rx_distance: float = 0.0
    noise_floor: float = -math.inf
    rotating_antenna_pattern: AntennaPattern = ISOTROPIC

    def __post_init__(self):
        _require(self.tx_rx_distance >= 0, "Tx-Rx distance must be non-negative")
        _require(
            not math.isnan(self.noise_floor) and self.noise_floor < 0,
            "noise floor must be below 0 dB",
        )
        ordered = tuple(sorted(self.paths, key=lambda path: path.delay))
        los_delay = self.tx_rx_distance / SPEED_OF_LIGHT
        for path in ordered:
            _require(
                path.delay >= los_delay * (1.0 - 1e-9),
                f"path delay {path.delay:.6g} s precedes the line-of-sight delay "
                f"{los_delay:.6g} s",
            )
        object.__setattr__(self, "paths", ordered)

    @property
    def delays(self):
        return np.array([path.delay for path in self.paths])

    @property
    def azimuths(self):
        return np.array([path.azimuth for path in self.paths])

    @property
    def gains(self):
        return np.array([path.complex_gain for path in self.paths], dtype=complex)


@dataclass(frozen=True)
class SounderConfig:
    """Channel sounder parameters (carrier, waveform, virtual array)."""

    carrier_frequency: float
    bandwidth: float
    rx_sampling_rate: float
    sequence_length: int
    num_virtual_antennas: int
    sequence_duration: float
    vuca_radius: float
    tx_power: float = 0.0
    tx_antenna_gain: float = 0.0
    rx_antenna_gain: float = 0.0
    arc_coverage: float = 360.0
    name: str = "custom"

    def __post_init__(self):
        _require(self.carrier_frequency > 0, "carrier frequency must be positive")
        _require(
            0 < self.bandwidth <= self.rx_sampling_rate,
            "bandwidth must satisfy 0 < B <= fS",
        )
        _require(self.sequence_length >= 2, "sequence length must be at least 2")
        _require(self.num_virtual_antennas >= 1, "at least one virtual antenna is needed")
        _require(self.sequence_duration > 0, "sequence duration must be positive")
        _require(self.vuca_radius > 0, "VUCA radius must be positive")
        _require(
            0 < self.arc_coverage <= 360,
            "arc coverage must lie in (0, 360] degrees",
        )
        object.__setattr__(self, "sequence_length", int(self.sequence_length))
        object.__setattr__(self, "num_virtual_antennas", int(self.num_virtual_antennas))

    @property
    def wavelength(self):
        return wavelength(self.carrier_frequency)

    @property
    def k_min(self):
        return k_min(self.carrier_frequency, self.vuca_radius)

    @property
    def array_phase(self):
        """2*pi*R_A/lambda_0, the phase excursion of the rotating antenna."""

        return 2.0 * math.pi * self.vuca_radius / self.wavelength

    @property
    def measurement_time(self):
        return self.num_virtual_antennas * self.sequence_duration

    @property
    def oversampling_gain_db(self):
        return 10.0 * math.log10(self.rx_sampling_rate / self.bandwidth)

    @property
    def correlation_gain_db(self):
        return 10.0 * math.log10(self.bandwidth * self.sequence_duration)

    @property
    def in_band_bins(self):
        return int(round(self.sequence_length * self.bandwidth / self.rx_sampling_rate))

    @property
    def max_delay(self):
        return self.sequence_length / self.rx_sampling_rate

    @property
    def antenna_azimuths(self):
        k = np.arange(self.num_virtual_antennas)
        return self.arc_coverage * k / self.num_virtual_antennas


@dataclass(frozen=True)
class EvalConfig:
    """Post-processing and estimation parameters."""

    spectral_filter_length: int
    delay_oversampling: int = 4
    freq_window_psl: float = 70.0
    freq_window_alpha: float = 1.0
    spectral_filter_alpha: float = 0.5
    relative_threshold: float = 25.0
    delay_cluster_grid: float = 0.25e-9
    angular_cluster_grid: float = 6.0
    music_grid_resolution: float = 0.05

    def __post_init__(self):
        _require(self.delay_oversampling >= 1, "delay oversampling must be at least 1")
        _require(self.freq_window_psl > 0, "window PSL must be positive")
        _require(self.freq_window_alpha >= 0, "window slope taper must be non-negative")
        _require(self.spectral_filter_length >= 1, "spectral filter length must be positive")
        _require(
            0 <= self.spectral_filter_alpha <= 1,
            "spectral filter taper must lie in [0, 1]",
        )
        _require(self.relative_threshold > 0, "relative threshold must be positive")
        _require(
            self.delay_cluster_grid > 0
            and self.angular_cluster_grid > 0
            and self.music_grid_resolution > 0,
            "clustering and MUSIC grids must be positive",
        )
        object.__setattr__(self, "delay_oversampling", int(self.delay_oversampling))
        object.__setattr__(self, "spectral_filter_length", int(self.spectral_filter_length))

    @classmethod
    def for_sounder(cls, sounder, **overrides):
        """Evaluation parameters used with every preset, derived for ``sounder``."""

        values = {
            "spectral_filter_length": sounder.k_min,
            "delay_cluster_grid": max_doppler_delay_shift(sounder.bandwidth),
        }
        values.update(overrides)
        return cls(**values)

    def validate_against(self, sounder):
        _require(
            self.spectral_filter_length <= sounder.num_virtual_antennas,
            f"spectral filter length {self.spectral_filter_length} exceeds "
            f"K = {sounder.num_virtual_antennas}",
        )
        return self


FR3_14GHZ = SounderConfig(
    name="fr3_14ghz",
    carrier_frequency=14e9,
    bandwidth=2e9,
    rx_sampling_rate=2.5e9,
    sequence_length=1_000_000,
    num_virtual_antennas=1000,
    sequence_duration=500e-6,
    vuca_radius=0.144,
    tx_power=10.0,
    tx_antenna_gain=4.0,
    rx_antenna_gain=4.0,
)

SUBTHZ_160GHZ = replace(
    FR3_14GHZ,
    name="subthz_160ghz",
    carrier_frequency=160e9,
    num_virtual_antennas=1440,
    vuca_radius=0.085,
    tx_power=1.0,
    tx_antenna_gain=7.0,
    rx_antenna_gain=9.0,
)

# Reduced M, B and K keep a full capture around a few hundred megabytes.
DESK = replace(
    FR3_14GHZ,
    name="desk",
    bandwidth=250e6,
    rx_sampling_rate=312.5e6,
    sequence_length=8192,
    num_virtual_antennas=4 * FR3_14GHZ.k_min,
    sequence_duration=8192 / 312.5e6,
)

PRESETS = {
    "fr3_14ghz": FR3_14GHZ,
    "subthz_160ghz": SUBTHZ_160GHZ,
    "desk": DESK,
}


def preset(name):
    """Return the (SounderConfig, EvalConfig) pair registered under ``name``."""

    try:
        sounder = PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}"
        ) from None
    return sounder, EvalConfig.for_sounder(sounder)


@dataclass(frozen=True)
class TestPoint:
    name: str
    distance: float
    scene: Scene


@dataclass(frozen=True)
class Scenario:
    """A batch run: one sounder setup and its test points."""

    name: str
    sounder: SounderConfig
    evaluation: EvalConfig
    test_points: tuple = ()
    mode: str = "ideal"
    seed: int = 0
