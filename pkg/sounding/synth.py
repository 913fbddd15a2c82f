"""Synthetic VUCA captures: the software stand-in for the rotary platform."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sp_fft

from .exceptions import DataFormatError, DomainError
from .models import MODE_CHOICES, EvalConfig
from .pipeline import processed_noise_gain
from .waveform import fzc_generate


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Idsf:
    """Input delay spread function: one CIR per virtual antenna (rows) over delay."""

    data: np.ndarray
    delay_grid_start: float
    delay_grid_step: float
    antenna_azimuths: np.ndarray
    carrier_frequency: float
    vuca_radius: float
    arc_coverage: float = 360.0
    processed: bool = False
    config_ref: str = ""

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise DataFormatError(f"IDSF must be a K x N matrix, got shape {data.shape}")
        azimuths = np.asarray(self.antenna_azimuths, dtype=float)
        num_antennas = data.shape[0]
        expected = self.arc_coverage * np.arange(num_antennas) / num_antennas
        if azimuths.shape != expected.shape or not np.allclose(azimuths, expected, atol=1e-9):
            raise DataFormatError("antenna azimuths must be uniform over the arc, starting at 0")
        if self.delay_grid_step <= 0:
            raise DataFormatError("delay grid step must be positive")
        if not np.all(np.isfinite(data)):
            raise DataFormatError("IDSF contains non-finite entries")

        data = data.view()
        data.flags.writeable = False
        azimuths = azimuths.view()
        azimuths.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "antenna_azimuths", azimuths)

    @property
    def num_antennas(self):
        return self.data.shape[0]

    @property
    def num_delays(self):
        return self.data.shape[1]

    @property
    def delays(self):
        return self.delay_grid_start + self.delay_grid_step * np.arange(self.num_delays)

    def replace_data(self, data, **changes):
        return replace(self, data=data, **changes)

    def matches(self, sounder):
        """True when the geometry recorded with the capture is that of ``sounder``."""

        return (
            math.isclose(self.carrier_frequency, sounder.carrier_frequency, rel_tol=1e-9)
            and math.isclose(self.vuca_radius, sounder.vuca_radius, rel_tol=1e-9)
            and math.isclose(self.arc_coverage, sounder.arc_coverage, rel_tol=1e-9)
            and self.num_antennas == sounder.num_virtual_antennas
        )


def _path_arrays(scene):
    return (
        scene.delays,
        np.deg2rad(scene.azimuths),
        scene.gains,
    )


def _check_aliasing(scene, sounder):
    if scene.paths and scene.delays.max() >= sounder.max_delay:
        raise DomainError(
            f"path delay {scene.delays.max():.6g} s aliases; the sequence period is "
            f"{sounder.max_delay:.6g} s"
        )


def _delay_responses(delays, frequencies):
    """exp(-j 2 pi f tau) for every path (rows) and baseband frequency (columns)."""

    return np.exp(-2j * np.pi * np.outer(delays, frequencies))


def _ideal_rows(scene, sounder, reference, workers):
    delays, azimuths, gains = _path_arrays(scene)
    psi = np.deg2rad(sounder.antenna_azimuths)
    offset = azimuths[None, :] - psi[:, None]
    pattern = scene.rotating_antenna_pattern
    weights = (
        gains[None, :]
        * pattern.amplitude_gain(np.rad2deg(offset))
        * np.exp(1j * sounder.array_phase * np.cos(offset))
    )
    frequencies = sp_fft.fftfreq(sounder.sequence_length, d=1.0 / sounder.rx_sampling_rate)
    response = weights @ _delay_responses(delays, frequencies)
    response *= reference.spectrum
    return sp_fft.ifft(response, axis=1, workers=workers, overwrite_x=True)


def _full_waveform_rows(scene, sounder, reference, workers, rotating):
    delays, azimuths, gains = _path_arrays(scene)
    length = sounder.sequence_length
    psi = np.deg2rad(sounder.antenna_azimuths)
    frequencies = sp_fft.fftfreq(length, d=1.0 / sounder.rx_sampling_rate)
    delayed = sp_fft.ifft(
        reference.spectrum[None, :] * _delay_responses(delays, frequencies),
        axis=1,
        workers=workers,
    )

    # Azimuth is linear in time and equals psi_k at the middle of period k.
    step = np.deg2rad(sounder.arc_coverage) / sounder.num_virtual_antennas
    sweep = step * (np.arange(length) / length - 0.5) if rotating else np.zeros(length)
    trajectory = psi[:, None] + sweep[None, :]

    pattern = scene.rotating_antenna_pattern
    rows = np.zeros((sounder.num_virtual_antennas, length), dtype=complex)
    for delay_row, azimuth, gain in zip(delayed, azimuths, gains):
        amplitude = gain * pattern.amplitude_gain(np.rad2deg(azimuth - psi))
        phase = np.exp(1j * sounder.array_phase * np.cos(azimuth - trajectory))
        rows += amplitude[:, None] * phase * delay_row[None, :]
    return rows


def synthesize_idsf(
    scene,
    sounder,
    mode="ideal",
    noise_seed=0,
    evaluation=None,
    rotating=True,
    workers=None,
):
    """Raw capture of ``scene`` as seen by the rotating antenna.

    ``ideal`` applies every virtual antenna's frequency response to the
    sounding sequence. ``full_waveform`` builds the received time signal with
    the antenna moving during each period (``rotating=False`` freezes it at
    the period midpoint). Noise follows ``scene.noise_floor``.
    """

    if mode not in dict(MODE_CHOICES):
        raise DomainError(f"unknown synthesis mode {mode!r}")
    _check_aliasing(scene, sounder)

    reference = fzc_generate(sounder.sequence_length, 1)
    if not scene.paths:
        data = np.zeros((sounder.num_virtual_antennas, sounder.sequence_length), dtype=complex)
    elif mode == "ideal":
        data = _ideal_rows(scene, sounder, reference, workers)
    else:
        data = _full_waveform_rows(scene, sounder, reference, workers, rotating)

    idsf = Idsf(
        data=data,
        delay_grid_start=0.0,
        delay_grid_step=1.0 / sounder.rx_sampling_rate,
        antenna_azimuths=sounder.antenna_azimuths,
        carrier_frequency=sounder.carrier_frequency,
        vuca_radius=sounder.vuca_radius,
        arc_coverage=sounder.arc_coverage,
        config_ref=sounder.name,
    )
    logger.info(
        "synthesized %s capture: K=%d N_delay=%d paths=%d",
        mode,
        idsf.num_antennas,
        idsf.num_delays,
        len(scene.paths),
    )
    if math.isfinite(scene.noise_floor):
        idsf = inject_noise(idsf, scene.noise_floor, noise_seed, sounder, evaluation)
    return idsf


def inject_noise(idsf, target_noise_floor, seed, sounder, evaluation=None):
    """Add white Gaussian noise landing the processed envelope floor at the target.

    Every row draws from its own generator seeded with (seed, k), so rows can
    be produced independently and re-runs are bit-identical.
    """

    if target_noise_floor is None or target_noise_floor == -math.inf:
        return idsf
    if not target_noise_floor < 0:
        raise DomainError("target noise floor must be below 0 dB")
    if seed < 0:
        raise DomainError("noise seed must be non-negative")
    if idsf.processed:
        raise DataFormatError("noise is added to raw captures only")

    evaluation = evaluation or EvalConfig.for_sounder(sounder)
    variance = 10.0 ** (target_noise_floor / 10.0) / processed_noise_gain(sounder, evaluation)
    scale = math.sqrt(variance / 2.0)

    noise = np.empty(idsf.data.shape, dtype=complex)
    for k in range(idsf.num_antennas):
        rng = np.random.default_rng([int(seed), k])
        draws = rng.standard_normal((2, idsf.num_delays))
        noise[k] = scale * (draws[0] + 1j * draws[1])
    logger.debug("noise floor %.1f dB, per-sample variance %.3e", target_noise_floor, variance)
    return idsf.replace_data(idsf.data + noise)
