"""Per-delay-bin azimuth estimation with beamspace MUSIC on the virtual circular array."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import special

from .exceptions import DomainError, NumericError
from .models import ISOTROPIC, k_min, normalize_azimuth, power_to_db, wavelength
from .waveform import parabolic_peak


logger = logging.getLogger(__name__)

# Modes whose excitation falls below this fraction of the strongest are dropped.
MODE_EXCLUSION_RATIO = 1e-3

PSEUDO_SPECTRUM_FLOOR = 1e-12

# Delay bins evaluated against the manifold per matrix product.
BIN_BATCH = 256


@dataclass(frozen=True)
class DelayBinEstimate:
    index: int
    delay: float
    azimuth: float
    power: float
    music_peak_quality: float

    def __post_init__(self):
        if not self.power > 0:
            raise DomainError("delay bin power must be positive")
        object.__setattr__(self, "azimuth", float(normalize_azimuth(self.azimuth)))


@dataclass(frozen=True, eq=False)
class ModeVector:
    """Phase-mode compensated snapshot; ``excluded`` lists the dropped mode numbers."""

    modes: np.ndarray
    values: np.ndarray
    excluded: tuple = ()
    partial_aperture: bool = False


@dataclass(frozen=True, eq=False)
class MusicEstimate:
    azimuth: float
    peak_quality: float
    grid: np.ndarray = None
    spectrum: np.ndarray = None


def threshold_bins(envelope, relative_threshold):
    """Indices whose envelope lies within ``relative_threshold`` dB of the maximum."""

    if relative_threshold < 0:
        raise DomainError("relative threshold must be non-negative")
    envelope = np.asarray(envelope, dtype=float)
    if envelope.size == 0:
        return np.array([], dtype=int)
    peak = envelope.max()
    if not peak > 0:
        return np.array([], dtype=int)
    return np.flatnonzero(envelope >= peak * 10.0 ** (-relative_threshold / 10.0))


@functools.lru_cache(maxsize=16)
def phase_mode_excitation(array_phase, max_mode, pattern=ISOTROPIC):
    """Fourier coefficients e_m of sqrt(G(theta)) * exp(j*beta*cos(theta)), |m| <= max_mode.

    For an isotropic element these are j**m * J_m(beta); other patterns are
    expanded numerically on a dense angular grid.
    """

    modes = np.arange(-max_mode, max_mode + 1)
    amplitude = math.sqrt(pattern.boresight_linear)
    if pattern.is_isotropic:
        excitation = amplitude * (1j ** modes) * special.jv(modes, array_phase)
    else:
        size = max(4096, 1 << int(math.ceil(math.log2(16 * (array_phase + max_mode + 1)))))
        theta = 2 * np.pi * np.arange(size) / size
        element = pattern.amplitude_gain(np.rad2deg(theta)) * np.exp(
            1j * array_phase * np.cos(theta)
        )
        excitation = (sp_fft.fft(element) / size)[modes % size]
    excitation.flags.writeable = False
    return excitation


@dataclass(frozen=True, eq=False)
class _BeamspaceOperator:
    matrix: np.ndarray
    modes: np.ndarray
    excitation: np.ndarray
    excluded: tuple
    partial_aperture: bool

    def apply(self, columns):
        """Compensated mode vectors for K x B columns, returned as B x modes."""

        return (self.matrix @ columns).T / self.excitation


def _beamspace_operator(antenna_azimuths, carrier_frequency, vuca_radius, pattern, arc_coverage):
    azimuths = np.asarray(antenna_azimuths, dtype=float)
    num_antennas = len(azimuths)
    full_circle = arc_coverage >= 360.0
    equivalent = num_antennas if full_circle else int(round(num_antennas * 360.0 / arc_coverage))
    required = k_min(carrier_frequency, vuca_radius)
    if equivalent < required:
        raise DomainError(
            f"spatial aliasing: K={equivalent} is below K_min={required} for this array"
        )

    array_phase = 2 * math.pi * vuca_radius / wavelength(carrier_frequency)
    max_mode = int(math.floor(array_phase))
    excitation = phase_mode_excitation(array_phase, max_mode, pattern or ISOTROPIC)
    modes = np.arange(-max_mode, max_mode + 1)
    keep = np.abs(excitation) >= MODE_EXCLUSION_RATIO * np.abs(excitation).max()

    # A partial arc is the full circle with the unmeasured antennas set to zero.
    matrix = np.exp(1j * np.outer(modes[keep], np.deg2rad(azimuths))) / equivalent
    return _BeamspaceOperator(
        matrix=matrix,
        modes=modes[keep],
        excitation=excitation[keep],
        excluded=tuple(int(m) for m in modes[~keep]),
        partial_aperture=not full_circle,
    )


def beamspace_transform(
    column,
    antenna_azimuths,
    carrier_frequency,
    vuca_radius,
    pattern=None,
    arc_coverage=360.0,
):
    """Phase-mode vector of one IDSF column with the element excitation divided out."""

    operator = _beamspace_operator(
        antenna_azimuths, carrier_frequency, vuca_radius, pattern, arc_coverage
    )
    values = operator.apply(np.asarray(column, dtype=complex)[:, None])[0]
    return ModeVector(
        modes=operator.modes,
        values=values,
        excluded=operator.excluded,
        partial_aperture=operator.partial_aperture,
    )


@functools.lru_cache(maxsize=8)
def azimuth_manifold(modes, resolution):
    """Grid in degrees and unit-norm steering vectors exp(j m phi), modes x grid."""

    count = int(round(360.0 / resolution))
    grid = np.arange(count) * (360.0 / count)
    steering = np.exp(1j * np.outer(np.asarray(modes), np.deg2rad(grid)))
    steering /= math.sqrt(len(modes))
    grid.flags.writeable = False
    steering.flags.writeable = False
    return grid, steering


def _music_batch(values, modes, resolution):
    norms = np.linalg.norm(values, axis=1)
    if np.any(~np.isfinite(norms)) or np.any(norms == 0):
        raise NumericError("degenerate mode vector: MUSIC needs a non-zero snapshot")
    snapshots = values / norms[:, None]
    grid, steering = azimuth_manifold(tuple(int(m) for m in modes), resolution)

    # Order one: the noise-subspace projection of b is 1 - |u^H b|^2.
    correlation = np.abs(snapshots.conj() @ steering) ** 2
    spectrum = 1.0 / np.maximum(1.0 - correlation, PSEUDO_SPECTRUM_FLOOR)
    peaks = np.argmax(correlation, axis=1)
    step = grid[1] - grid[0] if len(grid) > 1 else 360.0

    azimuths = np.empty(len(values))
    qualities = np.empty(len(values))
    for row, peak in enumerate(peaks):
        offset, _ = parabolic_peak(correlation[row], int(peak), circular=True)
        azimuths[row] = normalize_azimuth(grid[peak] + offset * step)
        qualities[row] = spectrum[row, peak] / np.median(spectrum[row])
    return azimuths, qualities, grid, spectrum


def music_azimuth(mode_vector, grid_resolution=0.05, keep_spectrum=False):
    """Order-one beamspace MUSIC on a single compensated snapshot."""

    if grid_resolution <= 0:
        raise DomainError("MUSIC grid resolution must be positive")
    values = np.asarray(mode_vector.values, dtype=complex)[None, :]
    azimuths, qualities, grid, spectrum = _music_batch(values, mode_vector.modes, grid_resolution)
    if keep_spectrum:
        return MusicEstimate(float(azimuths[0]), float(qualities[0]), grid, spectrum[0])
    return MusicEstimate(float(azimuths[0]), float(qualities[0]))


def estimate_bins(idsf, profile, evaluation, pattern=None, spectrum_sink=None):
    """Azimuth and power for every above-threshold delay bin of a processed IDSF.

    Returns the estimates and whether the aperture was a partial arc.
    """

    indices = threshold_bins(profile.envelope, evaluation.relative_threshold)
    operator = _beamspace_operator(
        idsf.antenna_azimuths,
        idsf.carrier_frequency,
        idsf.vuca_radius,
        pattern,
        idsf.arc_coverage,
    )
    if operator.partial_aperture:
        logger.warning(
            "arc of %.1f deg: azimuth estimates are best-effort", idsf.arc_coverage
        )

    estimates = []
    for start in range(0, len(indices), BIN_BATCH):
        chunk = indices[start:start + BIN_BATCH]
        values = operator.apply(idsf.data[:, chunk])
        azimuths, qualities, grid, spectrum = _music_batch(
            values, operator.modes, evaluation.music_grid_resolution
        )
        for row, index in enumerate(chunk):
            delay = float(profile.delays[index])
            estimates.append(
                DelayBinEstimate(
                    index=int(index),
                    delay=delay,
                    azimuth=azimuths[row],
                    power=float(profile.envelope[index]),
                    music_peak_quality=float(qualities[row]),
                )
            )
            if spectrum_sink is not None:
                spectrum_sink(delay, grid, power_to_db(spectrum[row]))
    logger.info(
        "estimated %d delay bins (%d modes, %d excluded)",
        len(estimates),
        len(operator.modes),
        len(operator.excluded),
    )
    return estimates, operator.partial_aperture
