"""Post-processing chain from a raw capture to the processed IDSF and path estimates."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .cluster import cluster_paths, cluster_runs, compensate_antenna_gain, strongest_bin
from .doa import estimate_bins
from .exceptions import DataFormatError
from .models import ISOTROPIC, power_to_db
from .waveform import (
    correlate_frequency_domain,
    design_ultraspherical,
    fzc_generate,
    spectral_passband,
)


logger = logging.getLogger(__name__)

# Fixed generator seed and column count for the envelope noise calibration.
CALIBRATION_SEED = 0x5EED
CALIBRATION_COLUMNS = 512

# Every preset clusters on 2.5 processed delay steps.
MAX_CLUSTER_GRID_STEPS = 4.0


def frequency_window(sounder, evaluation):
    return design_ultraspherical(
        sounder.in_band_bins, evaluation.freq_window_psl, evaluation.freq_window_alpha
    )


@functools.lru_cache(maxsize=16)
def envelope_noise_factor(num_antennas, length, alpha):
    """Median over delay of max_k |y_k|^2 for unit white noise after the spectral filter."""

    passband = spectral_passband(num_antennas, length, alpha)
    rng = np.random.default_rng(CALIBRATION_SEED)
    draws = rng.standard_normal((2, num_antennas, CALIBRATION_COLUMNS))
    noise = (draws[0] + 1j * draws[1]) / math.sqrt(2.0)
    filtered = sp_fft.ifft(sp_fft.fft(noise, axis=0) * passband[:, None], axis=0)
    return float(np.median(np.max(np.abs(filtered) ** 2, axis=0)))


def processed_noise_gain(sounder, evaluation):
    """Ratio of the processed envelope floor to the raw per-sample noise variance."""

    window = frequency_window(sounder, evaluation)
    return window.noise_gain * envelope_noise_factor(
        sounder.num_virtual_antennas,
        evaluation.spectral_filter_length,
        evaluation.spectral_filter_alpha,
    )


def process_capture(raw, sounder, evaluation, calibration=None, workers=None):
    """Correlate every row with the sounding sequence, then low-pass across rows."""

    if raw.processed:
        raise DataFormatError("double processing: the IDSF is already processed")
    if (
        not raw.matches(sounder)
        or raw.num_delays != sounder.sequence_length
        or not math.isclose(raw.delay_grid_step, 1.0 / sounder.rx_sampling_rate, rel_tol=1e-9)
    ):
        raise DataFormatError(
            f"config mismatch: capture K={raw.num_antennas} N={raw.num_delays} "
            f"f0={raw.carrier_frequency:.6g} Hz does not fit sounder {sounder.name!r}"
        )
    evaluation.validate_against(sounder)

    reference = fzc_generate(sounder.sequence_length, 1)
    cir = correlate_frequency_domain(
        raw.data,
        reference,
        sounder.rx_sampling_rate,
        sounder.bandwidth,
        frequency_window(sounder, evaluation),
        oversampling=evaluation.delay_oversampling,
        calibration=calibration,
        workers=workers,
    )
    correlated = raw.replace_data(
        cir,
        delay_grid_step=raw.delay_grid_step / evaluation.delay_oversampling,
        processed=True,
    )
    processed = spectral_lowpass(
        correlated,
        evaluation.spectral_filter_length,
        evaluation.spectral_filter_alpha,
        workers=workers,
    )
    logger.info(
        "processed capture: K=%d N_delay=%d step=%.4g ns",
        processed.num_antennas,
        processed.num_delays,
        processed.delay_grid_step * 1e9,
    )
    return processed


def spectral_lowpass(idsf, length, alpha, workers=None):
    """Tukey low-pass over the spatial-frequency (mode) axis of every delay column."""

    passband = spectral_passband(idsf.num_antennas, length, alpha)
    spectrum = sp_fft.fft(idsf.data, axis=0, workers=workers)
    spectrum *= passband[:, None]
    return idsf.replace_data(sp_fft.ifft(spectrum, axis=0, workers=workers, overwrite_x=True))


@dataclass(frozen=True, eq=False)
class PowerProfile:
    delays: np.ndarray
    envelope: np.ndarray
    pdp_min: np.ndarray
    pointing: np.ndarray
    antenna_azimuths: np.ndarray

    @property
    def delay_step(self):
        return float(self.delays[1] - self.delays[0]) if len(self.delays) > 1 else 0.0

    @property
    def noise_floor(self):
        """Median envelope, the floor estimate used for reporting."""

        return float(np.median(self.envelope)) if len(self.envelope) else 0.0

    @property
    def pointing_azimuths(self):
        return self.antenna_azimuths[self.pointing]

    def to_rows(self):
        return zip(
            self.delays * 1e9,
            power_to_db(self.envelope),
            power_to_db(self.pdp_min),
            self.pointing_azimuths,
        )


def envelope_and_pdp(idsf):
    power = np.abs(idsf.data) ** 2
    return PowerProfile(
        delays=idsf.delays,
        envelope=power.max(axis=0),
        pdp_min=power.min(axis=0),
        pointing=power.argmax(axis=0),
        antenna_azimuths=np.asarray(idsf.antenna_azimuths),
    )


def check_delay_grid(evaluation, delay_step):
    """Warn when the delay clustering grid spans more than a few processed delay steps."""

    if delay_step <= 0:
        return True
    steps = evaluation.delay_cluster_grid / delay_step
    if steps > MAX_CLUSTER_GRID_STEPS:
        logger.warning(
            "delay clustering grid %.4g ns spans %.1f delay steps of %.4g ns; "
            "the evaluation config may belong to another sounder",
            evaluation.delay_cluster_grid * 1e9,
            steps,
            delay_step * 1e9,
        )
        return False
    return True


def estimate_paths(
    idsf, evaluation, pattern=ISOTROPIC, profile=None, spectrum_sink=None, bin_sink=None
):
    """Threshold, per-bin DoA, clustering and gain compensation on a processed IDSF.

    ``spectrum_sink`` receives (delay, grid_deg, spectrum_db) for every
    estimated bin when pseudo-spectra are to be inspected. ``bin_sink``
    receives the above-threshold bin estimates and the set of bin indices
    kept as cluster maxima.
    """

    if not idsf.processed:
        raise DataFormatError("path estimation needs a processed IDSF")
    profile = profile or envelope_and_pdp(idsf)
    check_delay_grid(evaluation, profile.delay_step)
    bins, partial = estimate_bins(idsf, profile, evaluation, pattern, spectrum_sink)
    if bin_sink is not None:
        runs = cluster_runs(bins, evaluation.delay_cluster_grid, evaluation.angular_cluster_grid)
        bin_sink(bins, {strongest_bin(run).index for run in runs})

    peak = float(profile.envelope.max()) if len(profile.envelope) else 0.0
    floor = profile.noise_floor
    noise_limited = peak <= 0 or peak < floor * 10.0 ** (evaluation.relative_threshold / 10.0)
    if not bins:
        logger.warning("no delay bin above the %.1f dB threshold", evaluation.relative_threshold)
    elif noise_limited:
        logger.warning(
            "strongest bin is only %.1f dB above the envelope floor; estimates may be spurious",
            10.0 * math.log10(peak / floor) if floor > 0 else math.inf,
        )

    metadata = {
        "config_ref": idsf.config_ref,
        "relative_threshold": evaluation.relative_threshold,
        "delay_cluster_grid": evaluation.delay_cluster_grid,
        "angular_cluster_grid": evaluation.angular_cluster_grid,
        "partial_aperture": partial,
        "noise_limited": bool(noise_limited),
        "envelope_floor_db": float(power_to_db(floor)),
        "gain_compensated": False,
    }
    path_set = cluster_paths(
        bins,
        evaluation.delay_cluster_grid,
        evaluation.angular_cluster_grid,
        profile=profile,
        metadata=metadata,
    )
    return compensate_antenna_gain(path_set, pattern)
