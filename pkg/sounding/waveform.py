"""Sounding sequence, window design and correlation-based CIR estimation."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import optimize, special
from scipy.signal import windows

from .exceptions import DomainError, NumericError


logger = logging.getLogger(__name__)

# Frequency-domain oversampling used when measuring the peak sidelobe level.
PSL_PAD_FACTOR = 16

# The mainlobe may occupy at most this fraction of the window's bins on each side.
MAX_MAINLOBE_FRACTION = 1.0 / 16.0


@dataclass(frozen=True, eq=False)
class FzcSequence:
    """Frank-Zadoff-Chu sequence; constant amplitude, ideal periodic autocorrelation."""

    length: int
    root: int
    samples: np.ndarray

    @functools.cached_property
    def spectrum(self):
        spectrum = sp_fft.fft(self.samples)
        spectrum.flags.writeable = False
        return spectrum


@functools.lru_cache(maxsize=8)
def fzc_generate(length, root=1):
    if length < 2:
        raise DomainError("FZC length must be at least 2")
    if math.gcd(int(root), int(length)) != 1:
        raise DomainError(f"FZC root {root} is not coprime with length {length}")

    n = np.arange(length, dtype=np.int64)
    # Reduce the quadratic phase modulo 2M in integers so long sequences stay exact.
    if length % 2 == 0:
        exponent = (root * n * n) % (2 * length)
    else:
        exponent = (root * n * (n + 1)) % (2 * length)
    samples = np.exp(-1j * np.pi * exponent / length)
    samples.flags.writeable = False
    return FzcSequence(length=int(length), root=int(root), samples=samples)


def periodic_autocorrelation(samples):
    spectrum = sp_fft.fft(samples)
    return sp_fft.ifft(spectrum * np.conj(spectrum))


@dataclass(frozen=True, eq=False)
class Window:
    kind: str
    coefficients: np.ndarray
    parameters: tuple = ()

    @property
    def length(self):
        return len(self.coefficients)

    @property
    def coherent_gain(self):
        return float(np.sum(self.coefficients))

    @property
    def noise_gain(self):
        """Noise power passed relative to a unit-gain coherent signal."""

        return float(np.sum(self.coefficients ** 2) / self.coherent_gain ** 2)

    def to_rows(self):
        return [(index, f"{value:.17g}") for index, value in enumerate(self.coefficients)]


def _make_window(kind, coefficients, **parameters):
    coefficients = np.asarray(coefficients, dtype=float)
    coefficients.flags.writeable = False
    return Window(kind=kind, coefficients=coefficients, parameters=tuple(parameters.items()))


def _ultraspherical_polynomial(degree, mu, x):
    """C_n^mu(x) with closed forms for the Chebyshev cases mu = 0 and mu = 1."""

    x = np.asarray(x, dtype=float)
    magnitude = np.abs(x)
    sign = np.where(x < 0, (-1.0) ** degree, 1.0)
    inside = magnitude <= 1.0
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        if mu == 0:
            values = np.where(
                inside,
                np.cos(degree * np.arccos(np.minimum(magnitude, 1.0))),
                np.cosh(degree * np.arccosh(np.maximum(magnitude, 1.0))),
            )
        elif mu == 1:
            theta = np.arccos(np.minimum(magnitude, 1.0))
            t = np.arccosh(np.maximum(magnitude, 1.0))
            trig = np.sin((degree + 1) * theta) / np.sin(theta)
            hyper = np.sinh((degree + 1) * t) / np.sinh(t)
            values = np.where(inside, trig, hyper)
            values = np.where(magnitude == 1.0, degree + 1.0, values)
        else:
            values = special.eval_gegenbauer(degree, mu, magnitude)
    return sign * values


def _first_zeros(degree, mu):
    """Angles theta_1 < theta_2 of the two zeros of C_n^mu(cos theta) nearest 0."""

    if mu == 0:
        return (np.pi / (2 * degree), 3 * np.pi / (2 * degree))
    if mu == 1:
        return (np.pi / (degree + 1), 2 * np.pi / (degree + 1))

    def poly(theta):
        return _ultraspherical_polynomial(degree, mu, np.cos(theta))

    upper = (3 + 2 * mu) * np.pi / (degree + mu)
    for _ in range(8):
        grid = np.linspace(upper / 4096, min(upper, np.pi / 2), 4096)
        values = poly(grid)
        crossings = np.flatnonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))
        if len(crossings) >= 2:
            zeros = [
                optimize.brentq(poly, grid[i], grid[i + 1], xtol=1e-15)
                for i in crossings[:2]
            ]
            return tuple(zeros)
        upper *= 2
    raise NumericError(f"cannot locate the mainlobe zeros of C_{degree}^{mu}")


@functools.lru_cache(maxsize=32)
def design_ultraspherical(length, psl=70.0, alpha=1.0):
    """Ultraspherical window with peak sidelobe level ``psl`` dB.

    ``alpha`` is the Gegenbauer parameter mu and sets the sidelobe roll-off;
    alpha = 0 is the Dolph-Chebyshev window. Coefficients are obtained by
    sampling C_n^mu(x0 cos(pi k / N)) and transforming, as for chebwin.
    """

    if length < 1:
        raise DomainError("window length must be positive")
    if psl <= 0:
        raise DomainError("peak sidelobe level must be positive")
    if alpha < 0:
        raise DomainError("slope taper must be non-negative")
    if length == 1:
        return _make_window("ultraspherical", [1.0], psl=psl, alpha=alpha)

    degree = length - 1
    mu = float(alpha)
    theta1, theta2 = _first_zeros(degree, mu)
    x0_limit = math.cos(theta1) / math.cos(np.pi * MAX_MAINLOBE_FRACTION)

    def polynomial(x):
        return float(_ultraspherical_polynomial(degree, mu, x))

    if mu == 0:
        sidelobe = 1.0
        x0 = math.cosh(math.acosh(10.0 ** (psl / 20.0)) / degree)
        feasible = x0 <= x0_limit
    else:
        result = optimize.minimize_scalar(
            lambda theta: -abs(polynomial(math.cos(theta))),
            bounds=(theta1, theta2),
            method="bounded",
            options={"xatol": 1e-12 * theta2},
        )
        sidelobe = -result.fun

        def excess(x):
            return 20.0 * math.log10(polynomial(x) / sidelobe) - psl

        if excess(1.0) > 0:
            raise DomainError(
                f"PSL {psl} dB is below the minimum {psl + excess(1.0):.2f} dB "
                f"reachable with N={length}, alpha={alpha}"
            )
        # Overflow at the limit reads as +inf, which only means the target is reachable.
        feasible = excess(x0_limit) >= 0
        if feasible:
            x0 = optimize.bisect(
                excess, 1.0, x0_limit, xtol=1e-15, rtol=4 * np.finfo(float).eps
            )

    if not feasible:
        achievable = 20.0 * math.log10(polynomial(x0_limit) / sidelobe)
        raise NumericError(
            f"PSL {psl} dB is unreachable with N={length}, alpha={alpha}; "
            f"at most {achievable:.2f} dB fits the mainlobe limit"
        )

    k = np.arange(length)
    samples = _ultraspherical_polynomial(degree, mu, x0 * np.cos(np.pi * k / length))
    if length % 2:
        w = np.real(sp_fft.fft(samples))
        half = (length + 1) // 2
        w = w[:half]
        w = np.concatenate((w[half - 1:0:-1], w))
    else:
        samples = samples * np.exp(1j * np.pi / length * k)
        w = np.real(sp_fft.fft(samples))
        half = length // 2 + 1
        w = np.concatenate((w[half - 1:0:-1], w[1:half]))
    w = w / np.max(w)
    logger.debug("ultraspherical window N=%d psl=%.1f alpha=%.2f x0=%.12f", length, psl, alpha, x0)
    return _make_window("ultraspherical", w, psl=psl, alpha=alpha, x0=x0)


@functools.lru_cache(maxsize=32)
def design_tukey(length, alpha=0.5):
    if length < 1:
        raise DomainError("window length must be positive")
    if not 0 <= alpha <= 1:
        raise DomainError("Tukey taper must lie in [0, 1]")
    return _make_window("tukey", windows.tukey(length, alpha, sym=True), alpha=alpha)


def measure_psl(coefficients, pad_factor=PSL_PAD_FACTOR):
    """Peak sidelobe level of a window in dB below the mainlobe (positive number)."""

    coefficients = np.asarray(coefficients, dtype=float)
    size = pad_factor * len(coefficients)
    response = np.abs(sp_fft.rfft(coefficients, size))
    rising = np.flatnonzero(np.diff(response) > 0)
    if len(rising) == 0:
        return math.inf
    edge = rising[0]
    peak_index = edge + int(np.argmax(response[edge:]))
    _, sidelobe = parabolic_peak(response, peak_index)
    return -20.0 * math.log10(sidelobe / response[0])


@functools.lru_cache(maxsize=16)
def spectral_passband(num_antennas, length, alpha=0.5):
    """Tukey taper over spatial-frequency bins, centred on mode 0, in FFT order.

    ``length`` is the noise-equivalent width of the taper: the Tukey window
    spans length / (1 - 5 alpha / 8) bins so that it passes ``length`` bins'
    worth of white noise.
    """

    if length > num_antennas:
        raise DomainError(f"spectral filter length {length} exceeds K = {num_antennas}")
    if length < 1:
        raise DomainError("spectral filter length must be positive")
    span = min(num_antennas, int(round(length / (1.0 - 5.0 * alpha / 8.0))))
    if span < num_antennas and span % 2 == 0:
        span += 1
    taper = design_tukey(span, alpha).coefficients
    passband = np.zeros(num_antennas)
    modes = np.arange(span) - span // 2
    passband[modes % num_antennas] = taper
    passband.flags.writeable = False
    return passband


def calibration_from_capture(back_to_back, reference):
    """System transfer function measured with Tx and Rx connected back to back."""

    block = np.asarray(back_to_back)
    if block.ndim == 2:
        block = block.mean(axis=0)
    if block.shape[-1] != reference.length:
        raise DomainError("calibration capture length differs from the sequence length")
    return sp_fft.fft(block) / reference.spectrum


def apply_calibration(spectrum, calibration):
    calibration = np.asarray(calibration)
    if np.any(calibration == 0) or not np.all(np.isfinite(calibration)):
        raise NumericError("calibration spectrum has zero or non-finite bins")
    return spectrum / calibration


def correlate_frequency_domain(
    rx_block,
    reference,
    sampling_rate,
    bandwidth,
    window,
    oversampling=4,
    calibration=None,
    workers=None,
):
    """Windowed, zero-padded cross-correlation of received blocks with the sequence.

    Works on the last axis of ``rx_block``. The output is scaled so that a
    back-to-back capture peaks at exactly 1 (0 dB).
    """

    rx_block = np.asarray(rx_block)
    length = rx_block.shape[-1]
    if length != reference.length:
        raise DomainError(
            f"received block has {length} samples, sequence has {reference.length}"
        )
    in_band = int(round(length * bandwidth / sampling_rate))
    if window.length != in_band:
        raise DomainError(
            f"window length {window.length} differs from the {in_band} in-band bins"
        )
    if oversampling < 1:
        raise DomainError("oversampling factor must be at least 1")

    spectrum = sp_fft.fft(rx_block, axis=-1, workers=workers)
    spectrum *= np.conj(reference.spectrum)
    if calibration is not None:
        spectrum = apply_calibration(spectrum, calibration)

    padded_length = oversampling * length
    bins = np.arange(in_band) - in_band // 2
    padded = np.zeros(rx_block.shape[:-1] + (padded_length,), dtype=complex)
    padded[..., bins % padded_length] = spectrum[..., bins % length] * window.coefficients
    cir = sp_fft.ifft(padded, axis=-1, workers=workers, overwrite_x=True)
    cir *= padded_length / (length * window.coherent_gain)
    return cir


def parabolic_peak(values, index, circular=False):
    """Three-point quadratic interpolation around ``values[index]``.

    Returns (offset, height) with the offset in samples relative to ``index``.
    Edge samples are returned unrefined unless ``circular`` is set.
    """

    size = len(values)
    if not circular and (index <= 0 or index >= size - 1):
        return 0.0, float(values[index])
    ym1 = values[(index - 1) % size]
    y0 = values[index]
    yp1 = values[(index + 1) % size]
    curvature = 2 * y0 - yp1 - ym1
    if curvature <= 0:
        return 0.0, float(y0)
    offset = (yp1 - ym1) / (2 * curvature)
    offset = min(max(offset, -0.5), 0.5)
    return float(offset), float(y0 - 0.25 * (ym1 - yp1) * offset)
