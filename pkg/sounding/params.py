"""Channel parameters from estimated path sets, and the close-in path-loss fit."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DomainError, NumericError
from .models import wavelength


logger = logging.getLogger(__name__)

ANGULAR_RESULTANT_FLOOR = 1e-15

INSUFFICIENT_POINTS = "insufficient points"

# Columns shared by the per-test-point table and its min/max rows.
SUMMARY_FIELDS = (
    "distance",
    "num_paths",
    "total_power",
    "path_loss",
    "k_factor",
    "k_factor_conventional",
    "mean_delay",
    "rms_ds",
    "rms_as",
)


def _require_paths(path_set):
    if len(path_set) == 0:
        raise DomainError("the path set is empty")


def total_power_and_pl(path_set):
    _require_paths(path_set)
    total = float(np.sum(path_set.powers))
    return total, -10.0 * math.log10(total)


def k_factor(path_set):
    """Total power over the power of all paths after the first, in dB.

    The first path is the minimum-delay (direct) path. A single path gives +inf.
    """

    _require_paths(path_set)
    powers = path_set.powers
    if len(powers) == 1:
        return math.inf
    return 10.0 * math.log10(np.sum(powers) / np.sum(powers[1:]))


def k_factor_conventional(path_set):
    """Direct-path power over the power of all other paths, in dB."""

    _require_paths(path_set)
    powers = path_set.powers
    if len(powers) == 1:
        return math.inf
    return 10.0 * math.log10(powers[0] / np.sum(powers[1:]))


def _delay_moments(path_set):
    powers = path_set.powers
    delays = path_set.delays
    # Offsets from the first path keep equal delays exactly equal.
    offsets = delays - delays[0]
    total = np.sum(powers)
    mean_offset = np.sum(offsets * powers) / total
    variance = np.sum((offsets - mean_offset) ** 2 * powers) / total
    return float(delays[0] + mean_offset), float(math.sqrt(max(variance, 0.0)))


def mean_delay(path_set):
    _require_paths(path_set)
    return _delay_moments(path_set)[0]


def rms_delay_spread(path_set):
    _require_paths(path_set)
    return _delay_moments(path_set)[1]


def rms_angular_spread(path_set):
    """Circular RMS angular spread sqrt(-2 ln r) in degrees.

    ``1 - r`` is summed as the power-weighted ``2 sin^2`` of each path's
    deviation from the mean direction, which stays accurate for tight clusters.
    """

    _require_paths(path_set)
    powers = path_set.powers
    azimuths = np.deg2rad(path_set.azimuths)
    mean_direction = np.angle(np.sum(powers * np.exp(1j * azimuths)))
    deviation = np.sum(powers * 2.0 * np.sin((azimuths - mean_direction) / 2.0) ** 2)
    deficit = min(max(float(deviation / np.sum(powers)), 0.0), 1.0 - ANGULAR_RESULTANT_FLOOR)
    return math.degrees(math.sqrt(-2.0 * math.log1p(-deficit)))


def free_space_path_loss(distance, carrier_frequency):
    return 20.0 * math.log10(4.0 * math.pi * distance / wavelength(carrier_frequency))


@dataclass(frozen=True)
class ChannelParams:
    distance: float
    num_paths: int
    total_power: float
    path_loss: float
    k_factor: float
    k_factor_conventional: float
    mean_delay: float
    rms_ds: float
    rms_as: float

    @classmethod
    def from_path_set(cls, path_set, distance):
        if len(path_set) == 0:
            return cls(
                distance=distance,
                num_paths=0,
                total_power=0.0,
                path_loss=math.inf,
                k_factor=math.inf,
                k_factor_conventional=math.inf,
                mean_delay=math.nan,
                rms_ds=math.nan,
                rms_as=math.nan,
            )
        total, path_loss = total_power_and_pl(path_set)
        average, spread = _delay_moments(path_set)
        return cls(
            distance=distance,
            num_paths=len(path_set),
            total_power=total,
            path_loss=path_loss,
            k_factor=k_factor(path_set),
            k_factor_conventional=k_factor_conventional(path_set),
            mean_delay=average,
            rms_ds=spread,
            rms_as=rms_angular_spread(path_set),
        )

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CiFit:
    exponent: float
    reference_fspl_1m: float
    residual_rms: float
    points: int


def ci_fit(points, carrier_frequency, tx_antenna_gain=0.0, rx_antenna_gain=0.0):
    """Close-in model fit PL(d) = FSPL(1 m) + 10 n log10(d) with a fixed anchor.

    Radio-channel path loss is turned into propagation path loss by
    subtracting both antenna gains before fitting.
    """

    points = list(points)
    if len(points) < 2:
        raise DomainError("the CI fit needs at least two test points")
    distances = np.array([distance for distance, _ in points], dtype=float)
    losses = np.array([loss for _, loss in points], dtype=float)
    if np.any(distances < 1.0):
        raise DomainError("CI reference violated: every distance must be at least 1 m")
    if not np.all(np.isfinite(losses)):
        raise DomainError("path losses must be finite")

    anchor = free_space_path_loss(1.0, carrier_frequency)
    x = 10.0 * np.log10(distances)
    y = losses - tx_antenna_gain - rx_antenna_gain - anchor
    denominator = float(np.sum(x * x))
    if denominator == 0:
        raise NumericError("all test points sit at the 1 m reference distance")
    exponent = float(np.sum(x * y) / denominator)
    residual = float(np.sqrt(np.mean((y - exponent * x) ** 2)))
    return CiFit(
        exponent=exponent,
        reference_fspl_1m=anchor,
        residual_rms=residual,
        points=len(points),
    )


def ci_model_pl(distance, carrier_frequency, exponent, tx_antenna_gain=0.0, rx_antenna_gain=0.0):
    """Radio-channel path loss predicted by a CI exponent, antenna gains added back."""

    propagation = free_space_path_loss(1.0, carrier_frequency) + 10.0 * exponent * math.log10(distance)
    return propagation + tx_antenna_gain + rx_antenna_gain


@dataclass(frozen=True)
class ChannelReport:
    rows: tuple
    minimum: dict
    maximum: dict
    ci_fit: CiFit | None
    ci_status: str


def _extreme(values, reducer):
    finite = [value for value in values if not math.isnan(value)]
    return reducer(finite) if finite else math.nan


def summarize(ps_per_tp, sounder):
    """Per-test-point parameters, their min/max rows and the CI fit across points."""

    rows = tuple(ChannelParams.from_path_set(path_set, distance) for path_set, distance in ps_per_tp)
    minimum = {name: _extreme([getattr(row, name) for row in rows], min) for name in SUMMARY_FIELDS}
    maximum = {name: _extreme([getattr(row, name) for row in rows], max) for name in SUMMARY_FIELDS}

    usable = [(row.distance, row.path_loss) for row in rows if row.num_paths > 0]
    if len(usable) >= 2:
        fit = ci_fit(
            usable,
            sounder.carrier_frequency,
            sounder.tx_antenna_gain,
            sounder.rx_antenna_gain,
        )
        status = "ok"
    else:
        fit = None
        status = INSUFFICIENT_POINTS
        logger.warning("CI fit skipped: %d usable test point(s)", len(usable))
    return ChannelReport(rows=rows, minimum=minimum, maximum=maximum, ci_fit=fit, ci_status=status)
