"""Delay-azimuth clustering of bin estimates into a discrete path set."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .waveform import parabolic_peak


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatedPath:
    delay: float
    azimuth: float
    power: float


@dataclass(frozen=True, eq=False)
class PathSet:
    """Estimated discrete paths ordered by delay, with provenance metadata."""

    paths: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for path in self.paths:
            if not path.power > 0:
                raise DomainError("path powers must be positive")
        ordered = tuple(sorted(self.paths, key=lambda path: (path.delay, path.azimuth)))
        object.__setattr__(self, "paths", ordered)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    @property
    def delays(self):
        return np.array([path.delay for path in self.paths], dtype=float)

    @property
    def azimuths(self):
        return np.array([path.azimuth for path in self.paths], dtype=float)

    @property
    def powers(self):
        return np.array([path.power for path in self.paths], dtype=float)


def azimuth_cell(azimuth, angular_grid):
    """Index of the nearest grid multiple on the circle; exact halves round toward 0 deg."""

    cells = int(round(360.0 / angular_grid))
    return math.ceil(azimuth / angular_grid - 0.5) % cells


def _refined_delay(estimate, profile):
    if profile is None:
        return estimate.delay
    envelope = profile.envelope
    index = estimate.index
    if not 0 < index < len(envelope) - 1:
        return estimate.delay
    if envelope[index] < envelope[index - 1] or envelope[index] < envelope[index + 1]:
        return estimate.delay
    offset, _ = parabolic_peak(envelope, index)
    return float(profile.delays[index] + offset * profile.delay_step)


def cluster_runs(bins, delay_grid, angular_grid):
    """Group bin estimates by azimuth cell, then into runs of delay-adjacent bins."""

    if delay_grid <= 0 or angular_grid <= 0:
        raise DomainError("clustering grids must be positive")

    cells = defaultdict(list)
    for estimate in bins:
        cells[azimuth_cell(estimate.azimuth, angular_grid)].append(estimate)

    # Bins one delay grid apart still belong to the same run.
    tolerance = delay_grid * (1.0 + 1e-9)
    runs = []
    for members in cells.values():
        members.sort(key=lambda estimate: estimate.delay)
        run = [members[0]]
        for previous, current in zip(members, members[1:]):
            if current.delay - previous.delay > tolerance:
                runs.append(run)
                run = []
            run.append(current)
        runs.append(run)
    return runs


def strongest_bin(run):
    return max(run, key=lambda estimate: estimate.power)


def cluster_paths(bins, delay_grid, angular_grid, profile=None, metadata=None):
    """One path per (azimuth cell, contiguous delay run): the run's strongest bin.

    Azimuth stays unrounded; the delay is refined on ``profile``'s envelope
    when one is given and the bin is a local envelope maximum.
    """

    paths = [
        _as_path(strongest_bin(run), profile)
        for run in cluster_runs(bins, delay_grid, angular_grid)
    ]
    logger.debug("clustered %d bins into %d paths", len(bins), len(paths))
    return PathSet(paths=tuple(paths), metadata=metadata or {})


def _as_path(best, profile):
    return EstimatedPath(
        delay=_refined_delay(best, profile),
        azimuth=best.azimuth,
        power=best.power,
    )


def compensate_antenna_gain(path_set, pattern):
    """Divide out the rotating antenna's boresight gain, once."""

    if path_set.metadata.get("gain_compensated"):
        raise DomainError("double compensation: antenna gain is already removed")
    if not math.isfinite(pattern.boresight_gain):
        raise DomainError("boresight gain must be finite")
    gain = pattern.boresight_linear
    paths = tuple(
        EstimatedPath(delay=path.delay, azimuth=path.azimuth, power=path.power / gain)
        for path in path_set.paths
    )
    metadata = dict(path_set.metadata, gain_compensated=True, boresight_gain_db=pattern.boresight_gain)
    return PathSet(paths=paths, metadata=metadata)
