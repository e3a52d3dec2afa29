"""
dB level error and its aggregation.

  eps(w) = 10 log10 |truth|^2 - 10 log10 |estimate|^2

Bins where either magnitude is below FLAG_FLOOR are flagged: their value is
NaN and they are excluded from every mean, but counted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from scripts.common.hteq_errors import DataError
from scripts.spectra.spectra import FrequencyResponse, require_same_grid

logger = logging.getLogger(__name__)

FLAG_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class LevelError:
    freqs_hz: np.ndarray
    db: np.ndarray
    flagged: np.ndarray

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flagged))


def level_error(truth: FrequencyResponse, estimate: FrequencyResponse) -> LevelError:
    require_same_grid(truth, estimate)
    a = np.abs(truth.bins)
    b = np.abs(estimate.bins)
    if not np.any(a) or not np.any(b):
        raise DataError("Level error of an all-zero response is undefined")
    flagged = (a < FLAG_FLOOR) | (b < FLAG_FLOOR)
    db = np.full(a.shape, np.nan)
    ok = ~flagged
    db[ok] = 10.0 * np.log10(a[ok] ** 2) - 10.0 * np.log10(b[ok] ** 2)
    if flagged.any():
        logger.debug(f"{int(flagged.sum())} near-zero bin(s) flagged in level error")
    return LevelError(freqs_hz=truth.freqs_hz, db=db, flagged=flagged)


@dataclass(frozen=True, eq=False)
class BandErrorCurve:
    """Per-bin mean and (population) standard deviation of eps across sets."""

    freqs_hz: np.ndarray
    mean_db: np.ndarray
    std_db: np.ndarray
    count: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.freqs_hz)
        if not (len(self.mean_db) == len(self.std_db) == len(self.count) == n):
            raise DataError("BandErrorCurve arrays must have equal lengths")
        if not (np.all(np.isfinite(self.mean_db)) and np.all(np.isfinite(self.std_db))):
            raise DataError("BandErrorCurve values must be finite")


def aggregate_curve(errors: Sequence[LevelError]) -> BandErrorCurve:
    if not errors:
        raise DataError("Cannot aggregate zero error curves")
    stack = np.vstack([e.db for e in errors])
    valid = ~np.isnan(stack)
    count = valid.sum(axis=0)
    filled = np.where(valid, stack, 0.0)
    safe = np.maximum(count, 1)
    mean = filled.sum(axis=0) / safe
    var = np.where(valid, (stack - mean) ** 2, 0.0).sum(axis=0) / safe
    mean = np.where(count > 0, mean, 0.0)
    std = np.where(count > 0, np.sqrt(var), 0.0)
    return BandErrorCurve(freqs_hz=errors[0].freqs_hz, mean_db=mean, std_db=std, count=count)


def band_selector(freqs_hz: np.ndarray, band: Tuple[float, float]) -> np.ndarray:
    """Report bands are (low, high]; a band starting at 0 includes DC."""
    low, high = band
    lower = freqs_hz >= low if low <= 0 else freqs_hz > low
    return lower & (freqs_hz <= high)


def band_values(errors: Sequence[LevelError], band: Tuple[float, float]) -> np.ndarray:
    """All unflagged eps values of the given sets inside the band, pooled."""
    chunks = []
    for e in errors:
        sel = band_selector(e.freqs_hz, band) & ~e.flagged
        chunks.append(e.db[sel])
    return np.concatenate(chunks) if chunks else np.array([])


def band_mean_abs(errors: Sequence[LevelError], band: Tuple[float, float]) -> float:
    vals = band_values(errors, band)
    if vals.size == 0:
        raise DataError(f"No unflagged bins in band {band}")
    return float(np.mean(np.abs(vals)))
