"""
Rectangular frequency windows.

Edge convention: window_band keeps bins with low <= f <= high. When two
estimators share a split frequency, the bin at exactly the split belongs to
the lower band (see split_masks).
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from scripts.common.hteq_errors import DataError
from scripts.spectra.spectra import FrequencyResponse

Band = Tuple[float, float]


def validate_band(band: Band, nyquist_hz: float) -> Band:
    low, high = float(band[0]), float(band[1])
    if not (0.0 <= low < high <= nyquist_hz):
        raise DataError(f"Invalid band ({low:g}, {high:g}) Hz; need 0 <= low < high <= {nyquist_hz:g}")
    return low, high


def band_mask(fr: FrequencyResponse, band: Band) -> np.ndarray:
    low, high = validate_band(band, fr.nyquist_hz)
    f = fr.freqs_hz
    return (f >= low) & (f <= high)


def window_band(fr: FrequencyResponse, band: Band) -> FrequencyResponse:
    """Zero every bin outside [low, high]."""
    mask = band_mask(fr, band)
    return fr.with_bins(np.where(mask, fr.bins, 0.0))


def split_masks(fr: FrequencyResponse, split_hz: float, upper_hz: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint masks: f <= split, split < f <= upper, f > upper."""
    f = fr.freqs_hz
    low = f <= split_hz
    mid = (f > split_hz) & (f <= upper_hz)
    high = f > upper_hz
    return low, mid, high
