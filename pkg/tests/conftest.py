"""Shared fixtures: random ATF sets and databases on small grids."""

import sys
from pathlib import Path
from typing import Callable, Dict

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from scripts.spectra.spectra import PATH_NAMES, AtfDatabase, AtfSet, SampleRate, make_set  # noqa: E402


def random_bins(rng: np.random.Generator, fft_size: int, scale: float = 1.0) -> np.ndarray:
    """Random one-sided spectrum with real DC and Nyquist bins, bounded away from zero."""
    n = fft_size // 2 + 1
    mag = scale * rng.uniform(0.5, 1.5, n)
    phase = rng.uniform(-np.pi, np.pi, n)
    bins = mag * np.exp(1j * phase)
    bins[0] = mag[0]
    bins[-1] = -mag[-1]
    return bins


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_random_set(rng) -> Callable[..., AtfSet]:
    def factory(
        subject_id: str = "S01",
        trial: int = 1,
        fft_size: int = 32,
        rate_hz: float = 40000.0,
        **paths: np.ndarray,
    ) -> AtfSet:
        data: Dict[str, np.ndarray] = {n: random_bins(rng, fft_size) for n in PATH_NAMES}
        data["c"] = 0.2 * data["c"]
        data.update(paths)
        return make_set(subject_id, trial, data, fft_size, SampleRate(rate_hz))

    return factory


@pytest.fixture
def make_random_db(make_random_set) -> Callable[..., AtfDatabase]:
    def factory(n_subjects: int = 4, n_trials: int = 2, fft_size: int = 32, rate_hz: float = 40000.0) -> AtfDatabase:
        sets = [
            make_random_set(f"S{k + 1:02d}", t, fft_size=fft_size, rate_hz=rate_hz)
            for k in range(n_subjects)
            for t in range(1, n_trials + 1)
        ]
        return AtfDatabase(tuple(sets))

    return factory
