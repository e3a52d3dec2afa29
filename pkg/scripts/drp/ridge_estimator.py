#!/usr/bin/env python3
"""
HTEQ Ridge Estimator - per-bin regularized LS mapping from s to r

Training minimizes ||D_s g - d_r||^2 + mu ||g||^2 over the stacked training sets.
D_s is diagonal per bin, so the solution decouples:

    g(w) = sum_j conj(s_j(w)) r_j(w) / (sum_j |s_j(w)|^2 + mu)

Run time:  r_hat = s * g  (element-wise)

The model is trained on the full grid. Restricting it to the low band
(low-band window) is a selection applied by the combiner; because bins are
decoupled, windowing the training data first gives identical in-band gains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from scripts.common.hteq_errors import DataError, SingularityError
from scripts.spectra.spectra import AtfDatabase, FrequencyResponse, require_same_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RidgeModel:
    gains: FrequencyResponse
    mu: float
    band_limit_hz: float

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise DataError(f"mu must be non-negative, got {self.mu}")


def train_ridge(training: AtfDatabase, mu: float, band_limit_hz: float = 1500.0) -> RidgeModel:
    training.require_sets(1, "Ridge training")
    if mu < 0:
        raise DataError(f"mu must be non-negative, got {mu}")
    S = training.stack("s")
    R = training.stack("r")
    num = np.sum(np.conj(S) * R, axis=0)
    den = np.sum(np.abs(S) ** 2, axis=0) + mu
    if mu == 0:
        dead = np.flatnonzero(den == 0)
        if dead.size:
            k = int(dead[0])
            raise SingularityError(
                f"mu = 0 and every training s_j vanishes at bin {k} ({training.grid.freqs_hz[k]:.1f} Hz)"
            )
    gains = training.grid.with_bins(num / den)
    logger.debug(f"Ridge trained on J={training.J}, mu={mu:g}")
    return RidgeModel(gains=gains, mu=float(mu), band_limit_hz=float(band_limit_hz))


def estimate_ridge(model: RidgeModel, s: FrequencyResponse) -> FrequencyResponse:
    require_same_grid(model.gains, s)
    return s.with_bins(s.bins * model.gains.bins)
