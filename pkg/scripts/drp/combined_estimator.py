#!/usr/bin/env python3
"""
HTEQ Combined Estimator - split-frequency selection between ridge and PCA

Routing per bin f:
  f <= split_hz                  -> ridge estimate
  split_hz < f <= pca upper edge -> PCA estimate
  f > pca upper edge             -> ridge estimate (fallback, flagged in reports)

Model JSON schema "hteq.estimator_model.v1" stores every trained array as
[re, im] pairs plus the training-set fingerprint.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from scripts.common.hteq_errors import ConfigError, SchemaError
from scripts.common.hteq_io import complex_from_json, complex_to_json
from scripts.drp.bands import split_masks
from scripts.drp.pca_estimator import PcaModel, estimate_pca, train_pca
from scripts.drp.ridge_estimator import RidgeModel, estimate_ridge, train_ridge
from scripts.spectra.spectra import AtfDatabase, FrequencyResponse, SampleRate, require_same_grid

logger = logging.getLogger(__name__)

ESTIMATOR_SCHEMA_V1 = "hteq.estimator_model.v1"


@dataclass(frozen=True)
class EstimatorConfig:
    K: int = 12
    split_hz: float = 1500.0
    mu: float = 0.001
    pca_high_hz: float = 8000.0

    def __post_init__(self) -> None:
        if int(self.K) < 1:
            raise ConfigError(f"K must be positive, got {self.K}")
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ConfigError(f"estimator mu must be non-negative, got {self.mu}")
        if not (0 <= float(self.split_hz) < float(self.pca_high_hz)):
            raise ConfigError(f"need 0 <= split_hz < pca_high_hz, got {self.split_hz}, {self.pca_high_hz}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "split_hz", float(self.split_hz))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "pca_high_hz", float(self.pca_high_hz))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class CombinedEstimator:
    ridge: RidgeModel
    pca: PcaModel
    split_hz: float = 1500.0
    training_fingerprint: str = ""

    def __post_init__(self) -> None:
        require_same_grid(self.ridge.gains, self.pca.s_mean)

    @property
    def upper_hz(self) -> float:
        return self.pca.band_hz[1]


def train_combined(training: AtfDatabase, cfg: EstimatorConfig) -> CombinedEstimator:
    training.require_sets(2, "Estimator training")
    nyquist = training.grid.nyquist_hz
    high = min(cfg.pca_high_hz, nyquist)
    ridge = train_ridge(training, cfg.mu, band_limit_hz=cfg.split_hz)
    pca = train_pca(training, cfg.K, band=(cfg.split_hz, high))
    est = CombinedEstimator(ridge=ridge, pca=pca, split_hz=cfg.split_hz, training_fingerprint=training.fingerprint())
    logger.info(
        f"Trained estimator on J={training.J} (K={cfg.K}, split={cfg.split_hz:g} Hz, "
        f"PCA band {cfg.split_hz:g}-{high:g} Hz, mu={cfg.mu:g})"
    )
    return est


def estimate_combined(est: CombinedEstimator, s: FrequencyResponse) -> FrequencyResponse:
    r_ls = estimate_ridge(est.ridge, s)
    r_pca = estimate_pca(est.pca, s)
    _, mid, _ = split_masks(s, est.split_hz, est.upper_hz)
    bins = np.where(mid, r_pca.bins, r_ls.bins)
    return s.with_bins(bins)


def fallback_mask(est: CombinedEstimator, grid: FrequencyResponse) -> np.ndarray:
    """Bins above the PCA pass-band that are served by the ridge fallback."""
    return split_masks(grid, est.split_hz, est.upper_hz)[2]


# =============================================================================
# JSON
# =============================================================================

def estimator_to_json(est: CombinedEstimator, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    grid = est.ridge.gains
    pca = est.pca
    body: Dict[str, Any] = {
        "schema": ESTIMATOR_SCHEMA_V1,
        "rate_hz": grid.rate.hertz,
        "fft_size": grid.fft_size,
        "split_hz": est.split_hz,
        "training_fingerprint": est.training_fingerprint,
        "ridge": {
            "mu": est.ridge.mu,
            "band_limit_hz": est.ridge.band_limit_hz,
            "gains": complex_to_json(grid.bins),
        },
        "pca": {
            "K": pca.K,
            "band_hz": list(pca.band_hz),
            "U_s": complex_to_json(pca.U_s),
            "U_r": complex_to_json(pca.U_r),
            "s_mean": complex_to_json(pca.s_mean.bins),
            "r_mean": complex_to_json(pca.r_mean.bins),
            "g_s_mean": complex_to_json(pca.g_s_mean),
            "g_r_mean": complex_to_json(pca.g_r_mean),
            "A_hat": complex_to_json(pca.A_hat),
        },
    }
    if extra:
        body.update(extra)
    return body


def estimator_from_json(data: Dict[str, Any]) -> CombinedEstimator:
    if data.get("schema") != ESTIMATOR_SCHEMA_V1:
        raise SchemaError(f"Unsupported estimator schema: {data.get('schema')}")
    try:
        rate = SampleRate(float(data["rate_hz"]))
        nf = int(data["fft_size"])

        def fr(key_data: Any) -> FrequencyResponse:
            return FrequencyResponse(bins=complex_from_json(key_data), fft_size=nf, rate=rate)

        rd = data["ridge"]
        ridge = RidgeModel(gains=fr(rd["gains"]), mu=float(rd["mu"]), band_limit_hz=float(rd["band_limit_hz"]))
        pd = data["pca"]
        K = int(pd["K"])
        pca = PcaModel(
            K=K,
            U_s=complex_from_json(pd["U_s"]).reshape(-1, K),
            U_r=complex_from_json(pd["U_r"]).reshape(-1, K),
            s_mean=fr(pd["s_mean"]),
            r_mean=fr(pd["r_mean"]),
            g_s_mean=complex_from_json(pd["g_s_mean"]).reshape(K),
            g_r_mean=complex_from_json(pd["g_r_mean"]).reshape(K),
            A_hat=complex_from_json(pd["A_hat"]).reshape(K, K),
            band_hz=(float(pd["band_hz"][0]), float(pd["band_hz"][1])),
        )
        return CombinedEstimator(
            ridge=ridge,
            pca=pca,
            split_hz=float(data["split_hz"]),
            training_fingerprint=str(data.get("training_fingerprint", "")),
        )
    except (KeyError, TypeError, ValueError, IndexError) as ex:
        raise SchemaError(f"Malformed estimator document: {ex}") from ex
