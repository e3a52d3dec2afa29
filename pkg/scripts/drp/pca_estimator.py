#!/usr/bin/env python3
"""
HTEQ PCA Estimator - complex principal-component mapping from s to r

Training (on band-windowed s_j, r_j):
  1. ensemble means s_bar, r_bar
  2. U_s, U_r = first K left singular vectors of the centered Nbins x J matrices
  3. gains g_{s,j} = U_s^H (s_j - s_bar), g_{r,j} = U_r^H (r_j - r_bar)
  4. A_hat = (sum g~_r g~_s^H)(sum g~_s g~_s^H)^-1 with g~ = g - mean(g)

Run time:
  g_s   = U_s^H (Q s - s_bar)
  g_r^  = g_r_bar + A_hat (g_s - g_s_bar)
  r_hat = Q (r_bar + U_r g_r^)

Each singular vector is rotated so its largest-magnitude entry is real and
positive; complex singular vectors are otherwise unique only up to a unit phase.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from scripts.common.hteq_errors import DataError, SingularityError
from scripts.drp.bands import Band, band_mask, validate_band
from scripts.spectra.spectra import AtfDatabase, FrequencyResponse, require_same_grid

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
RIDGE_EPS = 1e-10


@dataclass(frozen=True, eq=False)
class PcaModel:
    K: int
    U_s: np.ndarray
    U_r: np.ndarray
    s_mean: FrequencyResponse
    r_mean: FrequencyResponse
    g_s_mean: np.ndarray
    g_r_mean: np.ndarray
    A_hat: np.ndarray
    band_hz: Band

    def __post_init__(self) -> None:
        require_same_grid(self.s_mean, self.r_mean)
        n_bins = self.s_mean.n_bins
        K = int(self.K)
        shapes = {
            "U_s": (self.U_s, (n_bins, K)),
            "U_r": (self.U_r, (n_bins, K)),
            "g_s_mean": (self.g_s_mean, (K,)),
            "g_r_mean": (self.g_r_mean, (K,)),
            "A_hat": (self.A_hat, (K, K)),
        }
        for name, (arr, shape) in shapes.items():
            a = np.array(arr, dtype=complex, copy=True)
            if a.shape != shape:
                raise DataError(f"PcaModel.{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise DataError(f"PcaModel.{name} contains non-finite values")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "band_hz", validate_band(self.band_hz, self.s_mean.nyquist_hz))


def _fix_phase(U: np.ndarray) -> np.ndarray:
    U = np.array(U, copy=True)
    for i in range(U.shape[1]):
        col = U[:, i]
        idx = int(np.argmax(np.abs(col)))
        pivot = col[idx]
        if abs(pivot) > 0:
            U[:, i] = col * (np.conj(pivot) / abs(pivot))
    return U


def principal_components(X: np.ndarray, K: int) -> np.ndarray:
    """First K left singular vectors of X (Nbins x J), phase-normalized."""
    U, _, _ = np.linalg.svd(X, full_matrices=False)
    return _fix_phase(U[:, :K])


def fit_gain_map(G_s: np.ndarray, G_r: np.ndarray) -> np.ndarray:
    """A_hat minimizing sum_j ||g~_r,j - A g~_s,j||^2 (gains already centered, K x J)."""
    K = G_s.shape[0]
    C_ss = G_s @ G_s.conj().T
    C_rs = G_r @ G_s.conj().T
    trace = float(np.trace(C_ss).real)
    if trace <= 0:
        logger.warning("Secondary-path gain covariance is zero; mapping set to zero")
        return np.zeros((K, K), dtype=complex)
    if np.linalg.cond(C_ss) > COND_LIMIT:
        eps = RIDGE_EPS * trace / K
        logger.warning(
            f"Secondary-path gain covariance is singular (J-1 < K or degenerate ensemble); "
            f"adding ridge {eps:.3g}"
        )
        C_ss = C_ss + eps * np.eye(K)
    # A = C_rs C_ss^-1  <=>  C_ss A^H = C_rs^H (C_ss Hermitian)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            A_h = scipy.linalg.solve(C_ss, C_rs.conj().T, assume_a="her")
    except (scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as ex:
        raise SingularityError(f"Secondary-path gain covariance solve failed (K={K}): {ex}") from ex
    return A_h.conj().T


def train_pca(training: AtfDatabase, K: int, band: Band = (1500.0, 8000.0)) -> PcaModel:
    training.require_sets(2, "PCA training")
    grid = training.grid
    K = int(K)
    if not 1 <= K <= min(training.J, grid.n_bins):
        raise DataError(f"K={K} must be in [1, min(J={training.J}, Nbins={grid.n_bins})]")
    band = validate_band(band, grid.nyquist_hz)
    mask = band_mask(grid, band)

    S = (training.stack("s") * mask).T
    R = (training.stack("r") * mask).T
    s_mean = S.mean(axis=1)
    r_mean = R.mean(axis=1)
    Xs = S - s_mean[:, None]
    Xr = R - r_mean[:, None]

    U_s = principal_components(Xs, K)
    U_r = principal_components(Xr, K)
    G_s = U_s.conj().T @ Xs
    G_r = U_r.conj().T @ Xr
    g_s_mean = G_s.mean(axis=1)
    g_r_mean = G_r.mean(axis=1)
    A_hat = fit_gain_map(G_s - g_s_mean[:, None], G_r - g_r_mean[:, None])

    logger.debug(f"PCA trained on J={training.J}, K={K}, band={band}")
    return PcaModel(
        K=K,
        U_s=U_s,
        U_r=U_r,
        s_mean=grid.with_bins(s_mean),
        r_mean=grid.with_bins(r_mean),
        g_s_mean=g_s_mean,
        g_r_mean=g_r_mean,
        A_hat=A_hat,
        band_hz=band,
    )


def secondary_gains(model: PcaModel, s: FrequencyResponse) -> np.ndarray:
    require_same_grid(model.s_mean, s)
    mask = band_mask(s, model.band_hz)
    return model.U_s.conj().T @ (s.bins * mask - model.s_mean.bins)


def estimate_pca(model: PcaModel, s: FrequencyResponse) -> FrequencyResponse:
    """r_hat on the PCA band; zero outside it."""
    g_s = secondary_gains(model, s)
    g_r = model.g_r_mean + model.A_hat @ (g_s - model.g_s_mean)
    r_hat = model.r_mean.bins + model.U_r @ g_r
    mask = band_mask(s, model.band_hz)
    return s.with_bins(np.where(mask, r_hat, 0.0))


def mapping_cost(model: PcaModel, training: AtfDatabase, A: np.ndarray) -> float:
    """E(A) over the training gains of the model's own bases."""
    mask = band_mask(training.grid, model.band_hz)
    Xs = (training.stack("s") * mask).T - model.s_mean.bins[:, None]
    Xr = (training.stack("r") * mask).T - model.r_mean.bins[:, None]
    G_s = model.U_s.conj().T @ Xs - model.g_s_mean[:, None]
    G_r = model.U_r.conj().T @ Xr - model.g_r_mean[:, None]
    return float(np.sum(np.abs(G_r - A @ G_s) ** 2))


def reconstruction_gains(model: PcaModel, r: FrequencyResponse) -> Tuple[np.ndarray, np.ndarray]:
    """(gains, reconstruction) of a windowed r in the U_r basis."""
    mask = band_mask(r, model.band_hz)
    g = model.U_r.conj().T @ (r.bins * mask - model.r_mean.bins)
    return g, model.r_mean.bins + model.U_r @ g
