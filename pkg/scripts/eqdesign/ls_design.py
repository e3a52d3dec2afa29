#!/usr/bin/env python3
"""
HTEQ Equalization Design - closed-form and regularized least-squares filters

Purpose:
- ideal_filter:              G = (o - c) / (m r), exact transparency per bin
- design_freq_ls:            per-bin Tikhonov solution (diagonal system)
- design_time_ls:            Nt real taps with the d_proc advance inside the model
- design_time_ls_estimated:  same, with r replaced by an estimate (or by s)
- design_time_ls_ensemble:   o, c, m replaced by training-set averages, individual r
- design_gls:                one common filter for a whole training database
- filter_response:           effective response of a designed filter on a grid
- aided_response:            c + m G r with the TRUE r of the set

Time-domain model (per one-sided bin k, w = 2 pi k rate / Nf):
  aided_k = c_k + m_k r_k e^{+j w d_proc} DFT_k(g)
  cost(g) = sum_k w_k |aided_k - o_k|^2 + mu ||g||^2
with w_k = 1 at DC/Nyquist and 2 elsewhere, i.e. the two-sided l2 norm.
The minimizer solves the real Nt x Nt system
  (Re(A^H W A) + mu I) g = Re(A^H W (o - c)),   A = diag(m r z) F_trunc
so taps are real by construction.
"""

from __future__ import annotations

import logging
import warnings
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from scripts.common.hteq_errors import DataError, DimensionError, SingularityError
from scripts.eqdesign.eq_filter import AidedResponse, EqDesignConfig, EqFilter, RSource
from scripts.spectra.spectra import (
    AtfDatabase,
    AtfSet,
    FrequencyResponse,
    delay_phase,
    one_sided_weights,
    require_same_grid,
)

logger = logging.getLogger(__name__)

SINGULAR_BIN_TOL = 1e-12


# =============================================================================
# Frequency-domain designs
# =============================================================================

def _first_singular_bin(y: np.ndarray, fr: FrequencyResponse) -> Optional[str]:
    small = np.flatnonzero(np.abs(y) < SINGULAR_BIN_TOL)
    if small.size == 0:
        return None
    k = int(small[0])
    return f"bin {k} ({fr.freqs_hz[k]:.1f} Hz)"


def ideal_filter(atf: AtfSet) -> FrequencyResponse:
    """G_eq = (o - c) / (m r) at every bin."""
    y = atf.m.bins * atf.r.bins
    where = _first_singular_bin(y, atf.grid)
    if where:
        raise SingularityError(f"|m r| below {SINGULAR_BIN_TOL:g} at {where}; ideal filter undefined")
    return atf.grid.with_bins((atf.o.bins - atf.c.bins) / y)


def design_freq_ls(atf: AtfSet, cfg: EqDesignConfig) -> EqFilter:
    """Per-bin ridge: G = conj(m r)(o - c) / (|m r|^2 + mu)."""
    y = atf.m.bins * atf.r.bins
    if cfg.mu == 0:
        where = _first_singular_bin(y, atf.grid)
        if where:
            raise SingularityError(f"mu = 0 and |m r| below {SINGULAR_BIN_TOL:g} at {where}")
    gains = np.conj(y) * (atf.o.bins - atf.c.bins) / (np.abs(y) ** 2 + cfg.mu)
    return EqFilter(config=cfg, r_source=RSource.TRUE_R, rate=atf.grid.rate, bins=atf.grid.with_bins(gains))


# =============================================================================
# Time-domain designs
# =============================================================================

def truncated_dft(n_bins: int, fft_size: int, n_taps: int) -> np.ndarray:
    """First Nt columns of the DFT matrix, one-sided rows."""
    k = np.arange(n_bins)[:, None]
    n = np.arange(n_taps)[None, :]
    return np.exp(-2j * np.pi * k * n / fft_size)


def design_rows(
    m: FrequencyResponse,
    r: FrequencyResponse,
    cfg: EqDesignConfig,
) -> np.ndarray:
    """A = D_m D_r Z_D F_trunc on the one-sided grid (n_bins x Nt)."""
    require_same_grid(m, r)
    if cfg.taps_Nt > m.fft_size:
        raise DimensionError(f"taps_Nt {cfg.taps_Nt} exceeds fft_size {m.fft_size}")
    if cfg.fft_size != m.fft_size:
        raise DimensionError(f"Config fft_size {cfg.fft_size} does not match data fft_size {m.fft_size}")
    z = delay_phase(m.fft_size, m.rate, -cfg.d_proc_seconds).bins
    F = truncated_dft(m.n_bins, m.fft_size, cfg.taps_Nt)
    return (m.bins * r.bins * z)[:, None] * F


def _normal_terms(rows: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w = one_sided_weights(rows.shape[0])
    weighted = rows.conj().T * w
    return (weighted @ rows).real, (weighted @ target).real


def _solve_normal(normal: np.ndarray, rhs: np.ndarray, mu: float) -> np.ndarray:
    system = normal + mu * np.eye(normal.shape[0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(system, rhs, assume_a="pos" if mu > 0 else "sym")
    except (scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as ex:
        raise SingularityError(f"Normal equations are singular or ill-conditioned (mu={mu:g}): {ex}") from ex


def _solve_time_ls(
    o: FrequencyResponse,
    c: FrequencyResponse,
    m: FrequencyResponse,
    r: FrequencyResponse,
    cfg: EqDesignConfig,
) -> np.ndarray:
    require_same_grid(o, c, m, r)
    rows = design_rows(m, r, cfg)
    normal, rhs = _normal_terms(rows, o.bins - c.bins)
    return _solve_normal(normal, rhs, cfg.mu)


def design_time_ls(atf: AtfSet, cfg: EqDesignConfig) -> EqFilter:
    """Nt real taps with full knowledge of the individual r."""
    taps = _solve_time_ls(atf.o, atf.c, atf.m, atf.r, cfg)
    return EqFilter(config=cfg, r_source=RSource.TRUE_R, rate=atf.grid.rate, taps=taps)


def design_time_ls_estimated(
    atf: AtfSet,
    r_hat: FrequencyResponse,
    cfg: EqDesignConfig,
    r_source: Optional[RSource] = None,
) -> EqFilter:
    """Same solve as design_time_ls, with r replaced by r_hat."""
    require_same_grid(atf.grid, r_hat)
    if r_source is None:
        is_sp = np.array_equal(r_hat.bins, atf.s.bins)
        r_source = RSource.SECONDARY_PATH_AS_R if is_sp else RSource.ESTIMATED_R
    taps = _solve_time_ls(atf.o, atf.c, atf.m, r_hat, cfg)
    return EqFilter(config=cfg, r_source=r_source, rate=atf.grid.rate, taps=taps)


def design_time_ls_ensemble(training: AtfDatabase, r_hat: FrequencyResponse, cfg: EqDesignConfig) -> EqFilter:
    """Individual r_hat with training-set averages of o, c and m."""
    training.require_sets(1, "Ensemble design")
    grid = training.grid
    require_same_grid(grid, r_hat)
    o, c, m = (grid.with_bins(training.stack(n).mean(axis=0)) for n in ("o", "c", "m"))
    taps = _solve_time_ls(o, c, m, r_hat, cfg)
    return EqFilter(config=cfg, r_source=RSource.ENSEMBLE, rate=grid.rate, taps=taps)


def design_gls(training: AtfDatabase, cfg: EqDesignConfig) -> EqFilter:
    """One common filter minimizing the mean residual over all training sets plus mu ||g||^2."""
    if training.J == 0:
        raise DataError("GLS design needs a non-empty training database")
    normal = np.zeros((cfg.taps_Nt, cfg.taps_Nt))
    rhs = np.zeros(cfg.taps_Nt)
    for atf in training.sets:
        rows = design_rows(atf.m, atf.r, cfg)
        n_j, b_j = _normal_terms(rows, atf.o.bins - atf.c.bins)
        normal += n_j
        rhs += b_j
    taps = _solve_normal(normal / training.J, rhs / training.J, cfg.mu)
    logger.debug(f"GLS filter over {training.J} set(s), ||g|| = {np.linalg.norm(taps):.4g}")
    return EqFilter(config=cfg, r_source=RSource.TRAINING_SET, rate=training.grid.rate, taps=taps)


# =============================================================================
# Evaluation of a design
# =============================================================================

def filter_response(flt: EqFilter, grid: FrequencyResponse) -> FrequencyResponse:
    """Effective response of a filter on the grid of `grid`."""
    return flt.response(grid.fft_size, grid.rate)


def aided_response(atf: AtfSet, flt: EqFilter) -> AidedResponse:
    """c + m G r, always with the set's true r."""
    grid = atf.grid
    g = filter_response(flt, grid)
    return AidedResponse(bins=grid.with_bins(atf.c.bins + atf.m.bins * g.bins * atf.r.bins))


def design_cost(
    atf: AtfSet,
    taps: np.ndarray,
    cfg: EqDesignConfig,
    r: Optional[FrequencyResponse] = None,
) -> float:
    """Two-sided quadratic objective of the time-domain design for given taps."""
    rows = design_rows(atf.m, atf.r if r is None else r, cfg)
    resid = rows @ np.asarray(taps, dtype=float) - (atf.o.bins - atf.c.bins)
    w = one_sided_weights(rows.shape[0])
    return float(np.sum(w * np.abs(resid) ** 2) + cfg.mu * np.sum(np.asarray(taps) ** 2))


def stationarity_residual(
    atfs: Sequence[AtfSet],
    taps: np.ndarray,
    cfg: EqDesignConfig,
    r: Optional[FrequencyResponse] = None,
) -> np.ndarray:
    """Gradient/2 of the (mean-over-sets) objective at taps; zero at the optimum."""
    g = np.asarray(taps, dtype=float)
    total = np.zeros_like(g)
    for atf in atfs:
        rows = design_rows(atf.m, atf.r if r is None else r, cfg)
        normal, rhs = _normal_terms(rows, atf.o.bins - atf.c.bins)
        total += normal @ g - rhs
    return total / len(atfs) + cfg.mu * g
