"""
HTEQ Conditions - aided responses of one held-out set under every equalization condition

Conditions (fixed order, used for reports):
  open_ear    o itself (reference, eps == 0)
  occluded    zero filter, aided = c
  perfect_eq  time-domain LS with the set's true r
  idv_pca     time-domain LS with r_hat from the combined estimator
  idv_sp      time-domain LS with s used as r
  gls         one filter designed over the training sets
  idv_ensemble (optional) r_hat with training-mean o, c, m

Every aided response is c + m G r with the set's TRUE r.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from scripts.common.hteq_errors import LeakageError
from scripts.drp.combined_estimator import CombinedEstimator, estimate_combined
from scripts.eqdesign.eq_filter import AidedResponse, EqDesignConfig, EqFilter, RSource
from scripts.eqdesign.ls_design import (
    aided_response,
    design_gls,
    design_time_ls,
    design_time_ls_ensemble,
    design_time_ls_estimated,
)
from scripts.eval.level_error import LevelError, level_error
from scripts.spectra.spectra import AtfDatabase, AtfSet, FrequencyResponse

logger = logging.getLogger(__name__)


class Condition(str, Enum):
    OPEN_EAR = "open_ear"
    OCCLUDED = "occluded"
    PERFECT_EQ = "perfect_eq"
    IDV_PCA = "idv_pca"
    IDV_SP = "idv_sp"
    GLS = "gls"
    IDV_ENSEMBLE = "idv_ensemble"


CORE_CONDITIONS: Tuple[Condition, ...] = (
    Condition.OPEN_EAR,
    Condition.OCCLUDED,
    Condition.PERFECT_EQ,
    Condition.IDV_PCA,
    Condition.IDV_SP,
    Condition.GLS,
)


@dataclass(frozen=True, eq=False)
class ConditionReport:
    condition: Condition
    subject_id: str
    trial: int
    aided: AidedResponse
    error: LevelError


def check_held_out(atf: AtfSet, training: AtfDatabase) -> None:
    """Raise LeakageError if the held-out set's subject or data is part of training."""
    if atf.subject_id in training.subjects():
        raise LeakageError(f"Held-out subject {atf.subject_id} is present in the training database")
    if atf.fingerprint() in set(training.set_fingerprints().values()):
        raise LeakageError(f"Held-out set {atf.subject_id} trial {atf.trial} is present in the training database")


def zero_filter(cfg: EqDesignConfig, atf: AtfSet) -> EqFilter:
    return EqFilter(config=cfg, r_source=RSource.TRUE_R, rate=atf.grid.rate, taps=np.zeros(cfg.taps_Nt))


def evaluate_conditions(
    atf: AtfSet,
    estimator: CombinedEstimator,
    training: AtfDatabase,
    cfg: EqDesignConfig,
    gls_filter: Optional[EqFilter] = None,
    include_ensemble: bool = False,
    r_hat: Optional[FrequencyResponse] = None,
) -> List[ConditionReport]:
    """
    Aided response and dB error of one held-out set under each condition.

    `gls_filter` and `r_hat` may be passed in when already computed for this fold.
    """
    check_held_out(atf, training)
    if r_hat is None:
        r_hat = estimate_combined(estimator, atf.s)
    if gls_filter is None:
        gls_filter = design_gls(training, cfg)

    filters: Dict[Condition, EqFilter] = {
        Condition.OCCLUDED: zero_filter(cfg, atf),
        Condition.PERFECT_EQ: design_time_ls(atf, cfg),
        Condition.IDV_PCA: design_time_ls_estimated(atf, r_hat, cfg, r_source=RSource.ESTIMATED_R),
        Condition.IDV_SP: design_time_ls_estimated(atf, atf.s, cfg, r_source=RSource.SECONDARY_PATH_AS_R),
        Condition.GLS: gls_filter,
    }
    if include_ensemble:
        filters[Condition.IDV_ENSEMBLE] = design_time_ls_ensemble(training, r_hat, cfg)

    order = CORE_CONDITIONS + ((Condition.IDV_ENSEMBLE,) if include_ensemble else ())
    reports: List[ConditionReport] = []
    for cond in order:
        if cond is Condition.OPEN_EAR:
            aided = AidedResponse(bins=atf.o)
        else:
            aided = aided_response(atf, filters[cond])
        reports.append(
            ConditionReport(
                condition=cond,
                subject_id=atf.subject_id,
                trial=atf.trial,
                aided=aided,
                error=level_error(atf.o, aided.bins),
            )
        )
    logger.debug(f"Evaluated {len(reports)} condition(s) for {atf.subject_id} trial {atf.trial}")
    return reports
