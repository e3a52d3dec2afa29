#!/usr/bin/env python3
"""
HTEQ Leave-One-Subject-Out evaluation

For every subject k (sorted by id):
  training = all sets of the other subjects
  train the combined estimator and the GLS filter on training only
  for every set of subject k: evaluate all conditions, compare r estimators

Hygiene: a fold whose held-out sets overlap the training sets (by subject or
content fingerprint) raises LeakageError. Each fold records the fingerprint of
its training data so the report can be audited.

Estimator comparison (level error of r_hat against the true r):
  combined         ridge <= split, PCA on the split band, ridge above it
  ridge            ridge on the whole grid
  pca              PCA trained from 0 Hz to the PCA upper edge, ridge above it
  secondary_path   s used as r_hat
  ensemble_mean    training-mean r

Folds are independent; with workers > 1 they run on a thread pool and are
collected in subject order, so the report does not depend on scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from scripts.common.hteq_errors import DataError, LeakageError
from scripts.common.hteq_io import dumps_canonical, sha256_bytes
from scripts.drp.bands import split_masks
from scripts.drp.combined_estimator import (
    CombinedEstimator,
    EstimatorConfig,
    estimate_combined,
    fallback_mask,
    train_combined,
)
from scripts.drp.pca_estimator import estimate_pca, train_pca
from scripts.drp.ridge_estimator import estimate_ridge
from scripts.eqdesign.eq_filter import EqDesignConfig
from scripts.eqdesign.ls_design import design_gls
from scripts.eval.conditions import CORE_CONDITIONS, Condition, ConditionReport, evaluate_conditions
from scripts.eval.level_error import BandErrorCurve, LevelError, aggregate_curve, level_error
from scripts.spectra.spectra import AtfDatabase, AtfSet, FrequencyResponse

logger = logging.getLogger(__name__)

ESTIMATOR_NAMES: Tuple[str, ...] = ("combined", "ridge", "pca", "secondary_path", "ensemble_mean")


# =============================================================================
# Report types
# =============================================================================

@dataclass(frozen=True, eq=False)
class SetEvaluation:
    subject_id: str
    trial: int
    conditions: Tuple[ConditionReport, ...]
    estimator_errors: Dict[str, LevelError]
    fallback_bins: int

    def condition(self, cond: Condition) -> Optional[ConditionReport]:
        for rep in self.conditions:
            if rep.condition is cond:
                return rep
        return None


@dataclass(frozen=True)
class FoldRecord:
    held_out_subject: str
    held_out_sets: int
    training_sets: int
    training_fingerprint: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "held_out_subject": self.held_out_subject,
            "held_out_sets": self.held_out_sets,
            "training_sets": self.training_sets,
            "training_fingerprint": self.training_fingerprint,
        }


@dataclass(frozen=True, eq=False)
class EvalReport:
    freqs_hz: np.ndarray
    evaluations: Tuple[SetEvaluation, ...]
    folds: Tuple[FoldRecord, ...]
    config: Dict[str, Any]
    database_fingerprint: str = ""

    @property
    def conditions(self) -> Tuple[Condition, ...]:
        present = {rep.condition for ev in self.evaluations for rep in ev.conditions}
        return tuple(c for c in Condition if c in present)

    @property
    def estimator_names(self) -> Tuple[str, ...]:
        present = {name for ev in self.evaluations for name in ev.estimator_errors}
        return tuple(n for n in ESTIMATOR_NAMES if n in present)

    def condition_errors(self, cond: Condition) -> List[LevelError]:
        out = []
        for ev in self.evaluations:
            rep = ev.condition(cond)
            if rep is not None:
                out.append(rep.error)
        return out

    def estimator_errors(self, name: str) -> List[LevelError]:
        return [ev.estimator_errors[name] for ev in self.evaluations if name in ev.estimator_errors]

    def condition_curve(self, cond: Condition) -> BandErrorCurve:
        return aggregate_curve(self.condition_errors(cond))

    def estimator_curve(self, name: str) -> BandErrorCurve:
        return aggregate_curve(self.estimator_errors(name))

    def flagged_bins(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for cond in self.conditions:
            counts[cond.value] = sum(e.n_flagged for e in self.condition_errors(cond))
        return counts

    def config_fingerprint(self) -> str:
        return sha256_bytes(dumps_canonical(self.config).encode("utf-8"))


# =============================================================================
# Estimator comparison
# =============================================================================

def estimator_candidates(
    est: CombinedEstimator,
    training: AtfDatabase,
    atf: AtfSet,
    pca_wide_bins: Optional[np.ndarray] = None,
) -> Dict[str, FrequencyResponse]:
    """Every r_hat compared in the report, for one held-out set."""
    s = atf.s
    r_ridge = estimate_ridge(est.ridge, s)
    out: Dict[str, FrequencyResponse] = {
        "combined": estimate_combined(est, s),
        "ridge": r_ridge,
    }
    if pca_wide_bins is not None:
        above = split_masks(s, 0.0, est.upper_hz)[2]
        out["pca"] = s.with_bins(np.where(above, r_ridge.bins, pca_wide_bins))
    out["secondary_path"] = s
    out["ensemble_mean"] = s.with_bins(training.stack("r").mean(axis=0))
    return out


# =============================================================================
# Folds
# =============================================================================

def _run_fold(
    db: AtfDatabase,
    subject_id: str,
    est_cfg: EstimatorConfig,
    eq_cfg: EqDesignConfig,
    include_ensemble: bool,
) -> Tuple[FoldRecord, List[SetEvaluation]]:
    training = db.without_subject(subject_id)
    held_out = db.for_subject(subject_id)
    train_prints = set(training.set_fingerprints().values())
    overlap = [key for key, fp in held_out.set_fingerprints().items() if fp in train_prints]
    if overlap:
        raise LeakageError(f"Fold {subject_id}: held-out sets {overlap} also appear in training")

    est = train_combined(training, est_cfg)
    gls = design_gls(training, eq_cfg)
    try:
        pca_wide = train_pca(training, est_cfg.K, band=(0.0, est.upper_hz))
    except DataError as ex:
        logger.warning(f"Fold {subject_id}: wide-band PCA comparison skipped ({ex})")
        pca_wide = None

    evaluations: List[SetEvaluation] = []
    for atf in held_out:
        r_hat = estimate_combined(est, atf.s)
        reports = evaluate_conditions(
            atf, est, training, eq_cfg, gls_filter=gls, include_ensemble=include_ensemble, r_hat=r_hat
        )
        wide_bins = estimate_pca(pca_wide, atf.s).bins if pca_wide is not None else None
        candidates = estimator_candidates(est, training, atf, pca_wide_bins=wide_bins)
        errors = {name: level_error(atf.r, fr) for name, fr in candidates.items()}
        evaluations.append(
            SetEvaluation(
                subject_id=atf.subject_id,
                trial=atf.trial,
                conditions=tuple(reports),
                estimator_errors=errors,
                fallback_bins=int(np.count_nonzero(fallback_mask(est, atf.s))),
            )
        )

    record = FoldRecord(
        held_out_subject=subject_id,
        held_out_sets=held_out.J,
        training_sets=training.J,
        training_fingerprint=training.fingerprint(),
    )
    return record, evaluations


def leave_one_out(
    db: AtfDatabase,
    est_cfg: EstimatorConfig,
    eq_cfg: EqDesignConfig,
    workers: int = 1,
    include_ensemble: bool = False,
    progress: bool = False,
) -> EvalReport:
    """Leave-one-subject-out evaluation of every condition over the whole database."""
    subjects = sorted(db.subjects())
    if len(subjects) < 2:
        raise DataError(f"Leave-one-out needs at least 2 subjects, database has {len(subjects)}")
    if db.grid.fft_size != eq_cfg.fft_size:
        raise DataError(
            f"Database Nf={db.grid.fft_size} does not match eq fft_size={eq_cfg.fft_size}; "
            "set --fft-size to the database grid"
        )

    logger.info(f"Leave-one-out over {len(subjects)} subject(s), {db.J} set(s), workers={workers}")

    def run(sid: str) -> Tuple[FoldRecord, List[SetEvaluation]]:
        return _run_fold(db, sid, est_cfg, eq_cfg, include_ensemble)

    bar = tqdm(total=len(subjects), desc="folds", unit="subject", disable=not progress)
    results: List[Tuple[FoldRecord, List[SetEvaluation]]] = []
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for result in pool.map(run, subjects):
                    results.append(result)
                    bar.update(1)
        else:
            for sid in subjects:
                results.append(run(sid))
                bar.update(1)
    finally:
        bar.close()

    folds = tuple(rec for rec, _ in results)
    evaluations = sorted((ev for _, evs in results for ev in evs), key=lambda ev: (ev.subject_id, ev.trial))
    config = {
        "estimator": est_cfg.to_dict(),
        "eq_design": eq_cfg.to_dict(),
        "include_ensemble": bool(include_ensemble),
        "conditions": [c.value for c in CORE_CONDITIONS]
        + ([Condition.IDV_ENSEMBLE.value] if include_ensemble else []),
    }
    return EvalReport(
        freqs_hz=db.grid.freqs_hz,
        evaluations=tuple(evaluations),
        folds=folds,
        config=config,
        database_fingerprint=db.fingerprint(),
    )
