#!/usr/bin/env python3
"""
HTEQ Report - band summaries, curves, acceptance checks and report files

Report directory layout:
  summary.csv                  condition,subject,trial,band_low_hz,band_high_hz,mean_abs_err_db,std_db
  estimator_summary.csv        estimator,subject,trial,band_low_hz,band_high_hz,mean_abs_err_db,std_db
  curves/condition_<name>.csv  freq_hz,mean_db,std_db
  curves/estimator_<name>.csv  freq_hz,mean_db,std_db
  report.json                  schema hteq.eval_report.v1

Rows are ordered by condition (or estimator), then subject and trial, then
band; each group ends with an aggregate row whose subject and trial are "all".
Bands are (low, high], the first band includes DC. Numbers use %.10g.
The aggregate row pools the unflagged bins of every set in the band.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from scripts.common.hteq_errors import DataError
from scripts.common.hteq_io import fmt_report, write_csv, write_json
from scripts.eval.conditions import Condition
from scripts.eval.leave_one_out import EvalReport
from scripts.eval.level_error import BandErrorCurve, LevelError, band_mean_abs, band_values

logger = logging.getLogger(__name__)

EVAL_REPORT_SCHEMA_V1 = "hteq.eval_report.v1"

REPORT_BANDS: Tuple[Tuple[float, float], ...] = ((0.0, 1500.0), (1500.0, 6000.0), (6000.0, 8000.0))
SUMMARY_COLUMNS = ["condition", "subject", "trial", "band_low_hz", "band_high_hz", "mean_abs_err_db", "std_db"]
ESTIMATOR_COLUMNS = ["estimator"] + SUMMARY_COLUMNS[1:]
CURVE_COLUMNS = ["freq_hz", "mean_db", "std_db"]

ORDERING_BAND = (1500.0, 6000.0)
ESTIMATOR_BAND = (0.0, 6000.0)


# =============================================================================
# Summaries
# =============================================================================

@dataclass(frozen=True, eq=False)
class SummaryTables:
    condition_rows: List[List[str]]
    estimator_rows: List[List[str]]
    condition_curves: Dict[str, BandErrorCurve]
    estimator_curves: Dict[str, BandErrorCurve]


def _band_row(label: str, subject: str, trial: str, band: Tuple[float, float], errors: Sequence[LevelError]) -> List[str]:
    vals = band_values(errors, band)
    if vals.size:
        mean_abs, std = float(np.mean(np.abs(vals))), float(np.std(vals))
    else:
        mean_abs, std = float("nan"), float("nan")
    return [label, subject, trial, fmt_report(band[0]), fmt_report(band[1]), fmt_report(mean_abs), fmt_report(std)]


def _group_rows(label: str, keyed: Sequence[Tuple[str, int, LevelError]], bands) -> List[List[str]]:
    rows: List[List[str]] = []
    for subject, trial, err in keyed:
        for band in bands:
            rows.append(_band_row(label, subject, str(trial), band, [err]))
    for band in bands:
        rows.append(_band_row(label, "all", "all", band, [e for _, _, e in keyed]))
    return rows


def summarize(
    report: EvalReport,
    bands: Sequence[Tuple[float, float]] = REPORT_BANDS,
) -> SummaryTables:
    """Per-set and aggregate band statistics plus mean/std curves for every condition and estimator."""
    if not report.evaluations:
        raise DataError("Cannot summarize an empty evaluation report")

    condition_rows: List[List[str]] = []
    condition_curves: Dict[str, BandErrorCurve] = {}
    for cond in report.conditions:
        keyed = [
            (ev.subject_id, ev.trial, ev.condition(cond).error)
            for ev in report.evaluations
            if ev.condition(cond) is not None
        ]
        condition_rows.extend(_group_rows(cond.value, keyed, bands))
        condition_curves[cond.value] = report.condition_curve(cond)

    estimator_rows: List[List[str]] = []
    estimator_curves: Dict[str, BandErrorCurve] = {}
    for name in report.estimator_names:
        keyed = [(ev.subject_id, ev.trial, ev.estimator_errors[name]) for ev in report.evaluations if name in ev.estimator_errors]
        estimator_rows.extend(_group_rows(name, keyed, bands))
        estimator_curves[name] = report.estimator_curve(name)

    return SummaryTables(
        condition_rows=condition_rows,
        estimator_rows=estimator_rows,
        condition_curves=condition_curves,
        estimator_curves=estimator_curves,
    )


# =============================================================================
# Acceptance checks
# =============================================================================

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def condition_band_means(report: EvalReport, band: Tuple[float, float] = ORDERING_BAND) -> Dict[Condition, float]:
    return {cond: band_mean_abs(report.condition_errors(cond), band) for cond in report.conditions}


def acceptance_checks(report: EvalReport) -> List[CheckResult]:
    """
    Qualitative ordering checks over an evaluation report.

    1.5-6 kHz mean |eps|: perfect_eq < idv_pca < idv_sp, idv_pca < gls, and
    occluded worse than every designed condition. 0-6 kHz mean |r error|: the
    combined estimator beats s-as-r and the training-mean r.
    """
    m = condition_band_means(report)
    checks: List[CheckResult] = []

    def order(name: str, lo: Condition, hi: Condition) -> None:
        if lo not in m or hi not in m:
            checks.append(CheckResult(name, False, f"missing condition {lo.value if lo not in m else hi.value}"))
            return
        checks.append(
            CheckResult(name, m[lo] < m[hi], f"{lo.value}={m[lo]:.3f} dB vs {hi.value}={m[hi]:.3f} dB")
        )

    order("perfect_eq_beats_idv_pca", Condition.PERFECT_EQ, Condition.IDV_PCA)
    order("idv_pca_beats_idv_sp", Condition.IDV_PCA, Condition.IDV_SP)
    order("idv_pca_beats_gls", Condition.IDV_PCA, Condition.GLS)
    designed = [c for c in (Condition.PERFECT_EQ, Condition.IDV_PCA, Condition.IDV_SP, Condition.GLS) if c in m]
    if Condition.OCCLUDED in m and designed:
        worst = max(m[c] for c in designed)
        checks.append(
            CheckResult(
                "occluded_is_worst",
                m[Condition.OCCLUDED] > worst,
                f"occluded={m[Condition.OCCLUDED]:.3f} dB vs worst designed={worst:.3f} dB",
            )
        )

    names = report.estimator_names
    if "combined" in names:
        combined = band_mean_abs(report.estimator_errors("combined"), ESTIMATOR_BAND)
        for baseline in ("secondary_path", "ensemble_mean"):
            if baseline not in names:
                continue
            other = band_mean_abs(report.estimator_errors(baseline), ESTIMATOR_BAND)
            checks.append(
                CheckResult(
                    f"combined_beats_{baseline}",
                    combined < other,
                    f"combined={combined:.3f} dB vs {baseline}={other:.3f} dB (0-6 kHz)",
                )
            )

    for chk in checks:
        level = logging.INFO if chk.passed else logging.WARNING
        logger.log(level, f"check {chk.name}: {'PASS' if chk.passed else 'FAIL'} ({chk.detail})")
    return checks


# =============================================================================
# Files
# =============================================================================

def _curve_rows(curve: BandErrorCurve) -> List[List[str]]:
    return [
        [fmt_report(f), fmt_report(m), fmt_report(s)]
        for f, m, s in zip(curve.freqs_hz, curve.mean_db, curve.std_db)
    ]


def write_report(
    report: EvalReport,
    out_dir: Path,
    checks: Optional[Sequence[CheckResult]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> SummaryTables:
    """Write the report directory. Output depends only on the report contents."""
    tables = summarize(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves_dir = out_dir / "curves"
    curves_dir.mkdir(exist_ok=True)

    write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, tables.condition_rows)
    write_csv(out_dir / "estimator_summary.csv", ESTIMATOR_COLUMNS, tables.estimator_rows)
    for name, curve in tables.condition_curves.items():
        write_csv(curves_dir / f"condition_{name}.csv", CURVE_COLUMNS, _curve_rows(curve))
    for name, curve in tables.estimator_curves.items():
        write_csv(curves_dir / f"estimator_{name}.csv", CURVE_COLUMNS, _curve_rows(curve))

    doc: Dict[str, Any] = {
        "schema": EVAL_REPORT_SCHEMA_V1,
        "config": report.config,
        "config_fingerprint": report.config_fingerprint(),
        "database_fingerprint": report.database_fingerprint,
        "folds": [f.to_dict() for f in report.folds],
        "sets_evaluated": len(report.evaluations),
        "flagged_bins": report.flagged_bins(),
        "fallback_bins": {f"{ev.subject_id}_t{ev.trial}": ev.fallback_bins for ev in report.evaluations},
        "bands_hz": [list(b) for b in REPORT_BANDS],
    }
    if checks is not None:
        doc["acceptance"] = [c.to_dict() for c in checks]
        doc["acceptance_passed"] = all(c.passed for c in checks)
    if extra:
        doc.update(extra)
    write_json(out_dir / "report.json", doc)
    logger.info(f"Wrote report for {len(report.evaluations)} set(s) to {out_dir}")
    return tables
