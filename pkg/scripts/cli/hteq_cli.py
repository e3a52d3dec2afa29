#!/usr/bin/env python3
"""
HTEQ CLI - batch front end for hear-through equalization experiments

Usage:
  python scripts/cli/hteq_cli.py synth  --out data/synth [--subjects 18 --trials 3 --seed 0] [--force]
  python scripts/cli/hteq_cli.py train  --database data/synth [--out out/model.json] [--K 12 --split-hz 1500]
  python scripts/cli/hteq_cli.py design --database data/synth --subject S01 --trial 1 [--model out/model.json]
                                        [--r-source pca|true|sp] [--out out/]
  python scripts/cli/hteq_cli.py eval   [--database data/synth] [--out out/report] [--workers 4] [--check]
  python scripts/cli/hteq_cli.py --version

Common flags: --config PATH, --log-level LEVEL, --log-file PATH, --quiet.
Flags override environment (HTEQ_*), which overrides the YAML config.

Exit codes:
  0 = success
  2 = configuration or usage error
  3 = data error (malformed files, unknown subject, too few sets, leakage)
  4 = numerical failure (singular solve) or failed --check

Errors are reported on stderr as one line:
  error code=<n> type=<ExceptionName> message=<text>
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from scripts.common.hteq_errors import AcceptanceError, ConfigError, DataError, HteqError, SchemaError  # noqa: E402
from scripts.common.hteq_io import fmt_report, read_json, write_csv, write_json  # noqa: E402
from scripts.common.hteq_logging import configure_logging  # noqa: E402
from scripts.cli.run_config import RunConfig, resolve_run_config, version_text  # noqa: E402
from scripts.drp.combined_estimator import (  # noqa: E402
    CombinedEstimator,
    estimate_combined,
    estimator_from_json,
    estimator_to_json,
    train_combined,
)
from scripts.eqdesign.eq_filter import RSource  # noqa: E402
from scripts.eqdesign.ls_design import design_time_ls, design_time_ls_estimated  # noqa: E402
from scripts.eval.leave_one_out import leave_one_out  # noqa: E402
from scripts.eval.level_error import level_error  # noqa: E402
from scripts.eval.summarize import acceptance_checks, write_report  # noqa: E402
from scripts.spectra.atf_store import MANIFEST_NAME, SETS_DIR, load_database  # noqa: E402
from scripts.spectra.spectra import AtfDatabase  # noqa: E402
from scripts.synthdata.generate_database import export_database, generate_database  # noqa: E402

logger = logging.getLogger("hteq")

DIAGNOSTIC_COLUMNS = ["freq_hz", "re_r", "im_r", "re_r_hat", "im_r_hat", "err_db"]
R_SOURCES = {"pca": RSource.ESTIMATED_R, "true": RSource.TRUE_R, "sp": RSource.SECONDARY_PATH_AS_R}


# =============================================================================
# Helpers
# =============================================================================

def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    """Map CLI flags onto RunConfig sections; unset flags are None and ignored."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    fft = get("fft_size")
    return {
        "paths": {"database_dir": get("database"), "output_dir": get("out_dir")},
        "estimator": {
            "K": get("K"),
            "split_hz": get("split_hz"),
            "mu": get("mu_est"),
            "pca_high_hz": get("pca_high_hz"),
        },
        "eq_design": {
            "mu": get("mu"),
            "d_proc_seconds": get("d_proc"),
            "taps_Nt": get("taps"),
            "fft_size": fft,
        },
        "generator": {
            "n_subjects": get("subjects"),
            "n_trials": get("trials"),
            "seed": get("seed"),
            "rate_hz": get("rate_hz"),
            "fft_size": fft,
        },
        "run": {
            "workers": get("workers"),
            "log_level": "WARNING" if get("quiet") else get("log_level"),
        },
    }


def _require_database(cfg: RunConfig) -> AtfDatabase:
    if not cfg.paths.database_dir:
        raise ConfigError("No database given: pass --database or set paths.database_dir / HTEQ_DATABASE_DIR")
    db = load_database(Path(cfg.paths.database_dir))
    logger.info(f"Loaded {db.J} set(s) of {len(db.subjects())} subject(s) from {cfg.paths.database_dir}")
    return db


def _follow_database_grid(cfg: RunConfig, db: AtfDatabase, args: argparse.Namespace) -> RunConfig:
    """Without an explicit --fft-size the design grid follows the database."""
    nf = db.grid.fft_size
    if getattr(args, "fft_size", None) is not None or cfg.eq_design.fft_size == nf:
        return cfg
    logger.info(f"eq_design.fft_size {cfg.eq_design.fft_size} -> {nf} to match the database grid")
    return dataclasses.replace(cfg, eq_design=dataclasses.replace(cfg.eq_design, fft_size=nf))


def _clear_database_dir(out_dir: Path, force: bool) -> None:
    if not out_dir.exists() or not any(out_dir.iterdir()):
        return
    if not force:
        raise ConfigError(f"Output directory {out_dir} is not empty (use --force to overwrite)")
    manifest = out_dir / MANIFEST_NAME
    if manifest.is_file():
        manifest.unlink()
    sets_dir = out_dir / SETS_DIR
    if sets_dir.is_dir():
        for p in sets_dir.glob("*.csv"):
            p.unlink()


# =============================================================================
# Commands
# =============================================================================

def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    out_dir = Path(cfg.paths.output_dir)
    _clear_database_dir(out_dir, args.force)
    db = export_database(cfg.generator, out_dir, extra_manifest={"run_config": cfg.to_dict()})
    print(
        f"[HTEQ] synth dir={out_dir} subjects={len(db.subjects())} sets={db.J} "
        f"fft_size={cfg.generator.fft_size} rate_hz={cfg.generator.rate_hz:g} seed={cfg.generator.seed}"
    )
    return 0


def cmd_train(cfg: RunConfig, args: argparse.Namespace) -> int:
    db = _require_database(cfg)
    est = train_combined(db, cfg.estimator)
    out = Path(args.model_out) if args.model_out else Path(cfg.paths.output_dir) / "model.json"
    write_json(out, estimator_to_json(est, extra={"run_config": cfg.to_dict()}))
    print(f"[HTEQ] train model={out} sets={db.J} K={cfg.estimator.K} split_hz={cfg.estimator.split_hz:g}")
    return 0


def _design_estimator(cfg: RunConfig, db: AtfDatabase, subject: str, model_path: Optional[str]) -> CombinedEstimator:
    if model_path:
        try:
            doc = read_json(Path(model_path))
        except (OSError, ValueError) as ex:
            raise SchemaError(f"{model_path}: cannot read estimator model ({ex})") from ex
        est = estimator_from_json(doc)
        logger.info(f"Using estimator model {model_path}")
        return est
    logger.info(f"No --model given; training on all subjects except {subject}")
    return train_combined(db.without_subject(subject), cfg.estimator)


def cmd_design(cfg: RunConfig, args: argparse.Namespace) -> int:
    db = _require_database(cfg)
    cfg = _follow_database_grid(cfg, db, args)
    atf = db.get(args.subject, args.trial)
    if atf is None:
        raise DataError(f"Unknown subject/trial: {args.subject} trial {args.trial}")

    source = R_SOURCES[args.r_source]
    if source is RSource.TRUE_R:
        r_hat = atf.r
        flt = design_time_ls(atf, cfg.eq_design)
    elif source is RSource.SECONDARY_PATH_AS_R:
        r_hat = atf.s
        flt = design_time_ls_estimated(atf, atf.s, cfg.eq_design, r_source=source)
    else:
        est = _design_estimator(cfg, db, atf.subject_id, args.model)
        r_hat = estimate_combined(est, atf.s)
        flt = design_time_ls_estimated(atf, r_hat, cfg.eq_design, r_source=source)

    out_dir = Path(cfg.paths.output_dir)
    stem = f"filter_{atf.subject_id}_t{atf.trial}_{args.r_source}"
    doc = flt.to_json_dict()
    doc["run_config"] = cfg.to_dict()
    doc["subject_id"] = atf.subject_id
    doc["trial"] = atf.trial
    write_json(out_dir / f"{stem}.json", doc)

    err = level_error(atf.r, r_hat)
    rows: List[List[str]] = []
    for f, r, rh, e in zip(atf.grid.freqs_hz, atf.r.bins, r_hat.bins, err.db):
        rows.append([fmt_report(x) for x in (f, r.real, r.imag, rh.real, rh.imag, e)])
    write_csv(out_dir / f"{stem}_diagnostic.csv", DIAGNOSTIC_COLUMNS, rows)
    print(f"[HTEQ] design filter={out_dir / (stem + '.json')} r_source={flt.r_source.value} taps={cfg.eq_design.taps_Nt}")
    return 0


def cmd_eval(cfg: RunConfig, args: argparse.Namespace) -> int:
    if cfg.paths.database_dir:
        db = _require_database(cfg)
    else:
        logger.info(f"No database given; generating synthetic database (seed={cfg.generator.seed})")
        db = generate_database(cfg.generator)
    cfg = _follow_database_grid(cfg, db, args)

    report = leave_one_out(
        db,
        cfg.estimator,
        cfg.eq_design,
        workers=cfg.run.workers,
        include_ensemble=args.include_ensemble,
        progress=not args.quiet,
    )
    checks = acceptance_checks(report) if args.check else None
    out_dir = Path(cfg.paths.output_dir)
    write_report(report, out_dir, checks=checks, extra={"run_config": cfg.to_dict()})
    print(f"[HTEQ] eval report={out_dir} sets={len(report.evaluations)} conditions={len(report.conditions)}")

    if checks is not None:
        failed = [c.name for c in checks if not c.passed]
        if failed:
            raise AcceptanceError(f"{len(failed)} acceptance check(s) failed: {', '.join(failed)}")
        print(f"[HTEQ] all {len(checks)} acceptance checks passed")
    return 0


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Path to config YAML.")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR.")
    common.add_argument("--log-file", default=None, help="Also write the log to this file.")
    common.add_argument("--quiet", action="store_true", help="Warnings only, no progress bar.")

    eq = argparse.ArgumentParser(add_help=False)
    eq.add_argument("--mu", type=float, default=None, help="Tikhonov weight of the filter design.")
    eq.add_argument("--d-proc", type=float, default=None, help="Processing delay in seconds.")
    eq.add_argument("--taps", type=int, default=None, help="Filter length Nt.")
    eq.add_argument("--fft-size", type=int, default=None, help="FFT size Nf.")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--K", type=int, default=None, help="Principal components.")
    est.add_argument("--split-hz", type=float, default=None, help="Ridge/PCA split frequency.")
    est.add_argument("--mu-est", type=float, default=None, help="Ridge regularization.")
    est.add_argument("--pca-high-hz", type=float, default=None, help="Upper edge of the PCA band.")

    db = argparse.ArgumentParser(add_help=False)
    db.add_argument("--database", default=None, help="ATF database directory.")

    ap = argparse.ArgumentParser(prog="hteq", description="Hear-through equalization toolkit.")
    ap.add_argument("--version", action="version", version=version_text())
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="Generate a synthetic ATF database.")
    p.add_argument("--out", dest="out_dir", default=None, help="Database directory to write.")
    p.add_argument("--subjects", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rate-hz", type=float, default=None)
    p.add_argument("--fft-size", type=int, default=None)
    p.add_argument("--force", action="store_true", help="Overwrite a non-empty output directory.")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", parents=[common, db, est], help="Train the combined r estimator.")
    p.add_argument("--out", dest="model_out", default=None, help="Model file (default <output_dir>/model.json).")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("design", parents=[common, db, est, eq], help="Design one subject's filter.")
    p.add_argument("--subject", required=True)
    p.add_argument("--trial", type=int, default=1)
    p.add_argument("--r-source", choices=sorted(R_SOURCES), default="pca")
    p.add_argument("--model", default=None, help="Estimator model file (default: train leave-subject-out).")
    p.add_argument("--out", dest="out_dir", default=None, help="Output directory.")
    p.set_defaults(handler=cmd_design)

    p = sub.add_parser("eval", parents=[common, db, est, eq], help="Leave-one-subject-out evaluation.")
    p.add_argument("--out", dest="out_dir", default=None, help="Report directory.")
    p.add_argument("--workers", type=int, default=None, help="Parallel folds.")
    p.add_argument("--seed", type=int, default=None, help="Seed of the synthetic database (no --database).")
    p.add_argument("--check", action="store_true", help="Exit 4 unless all acceptance checks pass.")
    p.add_argument("--include-ensemble", action="store_true", help="Also evaluate the ensemble-average design.")
    p.set_defaults(handler=cmd_eval)
    return ap


def report_error(ex: HteqError) -> int:
    message = " ".join(str(ex).split())
    print(f"error code={ex.exit_code} type={type(ex).__name__} message={message}", file=sys.stderr)
    return ex.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)

    try:
        cfg = resolve_run_config(args.config, overrides=_overrides(args))
        log_file = Path(args.log_file) if args.log_file else None
        configure_logging(cfg.run.log_level, log_file)
        return args.handler(cfg, args)
    except HteqError as ex:
        return report_error(ex)


if __name__ == "__main__":
    raise SystemExit(main())
