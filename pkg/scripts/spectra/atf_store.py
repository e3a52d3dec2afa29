#!/usr/bin/env python3
"""
HTEQ ATF Database Store

Purpose:
- Read and write the AtfDatabase directory format
- Accept real measured data (frequency or impulse-response CSVs) and synthetic exports alike

Layout:
  <database_dir>/
    manifest.json          schema, rate_hz, fft_size, domain, set list (+ optional generator echo)
    sets/
      <subject>_t<trial>.csv

Frequency CSV (domain = "frequency"):
  bin_index, re_o, im_o, re_c, im_c, re_m, im_m, re_r, im_r, re_s, im_s

Impulse-response CSV (domain = "time"), converted with ir_to_fr at load:
  sample_index, o, c, m, r, s

Malformed input raises SchemaError with file:line.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from scripts.common.hteq_errors import DataError, SchemaError
from scripts.common.hteq_io import fmt_exact, read_json, write_csv, write_json
from scripts.spectra.spectra import (
    PATH_NAMES,
    AtfDatabase,
    AtfSet,
    FrequencyResponse,
    ImpulseResponse,
    SampleRate,
    ir_to_fr,
)

logger = logging.getLogger(__name__)

DATABASE_SCHEMA_V1 = "hteq.atf_database.v1"
MANIFEST_NAME = "manifest.json"
SETS_DIR = "sets"

FREQ_COLUMNS = ["bin_index"] + [f"{part}_{n}" for n in PATH_NAMES for part in ("re", "im")]
TIME_COLUMNS = ["sample_index"] + list(PATH_NAMES)


def set_file_name(subject_id: str, trial: int) -> str:
    return f"{subject_id}_t{int(trial)}.csv"


# =============================================================================
# Writing
# =============================================================================

def save_database(
    db: AtfDatabase,
    out_dir: Path,
    extra_manifest: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write db as manifest + frequency CSVs. Returns the manifest path."""
    if db.J == 0:
        raise DataError("Refusing to write an empty database")
    grid = db.grid
    sets_dir = out_dir / SETS_DIR
    sets_dir.mkdir(parents=True, exist_ok=True)

    entries: List[Dict[str, Any]] = []
    for st in db.sets:
        name = set_file_name(st.subject_id, st.trial)
        rows = []
        for k in range(grid.n_bins):
            row: List[str] = [str(k)]
            for n in PATH_NAMES:
                v = st.path(n).bins[k]
                row.extend([fmt_exact(v.real), fmt_exact(v.imag)])
            rows.append(row)
        write_csv(sets_dir / name, FREQ_COLUMNS, rows)
        entries.append({"subject_id": st.subject_id, "trial": st.trial, "file": f"{SETS_DIR}/{name}"})

    manifest: Dict[str, Any] = {
        "schema": DATABASE_SCHEMA_V1,
        "domain": "frequency",
        "rate_hz": grid.rate.hertz,
        "fft_size": grid.fft_size,
        "subjects": db.subjects(),
        "sets": entries,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    manifest_path = out_dir / MANIFEST_NAME
    write_json(manifest_path, manifest)
    logger.info(f"Wrote {db.J} set(s) to {out_dir}")
    return manifest_path


# =============================================================================
# Reading
# =============================================================================

def _require(manifest: Dict[str, Any], key: str, path: Path) -> Any:
    if key not in manifest:
        raise SchemaError(f"{path}: manifest missing required key '{key}'")
    return manifest[key]


def _read_lines(path: Path) -> List[str]:
    """Decode a set file line by line so encoding errors carry their line number."""
    try:
        data = path.read_bytes()
    except OSError as ex:
        raise SchemaError(f"{path}: cannot read set file ({ex})") from ex
    lines: List[str] = []
    for line_no, chunk in enumerate(data.splitlines(keepends=True), start=1):
        try:
            lines.append(chunk.decode("utf-8"))
        except UnicodeDecodeError as ex:
            raise SchemaError(f"{path}:{line_no}: invalid UTF-8 ({ex.reason})") from ex
    return lines


def _read_rows(path: Path, expected_header: List[str]) -> List[List[float]]:
    if not path.is_file():
        raise SchemaError(f"{path}: set file not found")
    lines = _read_lines(path)
    if not lines:
        raise SchemaError(f"{path}:1: empty file")
    rows: List[List[float]] = []
    reader = csv.reader(lines)
    try:
        for raw in reader:
            _parse_row(path, reader.line_num, raw, expected_header, rows)
    except csv.Error as ex:
        raise SchemaError(f"{path}:{reader.line_num}: {ex}") from ex
    return rows


def _parse_row(path: Path, line_no: int, raw: List[str], expected_header: List[str], rows: List[List[float]]) -> None:
    if line_no == 1:
        header = [h.strip() for h in raw]
        if header != expected_header:
            raise SchemaError(f"{path}:1: expected header {','.join(expected_header)}, got {','.join(header)}")
        return
    if not raw or all(not c.strip() for c in raw):
        return
    if len(raw) != len(expected_header):
        raise SchemaError(f"{path}:{line_no}: expected {len(expected_header)} columns, got {len(raw)}")
    try:
        values = [float(c) for c in raw]
    except ValueError as ex:
        raise SchemaError(f"{path}:{line_no}: {ex}") from ex
    if not np.all(np.isfinite(values)):
        raise SchemaError(f"{path}:{line_no}: non-finite value")
    if values[0] != len(rows):
        raise SchemaError(f"{path}:{line_no}: index {raw[0]} out of sequence (expected {len(rows)})")
    rows.append(values)


def _load_frequency_set(path: Path, subject_id: str, trial: int, fft_size: int, rate: SampleRate) -> AtfSet:
    rows = _read_rows(path, FREQ_COLUMNS)
    n_bins = fft_size // 2 + 1
    if len(rows) != n_bins:
        raise SchemaError(f"{path}: expected {n_bins} bins for fft_size {fft_size}, got {len(rows)}")
    data = np.asarray(rows)
    frs = {}
    for i, n in enumerate(PATH_NAMES):
        bins = data[:, 1 + 2 * i] + 1j * data[:, 2 + 2 * i]
        frs[n] = FrequencyResponse(bins=bins, fft_size=fft_size, rate=rate)
    for n, fr in frs.items():
        if not fr.has_real_edges():
            raise SchemaError(f"{path}: path '{n}' has non-real DC/Nyquist bin")
    return AtfSet(subject_id=subject_id, trial=trial, **frs)


def _load_time_set(path: Path, subject_id: str, trial: int, fft_size: int, rate: SampleRate) -> AtfSet:
    rows = _read_rows(path, TIME_COLUMNS)
    if not rows:
        raise SchemaError(f"{path}: no samples")
    if len(rows) > fft_size:
        raise SchemaError(f"{path}: {len(rows)} samples exceed fft_size {fft_size}")
    data = np.asarray(rows)
    frs = {
        n: ir_to_fr(ImpulseResponse(taps=data[:, 1 + i], rate=rate), fft_size)
        for i, n in enumerate(PATH_NAMES)
    }
    return AtfSet(subject_id=subject_id, trial=trial, **frs)


def load_manifest(db_dir: Path) -> Dict[str, Any]:
    manifest_path = db_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise SchemaError(f"{manifest_path}: manifest not found")
    try:
        manifest = read_json(manifest_path)
    except (OSError, ValueError) as ex:
        raise SchemaError(f"{manifest_path}: {ex}") from ex
    schema = manifest.get("schema")
    if schema and schema != DATABASE_SCHEMA_V1:
        raise SchemaError(f"{manifest_path}: unsupported schema {schema}")
    return manifest


def load_database(db_dir: Path) -> AtfDatabase:
    """Load a database directory written by save_database or assembled from measurements."""
    manifest_path = db_dir / MANIFEST_NAME
    manifest = load_manifest(db_dir)

    try:
        rate = SampleRate(float(_require(manifest, "rate_hz", manifest_path)))
        fft_size = int(_require(manifest, "fft_size", manifest_path))
    except (TypeError, ValueError, DataError) as ex:
        raise SchemaError(f"{manifest_path}: {ex}") from ex
    if fft_size < 2 or fft_size % 2:
        raise SchemaError(f"{manifest_path}: fft_size must be even and >= 2, got {fft_size}")

    domain = manifest.get("domain", "frequency")
    loaders = {"frequency": _load_frequency_set, "time": _load_time_set}
    if domain not in loaders:
        raise SchemaError(f"{manifest_path}: unknown domain '{domain}'")
    loader = loaders[domain]

    entries = _require(manifest, "sets", manifest_path)
    if not isinstance(entries, list) or not entries:
        raise SchemaError(f"{manifest_path}: 'sets' must be a non-empty list")

    sets = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SchemaError(f"{manifest_path}: sets[{i}] must be an object")
        try:
            subject_id = str(entry["subject_id"])
            trial = int(entry["trial"])
        except (KeyError, TypeError, ValueError) as ex:
            raise SchemaError(f"{manifest_path}: sets[{i}] invalid subject_id/trial ({ex})") from ex
        rel = entry.get("file") or f"{SETS_DIR}/{set_file_name(subject_id, trial)}"
        sets.append(loader(db_dir / rel, subject_id, trial, fft_size, rate))

    db = AtfDatabase(tuple(sets))
    logger.info(f"Loaded {db.J} set(s), {len(db.subjects())} subject(s), Nf={fft_size} @ {rate.hertz:g} Hz from {db_dir}")
    return db
