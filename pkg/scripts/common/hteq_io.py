#!/usr/bin/env python3
"""
HTEQ artifact I/O helpers.

Purpose:
- Atomic JSON writes (temp file + replace), sorted keys, stable indentation
- CSV writes with LF line endings and fixed number formatting
- SHA-256 helpers for content hashes and directory fingerprints
- Complex array <-> [re, im] JSON encoding

Every artifact written through these helpers is byte-identical for identical
inputs, which is what the determinism checks compare.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np


# ============================================================================
# JSON
# ============================================================================

def dumps_canonical(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    """Write JSON atomically. Retries briefly on transient permission errors."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.{int(time.time() * 1000)}.tmp")
    txt = dumps_canonical(payload)
    for attempt in range(1, 6):
        try:
            with tmp.open("w", encoding="utf-8", newline="\n") as f:
                f.write(txt)
            tmp.replace(path)
            return
        except PermissionError:
            time.sleep(0.15 * (2 ** (attempt - 1)))
        finally:
            try:
                if tmp.exists():
                    tmp.unlink()
            except OSError:
                pass
    raise PermissionError(f"Failed to write JSON (retries exhausted): {path}")


def read_json(path: Path) -> Dict[str, Any]:
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"JSON document must be an object: {path}")
    return data


# ============================================================================
# CSV
# ============================================================================

def fmt_exact(x: float) -> str:
    """Round-trip formatting for data files."""
    return format(float(x), ".17g")


def fmt_report(x: float) -> str:
    """Report-table formatting."""
    return format(float(x), ".10g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write a CSV with LF line endings. Returns number of data rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
            count += 1
    return count


# ============================================================================
# Hashing
# ============================================================================

def sha256_bytes(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(chunk)
    return h.hexdigest()


def compute_sha256(file_path: Path) -> str:
    """Compute SHA256 hash of file."""
    sha256 = hashlib.sha256()
    with open(file_path, "rb") as f:
        while chunk := f.read(8192):
            sha256.update(chunk)
    return sha256.hexdigest()


def directory_hash(root: Path) -> str:
    """Hash of every file's relative path and content under root, in sorted order."""
    h = hashlib.sha256()
    for p in sorted(q for q in root.rglob("*") if q.is_file()):
        h.update(p.relative_to(root).as_posix().encode("utf-8"))
        h.update(b"\0")
        h.update(compute_sha256(p).encode("ascii"))
    return h.hexdigest()


# ============================================================================
# Complex arrays in JSON
# ============================================================================

def complex_to_json(arr: np.ndarray) -> List[Any]:
    """Encode a complex array (any rank) as nested lists ending in [re, im] pairs."""
    a = np.asarray(arr, dtype=complex)
    stacked = np.stack([a.real, a.imag], axis=-1)
    return stacked.tolist()


def complex_from_json(data: Any) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim == 0 or a.shape[-1] != 2:
        raise ValueError("complex array must end in [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]
