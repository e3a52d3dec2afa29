#!/usr/bin/env python3
"""
HTEQ Synthetic Database Generator

Purpose:
- Render n_subjects x n_trials AtfSets from the tube ear model
- Deterministic per seed: subject k draws from the stream [seed, k], its trial t
  from [seed, k, t], so subject k is the same ear whatever the corpus size
- Optionally export in the database directory format with the generator config echoed

Usage:
  python scripts/synthdata/generate_database.py --out build/db
  python scripts/synthdata/generate_database.py --out build/db --subjects 4 --trials 2 --seed 7
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from scripts.common.hteq_errors import ConfigError
from scripts.common.hteq_logging import configure_logging
from scripts.spectra.atf_store import save_database
from scripts.spectra.spectra import (
    DEFAULT_FFT_SIZE,
    DEFAULT_RATE_HZ,
    AtfDatabase,
    AtfSet,
    FrequencyResponse,
    SampleRate,
    with_real_edges,
)
from scripts.synthdata.ear_model import (
    EarModelParams,
    external_mic,
    leak_path,
    open_ear,
    reinsert,
    sample_subject,
    tube_pressure,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorConfig:
    n_subjects: int = 18
    n_trials: int = 3
    seed: int = 0
    rate_hz: float = DEFAULT_RATE_HZ
    fft_size: int = DEFAULT_FFT_SIZE
    device_delay_seconds: float = 0.0016

    def __post_init__(self) -> None:
        if int(self.n_subjects) < 1 or int(self.n_trials) < 1:
            raise ConfigError("n_subjects and n_trials must be >= 1")
        if int(self.seed) < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not float(self.rate_hz) > 0:
            raise ConfigError(f"rate_hz must be positive, got {self.rate_hz}")
        if int(self.fft_size) < 2 or int(self.fft_size) % 2:
            raise ConfigError(f"fft_size must be even and >= 2, got {self.fft_size}")
        if float(self.device_delay_seconds) < 0:
            raise ConfigError("device_delay_seconds must be non-negative")
        object.__setattr__(self, "n_subjects", int(self.n_subjects))
        object.__setattr__(self, "n_trials", int(self.n_trials))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        object.__setattr__(self, "fft_size", int(self.fft_size))
        object.__setattr__(self, "device_delay_seconds", float(self.device_delay_seconds))

    @property
    def rate(self) -> SampleRate:
        return SampleRate(self.rate_hz)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def subject_stream(seed: int, subject_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(subject_index)])


def trial_stream(seed: int, subject_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(subject_index), int(trial)])


def subject_id_for(index: int, n_subjects: int) -> str:
    width = max(2, len(str(n_subjects)))
    return f"S{index + 1:0{width}d}"


def render_atf_set(
    params: EarModelParams,
    trial: int,
    cfg: GeneratorConfig,
    subject_id: str = "S01",
    subject_index: int = 0,
) -> AtfSet:
    """Render one insertion of one ear on the configured grid."""
    fitted = reinsert(params, trial_stream(cfg.seed, subject_index, trial))
    nf = cfg.fft_size
    rate = cfg.rate
    f = np.arange(nf // 2 + 1) * rate.hertz / nf

    device = np.exp(-2j * np.pi * f * cfg.device_delay_seconds)
    r = tube_pressure(f, fitted, fitted.canal_length_m) * device
    s = tube_pressure(f, fitted, fitted.canal_length_m - fitted.mic_offset_m) * device
    o = open_ear(f, fitted)
    c = leak_path(f, fitted, o)
    m = external_mic(f, fitted)

    def fr(bins: np.ndarray) -> FrequencyResponse:
        return with_real_edges(FrequencyResponse(bins=bins, fft_size=nf, rate=rate))

    return AtfSet(subject_id=subject_id, trial=trial, o=fr(o), c=fr(c), m=fr(m), r=fr(r), s=fr(s))


def generate_database(cfg: GeneratorConfig) -> AtfDatabase:
    sets: List[AtfSet] = []
    for k in range(cfg.n_subjects):
        params = sample_subject(subject_stream(cfg.seed, k))
        sid = subject_id_for(k, cfg.n_subjects)
        for t in range(1, cfg.n_trials + 1):
            sets.append(render_atf_set(params, t, cfg, subject_id=sid, subject_index=k))
    db = AtfDatabase(tuple(sets))
    logger.info(f"Generated {db.J} set(s): {cfg.n_subjects} subject(s) x {cfg.n_trials} trial(s), seed {cfg.seed}")
    return db


def export_database(
    cfg: GeneratorConfig,
    out_dir: Path,
    extra_manifest: Optional[Dict[str, Any]] = None,
) -> AtfDatabase:
    db = generate_database(cfg)
    manifest: Dict[str, Any] = {"generator": cfg.to_dict(), "source": "synthetic"}
    manifest.update(extra_manifest or {})
    save_database(db, out_dir, extra_manifest=manifest)
    return db


def main(argv: Optional[List[str]] = None) -> int:
    ap = argparse.ArgumentParser(description="Generate a synthetic ATF database.")
    ap.add_argument("--out", required=True, help="Output database directory.")
    ap.add_argument("--subjects", type=int, default=18)
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fft-size", type=int, default=DEFAULT_FFT_SIZE)
    args = ap.parse_args(argv)

    configure_logging("INFO")
    cfg = GeneratorConfig(n_subjects=args.subjects, n_trials=args.trials, seed=args.seed, fft_size=args.fft_size)
    export_database(cfg, Path(args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
