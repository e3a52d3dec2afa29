#!/usr/bin/env python3
"""
HTEQ Equalization Filter - types and JSON serialization

An EqFilter is either time-domain (Nt real taps, applied with the d_proc advance
of the design model) or frequency-domain (one complex gain per one-sided bin).
Exactly one of `taps` / `bins` is populated.

JSON schema "hteq.eq_filter.v1":
  {schema, domain, taps | bins, rate_hz, fft_size, config, r_source, content_hash}
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from scripts.common.hteq_errors import ConfigError, DataError, DimensionError, SchemaError
from scripts.common.hteq_io import complex_from_json, complex_to_json, dumps_canonical, sha256_bytes
from scripts.spectra.spectra import (
    DEFAULT_FFT_SIZE,
    FrequencyResponse,
    ImpulseResponse,
    SampleRate,
    delay_phase,
    ir_to_fr,
)

EQ_FILTER_SCHEMA_V1 = "hteq.eq_filter.v1"


@dataclass(frozen=True)
class EqDesignConfig:
    mu: float = 0.001
    d_proc_seconds: float = 0.0016
    taps_Nt: int = 64
    fft_size: int = DEFAULT_FFT_SIZE

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ConfigError(f"mu must be a non-negative finite number, got {self.mu}")
        if not (np.isfinite(self.d_proc_seconds) and self.d_proc_seconds >= 0):
            raise ConfigError(f"d_proc_seconds must be non-negative, got {self.d_proc_seconds}")
        if int(self.taps_Nt) < 1:
            raise ConfigError(f"taps_Nt must be positive, got {self.taps_Nt}")
        if int(self.fft_size) < 2 or int(self.fft_size) % 2:
            raise ConfigError(f"fft_size must be even and >= 2, got {self.fft_size}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "d_proc_seconds", float(self.d_proc_seconds))
        object.__setattr__(self, "taps_Nt", int(self.taps_Nt))
        object.__setattr__(self, "fft_size", int(self.fft_size))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class RSource(str, Enum):
    TRUE_R = "true_r"
    ESTIMATED_R = "estimated_r"
    SECONDARY_PATH_AS_R = "secondary_path_as_r"
    ENSEMBLE = "ensemble"
    TRAINING_SET = "training_set"


@dataclass(frozen=True, eq=False)
class EqFilter:
    config: EqDesignConfig
    r_source: RSource
    rate: SampleRate = field(default_factory=SampleRate)
    taps: Optional[np.ndarray] = None
    bins: Optional[FrequencyResponse] = None

    def __post_init__(self) -> None:
        if (self.taps is None) == (self.bins is None):
            raise DataError("EqFilter needs exactly one of taps / bins")
        if self.taps is not None:
            taps = np.asarray(self.taps)
            if np.iscomplexobj(taps):
                raise DataError("Time-domain taps must be real")
            taps = np.array(taps, dtype=float, copy=True)
            if taps.ndim != 1 or taps.size < 1 or not np.all(np.isfinite(taps)):
                raise DataError("Time-domain taps must be a finite 1-D array")
            taps.setflags(write=False)
            object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "r_source", RSource(self.r_source))

    @property
    def is_time_domain(self) -> bool:
        return self.taps is not None

    def response(self, fft_size: int, rate: SampleRate) -> FrequencyResponse:
        """Effective frequency response on the given grid, consistent with the design model."""
        if self.bins is not None:
            if self.bins.fft_size != fft_size or self.bins.rate.hertz != rate.hertz:
                raise DimensionError(
                    f"Filter grid Nf={self.bins.fft_size} does not match requested Nf={fft_size}"
                )
            return self.bins
        if self.taps.size > fft_size:
            raise DimensionError(f"Filter has {self.taps.size} taps, grid Nf={fft_size} is shorter")
        spectrum = ir_to_fr(ImpulseResponse(taps=self.taps, rate=rate), fft_size)
        advance = delay_phase(fft_size, rate, -self.config.d_proc_seconds)
        return spectrum.with_bins(spectrum.bins * advance.bins)

    # -------------------------------------------------------------------------
    # JSON
    # -------------------------------------------------------------------------

    def _payload(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            "schema": EQ_FILTER_SCHEMA_V1,
            "config": self.config.to_dict(),
            "r_source": self.r_source.value,
        }
        if self.taps is not None:
            body["domain"] = "time"
            body["rate_hz"] = self.rate.hertz
            body["taps"] = [float(x) for x in self.taps]
        else:
            body["domain"] = "frequency"
            body["rate_hz"] = self.bins.rate.hertz
            body["fft_size"] = self.bins.fft_size
            body["bins"] = complex_to_json(self.bins.bins)
        return body

    def content_hash(self) -> str:
        return sha256_bytes(dumps_canonical(self._payload()).encode("utf-8"))

    def to_json_dict(self) -> Dict[str, Any]:
        body = self._payload()
        body["content_hash"] = self.content_hash()
        return body

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "EqFilter":
        if data.get("schema") != EQ_FILTER_SCHEMA_V1:
            raise SchemaError(f"Unsupported filter schema: {data.get('schema')}")
        try:
            cfg = EqDesignConfig(**data["config"])
            rate = SampleRate(float(data["rate_hz"]))
            r_source = RSource(data["r_source"])
            if data["domain"] == "time":
                flt = cls(config=cfg, r_source=r_source, rate=rate, taps=np.asarray(data["taps"], dtype=float))
            else:
                bins = FrequencyResponse(
                    bins=complex_from_json(data["bins"]), fft_size=int(data["fft_size"]), rate=rate
                )
                flt = cls(config=cfg, r_source=r_source, rate=rate, bins=bins)
        except (KeyError, TypeError, ValueError, ConfigError) as ex:
            raise SchemaError(f"Malformed filter document: {ex}") from ex
        expected = data.get("content_hash")
        if expected and expected != flt.content_hash():
            raise SchemaError("Filter content_hash does not match its contents")
        return flt


@dataclass(frozen=True, eq=False)
class AidedResponse:
    bins: FrequencyResponse
