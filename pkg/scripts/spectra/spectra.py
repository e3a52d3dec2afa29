#!/usr/bin/env python3
"""
HTEQ Spectra - core signal types and transforms

Purpose:
- Immutable carriers for impulse responses and one-sided complex spectra
- Transforms between the two (forward unnormalized, inverse carries 1/Nf)
- Phase ramps for time shifts (the d_proc causality shift)
- AtfSet / AtfDatabase: the five acoustic paths o, c, m, r, s per subject and trial

Conventions:
- One-sided storage: bins 0..Nf/2, bin k sits at k * rate / Nf Hz
- A real underlying signal has real DC and Nyquist bins. Transforms produce
  them exactly; fr_to_ir refuses spectra that violate it.
- All arrays are read-only after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from scripts.common.hteq_errors import DataError, DimensionError
from scripts.common.hteq_io import sha256_bytes

DEFAULT_RATE_HZ = 40000.0
DEFAULT_FFT_SIZE = 1024
PATH_NAMES: Tuple[str, ...] = ("o", "c", "m", "r", "s")

# Relative tolerance for "zero imaginary part" on DC/Nyquist.
EDGE_IMAG_TOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class SampleRate:
    hertz: float = DEFAULT_RATE_HZ

    def __post_init__(self) -> None:
        hz = float(self.hertz)
        if not np.isfinite(hz) or hz <= 0:
            raise DataError(f"Sample rate must be positive: {self.hertz}")
        object.__setattr__(self, "hertz", hz)


@dataclass(frozen=True)
class ImpulseResponse:
    taps: np.ndarray
    rate: SampleRate = field(default_factory=SampleRate)

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size < 1:
            raise DimensionError(f"Impulse response needs at least one tap, got shape {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise DataError("Impulse response contains non-finite taps")
        object.__setattr__(self, "taps", _frozen(taps))

    def __len__(self) -> int:
        return int(self.taps.size)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """One-sided complex spectrum of length fft_size/2 + 1."""

    bins: np.ndarray
    fft_size: int
    rate: SampleRate = field(default_factory=SampleRate)

    def __post_init__(self) -> None:
        nf = int(self.fft_size)
        if nf < 2 or nf % 2:
            raise DimensionError(f"fft_size must be even and >= 2, got {self.fft_size}")
        bins = np.asarray(self.bins, dtype=complex)
        if bins.ndim != 1 or bins.size != nf // 2 + 1:
            raise DimensionError(f"Expected {nf // 2 + 1} one-sided bins for Nf={nf}, got shape {bins.shape}")
        if not np.all(np.isfinite(bins)):
            raise DataError("Frequency response contains non-finite bins")
        object.__setattr__(self, "fft_size", nf)
        object.__setattr__(self, "bins", _frozen(bins))

    @property
    def n_bins(self) -> int:
        return int(self.bins.size)

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.rate.hertz / self.fft_size

    @property
    def nyquist_hz(self) -> float:
        return self.rate.hertz / 2.0

    def has_real_edges(self, tol: float = EDGE_IMAG_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.bins))))
        return abs(self.bins[0].imag) <= tol * scale and abs(self.bins[-1].imag) <= tol * scale

    def with_bins(self, bins: np.ndarray) -> "FrequencyResponse":
        """Same grid, new values."""
        return FrequencyResponse(bins=bins, fft_size=self.fft_size, rate=self.rate)

    def same_grid(self, other: "FrequencyResponse") -> bool:
        return self.fft_size == other.fft_size and self.rate.hertz == other.rate.hertz

    def fingerprint(self) -> str:
        head = f"{self.fft_size}:{self.rate.hertz!r}".encode("ascii")
        return sha256_bytes(head, np.ascontiguousarray(self.bins).tobytes())


def require_same_grid(*frs: FrequencyResponse) -> None:
    first = frs[0]
    for other in frs[1:]:
        if not first.same_grid(other):
            raise DimensionError(
                f"Grid mismatch: Nf={first.fft_size}@{first.rate.hertz}Hz vs "
                f"Nf={other.fft_size}@{other.rate.hertz}Hz"
            )


# =============================================================================
# Transforms
# =============================================================================

def ir_to_fr(ir: ImpulseResponse, fft_size: int) -> FrequencyResponse:
    """One-sided DFT of the zero-padded taps. Never truncates."""
    nf = int(fft_size)
    if nf < 2 or nf % 2:
        raise DimensionError(f"fft_size must be even and >= 2, got {fft_size}")
    if nf < len(ir):
        raise DimensionError(f"fft_size {nf} shorter than impulse response ({len(ir)} taps)")
    bins = np.fft.rfft(ir.taps, n=nf)
    bins[0] = bins[0].real
    bins[-1] = bins[-1].real
    return FrequencyResponse(bins=bins, fft_size=nf, rate=ir.rate)


def fr_to_ir(fr: FrequencyResponse, out_len: int) -> ImpulseResponse:
    """Inverse DFT of the conjugate-symmetric extension, truncated to out_len."""
    if not 1 <= int(out_len) <= fr.fft_size:
        raise DimensionError(f"out_len must be in [1, {fr.fft_size}], got {out_len}")
    if not fr.has_real_edges():
        raise DataError("DC/Nyquist bins have non-zero imaginary part; not the spectrum of a real signal")
    taps = np.fft.irfft(fr.bins, n=fr.fft_size)[: int(out_len)]
    return ImpulseResponse(taps=taps, rate=fr.rate)


def delay_phase(fft_size: int, rate: SampleRate, shift_seconds: float) -> FrequencyResponse:
    """Phase ramp e^{-j 2 pi k (shift * rate) / Nf}; negative shift is an advance."""
    nf = int(fft_size)
    if nf < 2 or nf % 2:
        raise DimensionError(f"fft_size must be even and >= 2, got {fft_size}")
    k = np.arange(nf // 2 + 1)
    shift_samples = float(shift_seconds) * rate.hertz
    bins = np.exp(-2j * np.pi * k * shift_samples / nf)
    return FrequencyResponse(bins=bins, fft_size=nf, rate=rate)


def two_sided_energy(fr: FrequencyResponse) -> float:
    """Energy of the full conjugate-symmetric spectrum."""
    power = np.abs(fr.bins) ** 2
    return float(power[0] + power[-1] + 2.0 * power[1:-1].sum())


def with_real_edges(fr: FrequencyResponse) -> FrequencyResponse:
    bins = np.array(fr.bins, copy=True)
    bins[0] = bins[0].real
    bins[-1] = bins[-1].real
    return fr.with_bins(bins)


def one_sided_weights(n_bins: int) -> np.ndarray:
    """Weights mapping a one-sided sum to the two-sided sum (edges 1, interior 2)."""
    w = np.full(n_bins, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


# =============================================================================
# ATF sets
# =============================================================================

@dataclass(frozen=True, eq=False)
class AtfSet:
    """One measurement set: open ear o, occluded c, external mic m, receiver-to-drum r, secondary path s."""

    subject_id: str
    trial: int
    o: FrequencyResponse
    c: FrequencyResponse
    m: FrequencyResponse
    r: FrequencyResponse
    s: FrequencyResponse

    def __post_init__(self) -> None:
        if not str(self.subject_id).strip():
            raise DataError("subject_id must be non-empty")
        if int(self.trial) < 1:
            raise DataError(f"trial must be >= 1, got {self.trial}")
        require_same_grid(self.o, self.c, self.m, self.r, self.s)
        object.__setattr__(self, "subject_id", str(self.subject_id).strip())
        object.__setattr__(self, "trial", int(self.trial))

    @property
    def key(self) -> Tuple[str, int]:
        return (self.subject_id, self.trial)

    @property
    def grid(self) -> FrequencyResponse:
        return self.o

    def path(self, name: str) -> FrequencyResponse:
        if name not in PATH_NAMES:
            raise KeyError(f"Unknown path '{name}' (expected one of {PATH_NAMES})")
        return getattr(self, name)

    def fingerprint(self) -> str:
        parts = [f"{self.subject_id}:{self.trial}".encode("utf-8")]
        parts.extend(self.path(n).fingerprint().encode("ascii") for n in PATH_NAMES)
        return sha256_bytes(*parts)


@dataclass(frozen=True, eq=False)
class AtfDatabase:
    sets: Tuple[AtfSet, ...]

    def __post_init__(self) -> None:
        sets = tuple(self.sets)
        if sets:
            ref = sets[0].grid
            for st in sets[1:]:
                require_same_grid(ref, st.grid)
        seen = set()
        for st in sets:
            if st.key in seen:
                raise DataError(f"Duplicate set {st.subject_id} trial {st.trial}")
            seen.add(st.key)
        object.__setattr__(self, "sets", sets)

    @property
    def J(self) -> int:
        return len(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    @property
    def grid(self) -> FrequencyResponse:
        if not self.sets:
            raise DataError("Empty database has no grid")
        return self.sets[0].grid

    def subjects(self) -> List[str]:
        """Subject ids in order of first appearance."""
        return list(dict.fromkeys(st.subject_id for st in self.sets))

    def for_subject(self, subject_id: str) -> "AtfDatabase":
        return AtfDatabase(tuple(st for st in self.sets if st.subject_id == subject_id))

    def without_subject(self, subject_id: str) -> "AtfDatabase":
        return AtfDatabase(tuple(st for st in self.sets if st.subject_id != subject_id))

    def get(self, subject_id: str, trial: int) -> Optional[AtfSet]:
        for st in self.sets:
            if st.subject_id == subject_id and st.trial == int(trial):
                return st
        return None

    def stack(self, name: str) -> np.ndarray:
        """J x Nbins complex matrix of one path (rows = sets)."""
        if not self.sets:
            raise DataError("Cannot stack an empty database")
        return np.vstack([st.path(name).bins for st in self.sets])

    def require_sets(self, minimum: int, purpose: str) -> None:
        if self.J < minimum:
            raise DataError(f"{purpose} needs at least {minimum} set(s), database has {self.J}")

    def set_fingerprints(self) -> Dict[Tuple[str, int], str]:
        return {st.key: st.fingerprint() for st in self.sets}

    def fingerprint(self) -> str:
        return sha256_bytes(*(st.fingerprint().encode("ascii") for st in self.sets))


def make_set(
    subject_id: str,
    trial: int,
    paths: Dict[str, Sequence[complex]],
    fft_size: int,
    rate: SampleRate,
) -> AtfSet:
    """Build an AtfSet from raw bin arrays keyed by path name."""
    frs = {n: FrequencyResponse(bins=np.asarray(paths[n]), fft_size=fft_size, rate=rate) for n in PATH_NAMES}
    return AtfSet(subject_id=subject_id, trial=trial, **frs)
