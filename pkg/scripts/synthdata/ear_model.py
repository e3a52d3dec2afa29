#!/usr/bin/env python3
"""
HTEQ Ear Model - lossy one-dimensional tube stand-in for measured ATFs

Geometry (receiver port at x = 0, eardrum at x = L):
  - receiver end: rigid earpiece face, pressure reflection +1
  - eardrum:      frequency-independent pressure reflection R_d (drum_resistance)
  - propagation:  gamma(f) = alpha(f) + j 2 pi f / c0, wall loss alpha = WALL_LOSS sqrt(f) / radius

Pressure at x for a unit wave launched by the receiver:
  p(x) = (e^{-gamma x} + R_d e^{-gamma (2L - x)}) / (1 - R_d e^{-2 gamma L})

Paths:
  r = p(L) * device delay
  s = p(L - mic_offset) * device delay   (mic_offset = mic-to-drum distance; 0 gives s = r)
  o = open canal of length L + insertion_depth, driven at an open entrance, plus concha delay
  c = leak_gain * first-order low-pass(LEAK_CORNER_HZ) * o
  m = mic_gain * (1 + MIC_RIPPLE e^{-j w MIC_RIPPLE_DELAY})

At the microphone the forward and drum-reflected waves cancel near
c0 / (4 mic_offset) (quarter-wavelength notch); at the drum they add. So s and r
agree at low frequencies and diverge above a few kHz.

Ranges (uniform unless noted), chosen for plausibility, not fitted to any measurement:
  canal_length_m       0.010 .. 0.020
  canal_radius_m       0.0030 .. 0.0045
  drum_resistance      0.55 .. 0.85
  mic inset            0.001 .. 0.004 (mic_offset_m = canal_length_m - inset)
  insertion_depth_m    0.006 .. 0.012
  leak_gain            0.03 .. 0.3 (log-uniform)
  processing_noise_db  0.1 .. 0.5
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from scripts.common.hteq_errors import DataError

SPEED_OF_SOUND = 343.0
WALL_LOSS = 3.0e-5
CONCHA_LENGTH_M = 0.010
LEAK_CORNER_HZ = 1000.0
MIC_RIPPLE = 0.08
MIC_RIPPLE_DELAY_S = 1.0e-4

CANAL_LENGTH_RANGE = (0.010, 0.020)
CANAL_RADIUS_RANGE = (0.0030, 0.0045)
DRUM_RESISTANCE_RANGE = (0.55, 0.85)
MIC_INSET_RANGE = (0.001, 0.004)
INSERTION_DEPTH_RANGE = (0.006, 0.012)
LEAK_GAIN_RANGE = (0.03, 0.3)
NOISE_DB_RANGE = (0.1, 0.5)


@dataclass(frozen=True)
class EarModelParams:
    canal_length_m: float = 0.015
    canal_radius_m: float = 0.0037
    drum_resistance: float = 0.7
    mic_offset_m: float = 0.012
    leak_gain: float = 0.1
    processing_noise_db: float = 0.3
    insertion_depth_m: float = 0.009
    mic_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.canal_length_m <= 0 or self.canal_radius_m <= 0 or self.insertion_depth_m <= 0:
            raise DataError("Ear model lengths must be positive")
        if not 0.0 < self.drum_resistance < 1.0:
            raise DataError(f"drum_resistance must be in (0, 1), got {self.drum_resistance}")
        if not 0.0 <= self.mic_offset_m <= self.canal_length_m:
            raise DataError(f"mic_offset_m must be in [0, canal_length_m], got {self.mic_offset_m}")
        if not 0.0 < self.leak_gain < 1.0:
            raise DataError(f"leak_gain must be in (0, 1), got {self.leak_gain}")
        if self.processing_noise_db < 0:
            raise DataError("processing_noise_db must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def sample_subject(rng: np.random.Generator) -> EarModelParams:
    """Draw one ear. Draw order is fixed so a given stream always yields the same ear."""
    length = rng.uniform(*CANAL_LENGTH_RANGE)
    radius = rng.uniform(*CANAL_RADIUS_RANGE)
    drum = rng.uniform(*DRUM_RESISTANCE_RANGE)
    inset = rng.uniform(*MIC_INSET_RANGE)
    depth = rng.uniform(*INSERTION_DEPTH_RANGE)
    leak = float(np.exp(rng.uniform(np.log(LEAK_GAIN_RANGE[0]), np.log(LEAK_GAIN_RANGE[1]))))
    noise = rng.uniform(*NOISE_DB_RANGE)
    return EarModelParams(
        canal_length_m=float(length),
        canal_radius_m=float(radius),
        drum_resistance=float(drum),
        mic_offset_m=float(length - inset),
        leak_gain=leak,
        processing_noise_db=float(noise),
        insertion_depth_m=float(depth),
    )


def reinsert(params: EarModelParams, rng: np.random.Generator) -> EarModelParams:
    """Perturb one insertion: residual geometry scales by a common factor, leak and mic gain jitter."""
    sigma = params.processing_noise_db
    if sigma == 0:
        return params
    d_len, d_leak, d_mic = rng.normal(0.0, sigma, size=3)
    scale = 10.0 ** (d_len / 20.0)
    length = params.canal_length_m * scale
    total = params.canal_length_m + params.insertion_depth_m
    leak = float(np.clip(params.leak_gain * 10.0 ** (3.0 * d_leak / 20.0), 1e-4, 0.99))
    return EarModelParams(
        canal_length_m=length,
        canal_radius_m=params.canal_radius_m,
        drum_resistance=params.drum_resistance,
        mic_offset_m=params.mic_offset_m * scale,
        leak_gain=leak,
        processing_noise_db=sigma,
        insertion_depth_m=max(total - length, 1e-3),
        mic_gain=params.mic_gain * 10.0 ** (0.2 * d_mic / 20.0),
    )


def propagation(freqs_hz: np.ndarray, radius_m: float) -> np.ndarray:
    alpha = WALL_LOSS * np.sqrt(freqs_hz) / radius_m
    return alpha + 2j * np.pi * freqs_hz / SPEED_OF_SOUND


def tube_pressure(freqs_hz: np.ndarray, params: EarModelParams, x_m: float) -> np.ndarray:
    """Pressure at distance x_m from the receiver port."""
    gamma = propagation(freqs_hz, params.canal_radius_m)
    L = params.canal_length_m
    R = params.drum_resistance
    num = np.exp(-gamma * x_m) + R * np.exp(-gamma * (2.0 * L - x_m))
    return num / (1.0 - R * np.exp(-2.0 * gamma * L))


def open_ear(freqs_hz: np.ndarray, params: EarModelParams) -> np.ndarray:
    """Entrance-driven open canal (pressure-release entrance) to the eardrum, plus concha delay."""
    gamma = propagation(freqs_hz, params.canal_radius_m)
    L = params.canal_length_m + params.insertion_depth_m
    R = params.drum_resistance
    drum = (1.0 + R) * np.exp(-gamma * L) / (1.0 + R * np.exp(-2.0 * gamma * L))
    concha = np.exp(-2j * np.pi * freqs_hz * CONCHA_LENGTH_M / SPEED_OF_SOUND)
    return drum * concha


def external_mic(freqs_hz: np.ndarray, params: EarModelParams) -> np.ndarray:
    return params.mic_gain * (1.0 + MIC_RIPPLE * np.exp(-2j * np.pi * freqs_hz * MIC_RIPPLE_DELAY_S))


def leak_path(freqs_hz: np.ndarray, params: EarModelParams, o: np.ndarray) -> np.ndarray:
    return params.leak_gain * o / (1.0 + 1j * freqs_hz / LEAK_CORNER_HZ)
