"""Analytic test signals standing in for the bench waveform generator.

Waveforms are pure functions of time so the simulation can sample them at
arbitrary instants and stays deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SINE = "sine"
TRIANGLE = "triangle"
KINDS = (SINE, TRIANGLE)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WaveformSpec:
    kind: str = SINE
    frequency: float = 50.0
    amplitude_pp: float = 20.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValueError(f"frequency must be > 0, got {self.frequency}")
        if not (math.isfinite(self.amplitude_pp) and self.amplitude_pp >= 0):
            raise ValueError(f"amplitude_pp must be >= 0, got {self.amplitude_pp}")
        if not (math.isfinite(self.phase) and 0.0 <= self.phase < TWO_PI):
            raise ValueError(f"phase must lie in [0, 2*pi), got {self.phase}")

    @property
    def peak(self) -> float:
        return self.amplitude_pp / 2.0


def _triangle_unit(x):
    # x is the cycle fraction in [0, 1); 0 -> 0 rising, 0.25 -> +1, 0.75 -> -1
    return np.where(x < 0.25, 4.0 * x, np.where(x < 0.75, 2.0 - 4.0 * x, 4.0 * x - 4.0))


def sample_array(spec: WaveformSpec, t) -> np.ndarray:
    """Vectorised :func:`sample` over an array of times in seconds."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("sample times must be finite")
    if np.any(t < 0):
        raise ValueError("sample times must be >= 0")
    if spec.kind == SINE:
        return spec.peak * np.sin(TWO_PI * spec.frequency * t + spec.phase)
    cycles = spec.frequency * t + spec.phase / TWO_PI
    return spec.peak * _triangle_unit(cycles - np.floor(cycles))


def sample(spec: WaveformSpec, t: float) -> float:
    """Instantaneous signal value in volts at time ``t`` seconds."""
    if not math.isfinite(t):
        raise ValueError(f"sample time must be finite, got {t}")
    if t < 0:
        raise ValueError(f"sample time must be >= 0, got {t}")
    if spec.kind == SINE:
        return spec.peak * math.sin(TWO_PI * spec.frequency * t + spec.phase)
    cycles = spec.frequency * t + spec.phase / TWO_PI
    return spec.peak * float(_triangle_unit(cycles - math.floor(cycles)))


def analytic_rms(spec: WaveformSpec) -> float:
    if spec.kind == SINE:
        return spec.peak / math.sqrt(2.0)
    return spec.peak / math.sqrt(3.0)
