"""Virtual metering IC: divider front end, 24-bit ADC codes and windowed RMS.

Instantaneous samples are normalized two's complement, ``code / 2**23`` in
[-1, 1). RMS results are unsigned fractions, ``code / 2**24`` in [0, 1).
Normalized +-1 corresponds to +-``full_scale`` volts at the IC input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import isqrt
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import simclock
from .simclock import NS_PER_S, ClockState
from .waveform import WaveformSpec, sample_array

SAMPLE_BITS = 24
INST_SCALE = 1 << 23
RMS_SCALE = 1 << 24
INST_MIN = -INST_SCALE
INST_MAX = INST_SCALE - 1
RMS_MAX = RMS_SCALE - 1

DIVIDER_RATIO = 0.02120
FULL_SCALE_V = 0.25


@dataclass(frozen=True)
class FrontEndConfig:
    divider_ratio: float = DIVIDER_RATIO
    full_scale: float = FULL_SCALE_V

    def __post_init__(self):
        if not 0.0 < self.divider_ratio < 1.0:
            raise ValueError(f"divider_ratio must be in (0, 1), got {self.divider_ratio}")
        if not self.full_scale > 0.0:
            raise ValueError(f"full_scale must be > 0, got {self.full_scale}")

    @property
    def rms_lsb_volts(self) -> float:
        """Input-referred voltage of one RMS output LSB."""
        return self.full_scale / self.divider_ratio / RMS_SCALE


@dataclass(frozen=True)
class MeterConfig:
    sample_rate: int = 4000
    rms_cycle: int = 80

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.rms_cycle <= 0:
            raise ValueError(f"rms_cycle must be > 0, got {self.rms_cycle}")

    @property
    def rms_rate(self) -> float:
        return self.sample_rate / self.rms_cycle


def front_end(v_in: float, cfg: FrontEndConfig) -> float:
    if not math.isfinite(v_in):
        raise ValueError(f"input voltage must be finite, got {v_in}")
    return v_in * cfg.divider_ratio


def quantize(v_ic: float, cfg: FrontEndConfig) -> int:
    """ADC code for an IC-input voltage; round half to even, clamped to 24 bits."""
    if not math.isfinite(v_ic):
        raise ValueError(f"IC voltage must be finite, got {v_ic}")
    code = round(v_ic / cfg.full_scale * INST_SCALE)
    return min(max(code, INST_MIN), INST_MAX)


def quantize_array(v_ic, cfg: FrontEndConfig) -> np.ndarray:
    # np.rint rounds half to even, same as round()
    codes = np.rint(np.asarray(v_ic, dtype=float) / cfg.full_scale * INST_SCALE)
    return np.clip(codes, INST_MIN, INST_MAX).astype(np.int64)


def rms_cycle(samples: Sequence[int], cycle: int = 80) -> int:
    """RMS code of one window of instantaneous codes.

    ``floor(sqrt(mean((c/2**23)**2)) * 2**24)`` evaluated in exact integer
    arithmetic: floor(sqrt(x)) == isqrt(floor(x)) for x >= 0.
    """
    if len(samples) != cycle:
        raise ValueError(f"RMS window needs exactly {cycle} samples, got {len(samples)}")
    sum_sq = sum(int(c) * int(c) for c in samples)
    return min(isqrt(4 * sum_sq // cycle), RMS_MAX)


def decode_voltage(rms: int, cfg: FrontEndConfig) -> float:
    """Input-referred RMS volts for an RMS code."""
    return rms / RMS_SCALE * cfg.full_scale / cfg.divider_ratio


def decode_instant(code: int, cfg: FrontEndConfig) -> float:
    """Input-referred instantaneous volts for a sample code."""
    return code / INST_SCALE * cfg.full_scale / cfg.divider_ratio


class MeterSample(NamedTuple):
    index: int
    true_ns: int
    inst: int
    rms: int  # latest completed RMS code, 0 before the first window
    rms_ready: bool  # this sample completed an RMS window
    mcu_ns: int  # MCU clock reading at emission


def sample_count(duration: float, mcfg: MeterConfig) -> int:
    return round(duration * mcfg.sample_rate)


def sample_time_ns(index: int, mcfg: MeterConfig, start_ns: int = 0) -> int:
    return start_ns + index * NS_PER_S // mcfg.sample_rate


def run_capture(spec: WaveformSpec, cfg: FrontEndConfig, mcfg: MeterConfig, clock: ClockState,
                duration: float, start_ns: int = 0, pps: bool = True) -> Iterator[MeterSample]:
    """Stream samples on the uniform true-time grid starting at ``start_ns``.

    Each sample is stamped with the MCU clock reading at its instant. With
    ``pps`` the clock is disciplined by a pulse at every whole simulated
    second after its last synchronization pulse.
    """
    if not (math.isfinite(duration) and duration > 0):
        raise ValueError(f"duration must be > 0, got {duration}")
    total = sample_count(duration, mcfg)
    window = mcfg.rms_cycle
    latest_rms = 0
    next_pulse = _next_pulse(clock) if pps else None
    for first in range(0, total, window):
        idx = list(range(first, min(first + window, total)))
        t_ns = [sample_time_ns(i, mcfg, start_ns) for i in idx]
        volts = sample_array(spec, np.array(t_ns, dtype=float) / NS_PER_S) * cfg.divider_ratio
        codes = quantize_array(volts, cfg).tolist()
        if next_pulse is not None and t_ns[-1] >= next_pulse:
            stamps = []
            for t in t_ns:
                if t >= next_pulse:
                    clock = simclock.advance_pulses(clock, t)
                    next_pulse = _next_pulse(clock)
                stamps.append(simclock.read(clock, t))
        else:
            stamps = simclock.read_many(clock, t_ns)
        complete = len(codes) == window
        if complete:
            rms = rms_cycle(codes, window)
            for k in range(window - 1):
                yield MeterSample(idx[k], t_ns[k], codes[k], latest_rms, False, stamps[k])
            latest_rms = rms
            yield MeterSample(idx[-1], t_ns[-1], codes[-1], latest_rms, True, stamps[-1])
        else:
            for i, t, code, stamp in zip(idx, t_ns, codes, stamps):
                yield MeterSample(i, t, code, latest_rms, False, stamp)


def _next_pulse(clock: ClockState) -> int | None:
    if clock.pulse_true_ns is None:
        return None
    return clock.pulse_true_ns + simclock.PULSE_INTERVAL_NS


def measure(spec: WaveformSpec, cfg: FrontEndConfig, t_ns: int) -> int:
    """Single instantaneous code at true time ``t_ns``."""
    return quantize(front_end(float(sample_array(spec, t_ns / NS_PER_S)), cfg), cfg)
