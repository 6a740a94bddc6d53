"""Simulated clocks on an integer-nanosecond time base.

True (simulation) time is a plain ``int`` of nanoseconds since the simulation
epoch. A :class:`ClockState` maps true time to the local time a device would
read: a fixed offset, a constant drift rate and a tick resolution. Reads floor
to the tick grid, like a hardware counter.

The MCU clock is also disciplined by a one-pulse-per-second input: after the
first synchronization, each pulse advances ``pulse_time`` by exactly one
second and the local time is set to it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

MCU_RESOLUTION_NS = 100_000
PULSE_INTERVAL_NS = NS_PER_S


class ClockError(RuntimeError):
    pass


def floor_to(value: int, resolution: int) -> int:
    return value - value % resolution


@dataclass(frozen=True)
class ClockState:
    """Immutable snapshot of a simulated clock.

    ``offset_ns`` is local minus true time at ``epoch_ns`` (a true instant);
    drift accumulates linearly from there. ``pulse_time_ns`` is the MCU's
    estimate of local time at the last 1PPS pulse, ``None`` until the first
    synchronization. ``pulse_true_ns`` is the true instant of that pulse; it is
    simulator ground truth, never visible to the device.
    """

    offset_ns: int = 0
    drift_ppm: float = 0.0
    resolution_ns: int = MCU_RESOLUTION_NS
    epoch_ns: int = 0
    pulse_time_ns: int | None = None
    pulse_true_ns: int | None = None

    def __post_init__(self):
        if self.resolution_ns <= 0:
            raise ValueError(f"resolution_ns must be > 0, got {self.resolution_ns}")
        if self.drift_ppm <= -1e6:
            raise ValueError("drift_ppm must be > -1e6 (clock must run forward)")

    @property
    def pulse_time_ms(self) -> float | None:
        if self.pulse_time_ns is None:
            return None
        return self.pulse_time_ns / NS_PER_MS

    @property
    def synchronized(self) -> bool:
        return self.pulse_time_ns is not None


def drift_ns(drift_ppm: float, elapsed_ns: int) -> int:
    """Accumulated drift, floored to whole nanoseconds."""
    if not drift_ppm:
        return 0
    if float(drift_ppm).is_integer():
        return int(drift_ppm) * elapsed_ns // 1_000_000
    # Fraction keeps e.g. 100 ppm over 1 s at exactly 100 000 ns
    return (Fraction(drift_ppm) * elapsed_ns / 1_000_000).__floor__()


def unquantized(clock: ClockState, true_now: int) -> int:
    return true_now + clock.offset_ns + drift_ns(clock.drift_ppm, true_now - clock.epoch_ns)


def read(clock: ClockState, true_now: int) -> int:
    """Local time at true instant ``true_now``, floored to the resolution grid."""
    return floor_to(unquantized(clock, true_now), clock.resolution_ns)


def read_many(clock: ClockState, times: list[int]) -> list[int]:
    """:func:`read` over many instants (same clock state)."""
    res, off, epoch, ppm = clock.resolution_ns, clock.offset_ns, clock.epoch_ns, clock.drift_ppm
    if not ppm:
        return [(t + off) - (t + off) % res for t in times]
    if float(ppm).is_integer():
        k = int(ppm)
        vals = [t + off + k * (t - epoch) // 1_000_000 for t in times]
        return [v - v % res for v in vals]
    return [read(clock, t) for t in times]


def apply_correction(clock: ClockState, offset_meas: int) -> ClockState:
    """Subtract a measured offset from the clock's local time."""
    if not offset_meas:
        return clock
    return replace(clock, offset_ns=clock.offset_ns - int(offset_meas))


def set_time(clock: ClockState, true_now: int, local_ns: int) -> ClockState:
    """Make the clock read ``local_ns`` at ``true_now``; drift restarts from there."""
    return replace(clock, epoch_ns=true_now, offset_ns=local_ns - true_now)


def pulse_tick(clock: ClockState) -> ClockState:
    """Handle one 1PPS pulse: advance ``pulse_time`` by 1000.0 ms and adopt it."""
    if clock.pulse_time_ns is None or clock.pulse_true_ns is None:
        raise ClockError("pulse received before the first synchronization")
    pulse_time = clock.pulse_time_ns + PULSE_INTERVAL_NS
    pulse_true = clock.pulse_true_ns + PULSE_INTERVAL_NS
    # local time := pulse_time at the pulse instant, drift restarts there
    return ClockState(pulse_time - pulse_true, clock.drift_ppm, clock.resolution_ns,
                      pulse_true, pulse_time, pulse_true)


def advance_pulses(clock: ClockState, true_now: int) -> ClockState:
    """Apply every pulse due at or before ``true_now``."""
    if clock.pulse_true_ns is None:
        return clock
    while clock.pulse_true_ns + PULSE_INTERVAL_NS <= true_now:
        clock = pulse_tick(clock)
    return clock
