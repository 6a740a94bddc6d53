"""Four-timestamp delay-request synchronization between master and MCU.

Sync (master -> slave) yields t1/t2, Delay-Req (slave -> master) yields t3/t4,
and Delay-Resp carries t4 back. The slave then subtracts

    offset = ((t2 - t1) - (t4 - t3)) / 2

from its local time. Each party timestamps with its own quantized clock.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from . import simclock
from .simclock import ClockState


class SyncTimeout(RuntimeError):
    """A protocol message was dropped on the link."""


@dataclass(frozen=True)
class LinkModel:
    delay_m2s: int = 0
    delay_s2m: int = 0
    jitter: int = 0
    seed: int = 0
    drop_probability: float = 0.0

    def __post_init__(self):
        for name in ("delay_m2s", "delay_s2m", "jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError(f"drop_probability must be in [0, 1], got {self.drop_probability}")

    def rng(self) -> random.Random:
        return random.Random(self.seed)

    def sample_delay(self, nominal: int, rng: random.Random) -> int:
        if self.drop_probability and rng.random() < self.drop_probability:
            raise SyncTimeout("message dropped on link")
        if not self.jitter:
            return nominal
        return max(0, nominal + rng.randint(-self.jitter, self.jitter))


@dataclass(frozen=True)
class PtpExchange:
    t1: int
    t2: int
    t3: int
    t4: int
    offset: int
    # slave-local times at sync start/end, before correction
    sync_start: int = 0
    sync_end: int = 0
    pulse_time: int = 0

    def as_row(self) -> tuple[int, int, int, int, int]:
        return (self.t1, self.t2, self.t3, self.t4, self.offset)


def half_toward_zero(x: int) -> int:
    q = abs(x) // 2
    return q if x >= 0 else -q


def compute_offset(t1: int, t2: int, t3: int, t4: int) -> int:
    return half_toward_zero((t2 - t1) - (t4 - t3))


def run_sync(master: ClockState, slave: ClockState, link: LinkModel, true_now: int,
             rng: random.Random | None = None) -> tuple[PtpExchange, ClockState]:
    """Run one exchange starting at the pulse instant ``true_now``.

    Returns the exchange record and the corrected slave, whose ``pulse_time``
    is the corrected local time of the pulse that started the exchange.
    ``rng`` carries jitter state across repeated exchanges; a fresh generator
    seeded from ``link.seed`` is used when omitted.
    """
    if rng is None:
        rng = link.rng()
    sync_start = simclock.read(slave, true_now)

    t1 = simclock.read(master, true_now)
    arrive = true_now + link.sample_delay(link.delay_m2s, rng)
    t2 = simclock.read(slave, arrive)
    t3 = t2
    arrive = arrive + link.sample_delay(link.delay_s2m, rng)
    t4 = simclock.read(master, arrive)
    arrive = arrive + link.sample_delay(link.delay_m2s, rng)
    sync_end = simclock.read(slave, arrive)

    offset = compute_offset(t1, t2, t3, t4)
    corrected = simclock.apply_correction(slave, offset)
    # elapsed local time since the pulse is sync_end - sync_start, so the
    # corrected pulse time is (sync_end - offset) - (sync_end - sync_start)
    pulse_time = (sync_end - offset) - (sync_end - sync_start)
    pulse_time = simclock.floor_to(pulse_time, slave.resolution_ns)
    corrected = replace(corrected, pulse_time_ns=pulse_time, pulse_true_ns=true_now)
    exchange = PtpExchange(t1, t2, t3, t4, offset, sync_start, sync_end, pulse_time)
    return exchange, corrected


def residual(master: ClockState, slave: ClockState, true_now: int) -> int:
    """Slave minus master reading at ``true_now``."""
    return simclock.read(slave, true_now) - simclock.read(master, true_now)
