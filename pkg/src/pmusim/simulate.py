"""End-to-end drivers: meter frame emission, simulated capture, sync demo."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from . import capture, metercore, ptpsync, simclock
from .capture import CaptureMetadata, StopButton, TimestampKeeper
from .config import RunConfig
from .framecodec import STOP_MARKER, DataFrame, TimestampBase, encode_frame
from .simclock import NS_PER_S, NS_PER_US

log = logging.getLogger(__name__)

# measurements start at the first pulse after the initial synchronization
CAPTURE_START_NS = NS_PER_S


@dataclass
class MeterRun:
    """State shared between the frame generator and its caller."""
    exchange: ptpsync.PtpExchange | None = None
    frames: int = 0


def meter_frames(cfg: RunConfig, keeper: TimestampKeeper, stop: StopButton | None = None,
                 run: MeterRun | None = None) -> Iterator[bytes]:
    """Encoded frames the MCU sends for one run, ending with the stop sequence.

    Synchronizes at true time 0 (a pulse), then measures from the next pulse
    for ``cfg.duration_s`` or until ``stop`` is pressed, then emits one final
    measurement and the stop marker.
    """
    run = run if run is not None else MeterRun()
    spec, fe, mcfg = cfg.waveform_spec(), cfg.front_end(), cfg.meter()
    exchange, mcu = ptpsync.run_sync(cfg.master_clock(), cfg.mcu_clock(), cfg.link(), 0)
    run.exchange = exchange
    log.debug("initial sync: offset %d ns, pulse_time %d ns", exchange.offset, exchange.pulse_time)

    def frame_bytes(inst: int, rms: int, mcu_ns: int) -> bytes:
        unix_us = cfg.start_unix_us + mcu_ns // NS_PER_US
        frame = DataFrame(inst, rms, keeper.stamp(unix_us, run.frames))
        run.frames += 1
        return encode_frame(frame)

    index = 0
    latest_rms = 0
    if cfg.duration_s > 0:
        samples = metercore.run_capture(spec, fe, mcfg, mcu, cfg.duration_s, start_ns=CAPTURE_START_NS)
        warm = False
        for s in samples:
            if stop is not None and stop.pressed:
                break
            index, latest_rms = s.index + 1, s.rms
            warm = warm or s.rms_ready
            if s.rms_ready if cfg.emission == "cycle" else warm:
                yield frame_bytes(s.inst, s.rms, s.mcu_ns)

    # final measurement: one more sample on the grid, with the latest RMS
    t = metercore.sample_time_ns(index, mcfg, CAPTURE_START_NS)
    mcu = simclock.advance_pulses(mcu, t)
    yield frame_bytes(metercore.measure(spec, fe, t), latest_rms, simclock.read(mcu, t))
    yield STOP_MARKER


def metadata_for(cfg: RunConfig, keeper: TimestampKeeper) -> CaptureMetadata:
    return CaptureMetadata(
        constant=keeper.initial.constant,
        divider_ratio=cfg.divider_ratio,
        full_scale_v=cfg.full_scale_v,
        sample_rate=cfg.sample_rate,
        rms_cycle=cfg.rms_cycle,
        rebases=keeper.events,  # shared, so rebases during the run are recorded
    )


def simulate(cfg: RunConfig, bin_path: str | Path, stop: StopButton | None = None) -> capture.CaptureStats:
    """Run the meter through the two-stage capture into ``bin_path`` (+ sidecar)."""
    keeper = TimestampKeeper(TimestampBase(cfg.constant), cfg.rebase_margin)
    return capture.capture_to_file(meter_frames(cfg, keeper, stop), bin_path,
                                   metadata_for(cfg, keeper), cfg.buffer_capacity)


@dataclass(frozen=True)
class SyncRow:
    exchange: ptpsync.PtpExchange
    residual: int


def sync_demo(cfg: RunConfig) -> list[SyncRow]:
    """Repeated exchanges, one per pulse, each re-synchronizing the drifting MCU.

    The residual is MCU minus master reading when the exchange completes.
    """
    master, mcu, link = cfg.master_clock(), cfg.mcu_clock(), cfg.link()
    rng = link.rng()
    rows = []
    for k in range(cfg.repetitions):
        pulse = k * NS_PER_S
        exchange, mcu = ptpsync.run_sync(master, mcu, link, pulse, rng)
        done = pulse + 2 * link.delay_m2s + link.delay_s2m
        rows.append(SyncRow(exchange, ptpsync.residual(master, mcu, done)))
    return rows
