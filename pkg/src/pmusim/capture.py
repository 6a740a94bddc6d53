"""Capture server: receiver and writer stages, raw persistence and parsing.

The receiver stage reads 12-byte frames from the meter link and passes data
frames through a bounded queue to the writer stage, which appends them to a
raw ``.bin`` file. A stop frame ends reception; the end-of-stream sentinel
then propagates to the writer. Decoding constants live in a ``key=value``
sidecar (``.meta``) next to the raw file, since the raw format has no header.
"""

from __future__ import annotations

import csv
import logging
import queue
import threading
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, TextIO

from . import framecodec, kvfile
from .framecodec import FRAME_SIZE, DataFrame, TimestampBase, UnknownIndicator
from .metercore import FrontEndConfig, decode_instant, decode_voltage

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_CAPACITY = 4096
CSV_HEADER = ("unix_us", "inst_v", "rms_v")

_EOS = None  # end-of-stream sentinel on the stage queue


class CaptureError(RuntimeError):
    pass


class ParseError(ValueError):
    pass


class NonMonotoneTimestamps(UserWarning):
    pass


@dataclass
class CaptureMetadata:
    constant: int = framecodec.DEFAULT_CONSTANT
    divider_ratio: float = 0.02120
    full_scale_v: float = 0.25
    sample_rate: int = 4000
    rms_cycle: int = 80
    version: int = FORMAT_VERSION
    # (first frame index, new constant) for every rebase during the capture
    rebases: list[tuple[int, int]] = field(default_factory=list)

    @property
    def front_end(self) -> FrontEndConfig:
        return FrontEndConfig(self.divider_ratio, self.full_scale_v)

    def base_for_frame(self, index: int) -> TimestampBase:
        starts = [i for i, _ in self.rebases]
        pos = bisect_right(starts, index)
        return TimestampBase(self.rebases[pos - 1][1] if pos else self.constant)

    def to_pairs(self) -> list[tuple[str, object]]:
        pairs: list[tuple[str, object]] = [
            ("version", self.version),
            ("constant", self.constant),
            ("divider_ratio", repr(self.divider_ratio)),
            ("full_scale_v", repr(self.full_scale_v)),
            ("sample_rate", self.sample_rate),
            ("rms_cycle", self.rms_cycle),
        ]
        pairs += [("rebase", f"{i},{c}") for i, c in self.rebases]
        return pairs

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> CaptureMetadata:
        fields: dict[str, str] = {}
        rebases = []
        for key, value in pairs:
            if key == "rebase":
                index, _, constant = value.partition(",")
                rebases.append((int(index), int(constant)))
            else:
                fields[key] = value
        required = ("version", "constant", "divider_ratio", "full_scale_v", "sample_rate", "rms_cycle")
        missing = [k for k in required if k not in fields]
        if missing:
            raise ParseError(f"metadata missing keys: {', '.join(missing)}")
        unknown = sorted(set(fields) - set(required))
        if unknown:
            raise ParseError(f"metadata has unknown keys: {', '.join(unknown)}")
        try:
            meta = cls(
                constant=int(fields["constant"]),
                divider_ratio=float(fields["divider_ratio"]),
                full_scale_v=float(fields["full_scale_v"]),
                sample_rate=int(fields["sample_rate"]),
                rms_cycle=int(fields["rms_cycle"]),
                version=int(fields["version"]),
                rebases=sorted(rebases),
            )
        except ValueError as exc:
            raise ParseError(f"bad metadata value: {exc}") from None
        if meta.version != FORMAT_VERSION:
            raise ParseError(f"unsupported capture format version {meta.version}")
        meta.front_end  # validates ratio and full scale
        return meta

    def write(self, path: str | Path) -> None:
        kvfile.write_kv(path, self.to_pairs())

    @classmethod
    def read(cls, path: str | Path) -> CaptureMetadata:
        return cls.from_pairs(kvfile.read_kv(path))


def sidecar_path(bin_path: str | Path) -> Path:
    return Path(bin_path).with_suffix(".meta")


class TimestampKeeper:
    """Server-side bookkeeping of the timestamp base constant.

    Raises the constant before a timestamp would overflow 40 bits and records
    the index of the first frame encoded under each new constant.
    """

    def __init__(self, base: TimestampBase | None = None, margin: int = 0):
        self.initial = base or TimestampBase()
        self.base = self.initial
        self.margin = margin
        self.events: list[tuple[int, int]] = []

    def stamp(self, unix_us: int, frame_index: int) -> int:
        new = framecodec.rebase(self.base, unix_us, self.margin)
        if new is not self.base:
            log.info("rebasing timestamp constant %d -> %d at frame %d",
                     self.base.constant, new.constant, frame_index)
            self.base = new
            self.events.append((frame_index, new.constant))
        return framecodec.encode_timestamp(unix_us, self.base)


class StopButton:
    """User stop request; presses after the first are ignored."""

    def __init__(self):
        self._pressed = threading.Event()

    def press(self) -> bool:
        if self._pressed.is_set():
            return False
        self._pressed.set()
        return True

    @property
    def pressed(self) -> bool:
        return self._pressed.is_set()


def stop_sequence(final: DataFrame) -> list[bytes]:
    """Frames the meter sends on stop: one final measurement, then the stop marker."""
    if final.indicator != framecodec.INDICATOR_DATA:
        raise ValueError("final measurement must be a data frame")
    return [framecodec.encode_frame(final), framecodec.STOP_MARKER]


@dataclass
class CaptureStats:
    accepted: int = 0
    rejected: int = 0
    stopped: bool = False
    written: int = 0
    error: str | None = None


def iter_frames(stream: BinaryIO) -> Iterator[bytes]:
    """Split a byte stream into 12-byte chunks; a short tail is yielded as is."""
    while True:
        chunk = stream.read(FRAME_SIZE)
        if not chunk:
            return
        yield chunk


def receive(source: Iterable[bytes], buf: queue.Queue, stats: CaptureStats,
            abort: threading.Event | None = None) -> None:
    """Receiver stage: validate frames and enqueue data frames in arrival order.

    Blocks when the queue is full. Always finishes by enqueueing the
    end-of-stream sentinel, whether stopped by the meter, by source exhaustion
    or by a writer abort.
    """
    try:
        for chunk in source:
            if abort is not None and abort.is_set():
                break
            try:
                frame = framecodec.decode_frame(bytes(chunk))
            except framecodec.FrameError as exc:
                stats.rejected += 1
                log.warning("rejected frame: %s", exc)
                continue
            if frame.is_stop:
                stats.stopped = True
                break
            if not _put(buf, bytes(chunk), abort):
                break
            stats.accepted += 1
    finally:
        _put(buf, _EOS, abort)


def _put(buf: queue.Queue, item, abort: threading.Event | None) -> bool:
    # blocking put that gives up once the writer has died
    if abort is None:
        buf.put(item)
        return True
    while True:
        try:
            buf.put(item, timeout=0.05)
            return True
        except queue.Full:
            if abort.is_set():
                return False


def write(buf: queue.Queue, sink: BinaryIO, stats: CaptureStats,
          abort: threading.Event | None = None) -> None:
    """Writer stage: append queued frames to ``sink`` until the sentinel."""
    while True:
        item = buf.get()
        if item is _EOS:
            break
        if stats.error is not None:
            continue  # keep draining so the receiver never blocks
        try:
            sink.write(item)
            stats.written += 1
        except OSError as exc:
            stats.error = f"storage failure after {stats.written} frames: {exc}"
            if abort is not None:
                abort.set()
            _truncate_to_frames(sink)
    if stats.error is None:
        sink.flush()


def _truncate_to_frames(sink: BinaryIO) -> None:
    try:
        sink.flush()
    except OSError:
        pass
    try:
        size = sink.seek(0, 2)
        sink.truncate(size - size % FRAME_SIZE)
    except (OSError, AttributeError, ValueError):
        log.error("could not truncate partial capture to a frame boundary")


def run_pipeline(source: Iterable[bytes], sink: BinaryIO,
                 capacity: int = DEFAULT_CAPACITY) -> CaptureStats:
    """Run the receiver and writer stages concurrently until termination."""
    if capacity < 1:
        raise ValueError(f"buffer capacity must be >= 1, got {capacity}")
    buf: queue.Queue = queue.Queue(maxsize=capacity)
    stats = CaptureStats()
    abort = threading.Event()
    errors: list[BaseException] = []

    def guarded(fn, *args):
        try:
            fn(*args)
        except BaseException as exc:  # surfaced to the caller below
            errors.append(exc)
            abort.set()

    writer = threading.Thread(target=guarded, args=(write, buf, sink, stats, abort), name="capture-writer")
    receiver = threading.Thread(target=guarded, args=(receive, source, buf, stats, abort), name="capture-receiver")
    writer.start()
    receiver.start()
    receiver.join()
    writer.join()
    if errors:
        raise CaptureError(f"capture stage failed: {errors[0]!r}") from errors[0]
    if stats.error is not None:
        raise CaptureError(stats.error)
    return stats


def capture_to_file(source: Iterable[bytes], bin_path: str | Path, meta: CaptureMetadata,
                    capacity: int = DEFAULT_CAPACITY) -> CaptureStats:
    """Run the pipeline into ``bin_path`` and write its metadata sidecar.

    ``meta.rebases`` may be filled by the source while it runs; the sidecar is
    written after the pipeline terminates.
    """
    bin_path = Path(bin_path)
    with open(bin_path, "wb") as sink:
        stats = run_pipeline(source, sink, capacity)
    meta.write(sidecar_path(bin_path))
    return stats


@dataclass(frozen=True)
class CaptureRecord:
    unix_us: int
    inst_v: float
    rms_v: float


def _trailing_error(n: int) -> ParseError:
    return ParseError(f"{n} trailing byte" + ("" if n == 1 else "s"))


def parse(raw: bytes | str | Path, meta: CaptureMetadata) -> list[CaptureRecord]:
    """Decode a raw capture into readable records, one per data frame."""
    data = raw if isinstance(raw, (bytes, bytearray)) else Path(raw).read_bytes()
    extra = len(data) % FRAME_SIZE
    if extra:
        raise _trailing_error(extra)
    fe = meta.front_end
    records = []
    last = None
    for index in range(len(data) // FRAME_SIZE):
        chunk = data[index * FRAME_SIZE:(index + 1) * FRAME_SIZE]
        try:
            frame = framecodec.decode_frame(chunk)
        except UnknownIndicator as exc:
            raise ParseError(f"frame {index}: {exc}") from None
        if frame.is_stop:
            continue
        unix_us = framecodec.decode_timestamp(frame.tstamp, meta.base_for_frame(index))
        if last is not None and unix_us < last:
            warnings.warn(f"frame {index}: timestamp {unix_us} precedes {last}",
                          NonMonotoneTimestamps, stacklevel=2)
        last = unix_us
        records.append(CaptureRecord(unix_us, decode_instant(frame.inst, fe), decode_voltage(frame.rms, fe)))
    return records


def write_csv(records: Iterable[CaptureRecord], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow((r.unix_us, f"{r.inst_v:.6f}", f"{r.rms_v:.6f}"))


def read_csv(src: TextIO) -> list[CaptureRecord]:
    reader = csv.reader(src)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(f"expected CSV header {','.join(CSV_HEADER)}")
    records = []
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        try:
            records.append(CaptureRecord(int(row[0]), float(row[1]), float(row[2])))
        except (IndexError, ValueError):
            raise ParseError(f"line {lineno}: malformed record {row!r}") from None
    return records
