"""Bit-exact codec for the 12-byte meter data frame.

Layout (all multi-byte fields big-endian)::

    [0]      indicator     0xD1 data, 0x57 stop request
    [1:4]    instantaneous sample, 24-bit two's complement
    [4:7]    RMS, 24-bit unsigned
    [7:12]   timestamp, 40-bit unsigned: floor(unix_us / 100) - base constant
"""

from __future__ import annotations

from dataclasses import dataclass

FRAME_SIZE = 12
INDICATOR_DATA = 0xD1
INDICATOR_STOP = 0x57
INDICATORS = frozenset({INDICATOR_DATA, INDICATOR_STOP})

TSTAMP_BITS = 40
TSTAMP_LIMIT = 1 << TSTAMP_BITS
TSTAMP_UNIT_US = 100
DEFAULT_CONSTANT = 16 * 10**12

INST_MIN, INST_MAX = -(1 << 23), (1 << 23) - 1
RMS_MAX = (1 << 24) - 1


class FrameError(ValueError):
    pass


class UnknownIndicator(FrameError):
    def __init__(self, indicator: int):
        super().__init__(f"unknown indicator byte 0x{indicator:02X}")
        self.indicator = indicator


class TimestampUnderflow(ValueError):
    pass


class TimestampOverflow(ValueError):
    """The timestamp no longer fits in 40 bits under the current base; rebase."""


@dataclass(frozen=True)
class TimestampBase:
    constant: int = DEFAULT_CONSTANT

    def __post_init__(self):
        if self.constant < 0:
            raise ValueError(f"constant must be >= 0, got {self.constant}")


@dataclass(frozen=True)
class DataFrame:
    inst: int = 0
    rms: int = 0
    tstamp: int = 0
    indicator: int = INDICATOR_DATA

    @property
    def is_stop(self) -> bool:
        return self.indicator == INDICATOR_STOP


STOP_FRAME = DataFrame(indicator=INDICATOR_STOP)


def encode_timestamp(unix_us: int, base: TimestampBase) -> int:
    code = unix_us // TSTAMP_UNIT_US - base.constant
    if code < 0:
        raise TimestampUnderflow(f"timestamp {unix_us} us predates base constant {base.constant}")
    if code >= TSTAMP_LIMIT:
        raise TimestampOverflow(f"timestamp code {code} does not fit in {TSTAMP_BITS} bits")
    return code


def decode_timestamp(code: int | bytes, base: TimestampBase) -> int:
    if isinstance(code, (bytes, bytearray)):
        if len(code) != 5:
            raise FrameError(f"timestamp field must be 5 bytes, got {len(code)}")
        code = int.from_bytes(code, "big")
    if not 0 <= code < TSTAMP_LIMIT:
        raise FrameError(f"timestamp code {code} out of 40-bit range")
    return (code + base.constant) * TSTAMP_UNIT_US


def timestamp_bytes(code: int) -> bytes:
    return code.to_bytes(5, "big")


def needs_rebase(base: TimestampBase, unix_us: int, margin: int = 0) -> bool:
    """True when ``unix_us`` (plus ``margin`` units of 100 us) would overflow."""
    return unix_us // TSTAMP_UNIT_US - base.constant + margin >= TSTAMP_LIMIT


def rebase(base: TimestampBase, unix_us: int, margin: int = 0) -> TimestampBase:
    """Move the base constant up to ``unix_us`` if it would otherwise overflow.

    Returns ``base`` itself when no rebase is needed; callers compare identity
    to know whether to record a rebase event.
    """
    if not needs_rebase(base, unix_us, margin):
        return base
    return TimestampBase(unix_us // TSTAMP_UNIT_US)


def encode_frame(frame: DataFrame) -> bytes:
    if frame.indicator not in INDICATORS:
        raise UnknownIndicator(frame.indicator)
    if not INST_MIN <= frame.inst <= INST_MAX:
        raise FrameError(f"instantaneous code {frame.inst} outside 24-bit signed range")
    if not 0 <= frame.rms <= RMS_MAX:
        raise FrameError(f"RMS code {frame.rms} outside 24-bit unsigned range")
    if not 0 <= frame.tstamp < TSTAMP_LIMIT:
        raise FrameError(f"timestamp code {frame.tstamp} outside 40-bit range")
    return (bytes((frame.indicator,))
            + frame.inst.to_bytes(3, "big", signed=True)
            + frame.rms.to_bytes(3, "big")
            + frame.tstamp.to_bytes(5, "big"))


def decode_frame(data: bytes) -> DataFrame:
    if len(data) != FRAME_SIZE:
        raise FrameError(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
    if data[0] not in INDICATORS:
        raise UnknownIndicator(data[0])
    return DataFrame(
        inst=int.from_bytes(data[1:4], "big", signed=True),
        rms=int.from_bytes(data[4:7], "big"),
        tstamp=int.from_bytes(data[7:12], "big"),
        indicator=data[0],
    )


STOP_MARKER = encode_frame(STOP_FRAME)
