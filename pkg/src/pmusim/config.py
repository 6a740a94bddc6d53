"""Run configuration loaded from ``key=value`` files."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path

from . import kvfile
from .framecodec import DEFAULT_CONSTANT
from .metercore import FrontEndConfig, MeterConfig
from .ptpsync import LinkModel
from .simclock import MCU_RESOLUTION_NS, NS_PER_S, ClockState
from .waveform import WaveformSpec

EMISSION_POLICIES = ("cycle", "sample")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class RunConfig:
    # signal source
    waveform: str = "sine"
    frequency: float = 50.0
    amplitude_pp: float = 20.0
    phase: float = 0.0
    # metering IC
    divider_ratio: float = 0.02120
    full_scale_v: float = 0.25
    sample_rate: int = 4000
    rms_cycle: int = 80
    # clocks
    mcu_offset_ns: int = 5_000_000
    mcu_drift_ppm: float = 20.0
    mcu_resolution_ns: int = MCU_RESOLUTION_NS
    master_offset_ns: int = 0
    master_resolution_ns: int = 1
    # link
    delay_m2s_ns: int = 2_000_000
    delay_s2m_ns: int = 2_000_000
    jitter_ns: int = 0
    drop_probability: float = 0.0
    # run
    duration_s: float = 10.0
    emission: str = "cycle"
    seed: int = 0
    constant: int = DEFAULT_CONSTANT
    start_unix_us: int = 1_700_000_000_000_000
    rebase_margin: int = 0
    buffer_capacity: int = 4096
    repetitions: int = 10
    # report
    sizes: str = "10,20,30"
    bias: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        # component validators name their own field first; map it to the config key
        builders = [
            (self.waveform_spec, {"kind": "waveform"}),
            (self.front_end, {"full_scale": "full_scale_v"}),
            (self.meter, {}),
            (self.mcu_clock, {"resolution_ns": "mcu_resolution_ns", "drift_ppm": "mcu_drift_ppm"}),
            (self.master_clock, {"resolution_ns": "master_resolution_ns"}),
        ]
        for build, names in builders:
            try:
                build()
            except ValueError as exc:
                inner = str(exc).split()[0]
                raise ConfigError(names.get(inner, inner), str(exc)) from None
        for name in ("delay_m2s_ns", "delay_s2m_ns", "jitter_ns"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be >= 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ConfigError("drop_probability", "must be in [0, 1]")
        if self.duration_s < 0:
            raise ConfigError("duration_s", "must be >= 0")
        if self.emission not in EMISSION_POLICIES:
            raise ConfigError("emission", f"must be one of {EMISSION_POLICIES}")
        if self.start_unix_us < 0 or self.start_unix_us % 1_000_000:
            raise ConfigError("start_unix_us", "must be a non-negative whole second")
        if self.constant < 0:
            raise ConfigError("constant", "must be >= 0")
        if self.buffer_capacity < 1:
            raise ConfigError("buffer_capacity", "must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions", "must be >= 1")
        worst = 2 * (self.delay_m2s_ns + self.jitter_ns) + self.delay_s2m_ns + self.jitter_ns
        if worst >= NS_PER_S:
            raise ConfigError("delay_m2s_ns", "a sync exchange must finish within one second")
        try:
            sizes = self.size_list
        except ValueError:
            raise ConfigError("sizes", f"expected comma-separated integers, got {self.sizes!r}") from None
        if not sizes or min(sizes) < 2:
            raise ConfigError("sizes", "every comparison-set size must be >= 2")

    def waveform_spec(self) -> WaveformSpec:
        return WaveformSpec(self.waveform, self.frequency, self.amplitude_pp, self.phase)

    def front_end(self) -> FrontEndConfig:
        return FrontEndConfig(self.divider_ratio, self.full_scale_v)

    def meter(self) -> MeterConfig:
        return MeterConfig(self.sample_rate, self.rms_cycle)

    def mcu_clock(self) -> ClockState:
        return ClockState(self.mcu_offset_ns, self.mcu_drift_ppm, self.mcu_resolution_ns)

    def master_clock(self) -> ClockState:
        return ClockState(self.master_offset_ns, 0.0, self.master_resolution_ns)

    def link(self) -> LinkModel:
        return LinkModel(self.delay_m2s_ns, self.delay_s2m_ns, self.jitter_ns, self.seed, self.drop_probability)

    @property
    def size_list(self) -> list[int]:
        return [int(s) for s in self.sizes.split(",") if s.strip()]


def _convert(name: str, kind, raw: str):
    if kind is str:
        return raw
    try:
        if kind is float:
            return float(raw)
        try:
            return int(raw)
        except ValueError:
            # allow exact scientific notation such as 16e12
            value = float(raw)
            if not value.is_integer():
                raise
            return int(value)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind.__name__}") from None


def from_pairs(pairs, **overrides) -> RunConfig:
    hints = typing.get_type_hints(RunConfig)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    for key, raw in pairs:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        values[key] = _convert(key, hints[key], raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load(path: str | Path | None = None, **overrides) -> RunConfig:
    pairs = kvfile.read_kv(path) if path is not None else []
    return from_pairs(pairs, **overrides)


def dump(cfg: RunConfig) -> str:
    return kvfile.format_kv((f.name, getattr(cfg, f.name)) for f in dataclasses.fields(cfg))
