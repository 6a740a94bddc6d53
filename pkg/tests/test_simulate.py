from fractions import Fraction

import pytest

from pmusim import analysis, capture, framecodec as fc, simulate
from pmusim.capture import CaptureMetadata
from pmusim.config import RunConfig


def _run(tmp_path, name="cap", **kw):
    cfg = RunConfig(**kw)
    path = tmp_path / f"{name}.bin"
    stats = simulate.simulate(cfg, path)
    meta = CaptureMetadata.read(capture.sidecar_path(path))
    return path, stats, meta


def test_default_ten_seconds_gives_501_frames(tmp_path):
    path, stats, meta = _run(tmp_path)
    assert stats.stopped
    assert path.stat().st_size == 12 * 501
    assert meta == CaptureMetadata()


def test_zero_duration_gives_final_measurement_only(tmp_path):
    path, stats, _ = _run(tmp_path, duration_s=0.0)
    assert path.stat().st_size == 12
    assert stats.stopped
    frame = fc.decode_frame(path.read_bytes())
    assert frame.rms == 0 and frame.indicator == fc.INDICATOR_DATA


def test_same_seed_same_bytes(tmp_path):
    kw = dict(duration_s=3.0, jitter_ns=300_000, seed=17)
    a, _, _ = _run(tmp_path, "a", **kw)
    b, _, _ = _run(tmp_path, "b", **kw)
    assert a.read_bytes() == b.read_bytes()


def test_meter_stream_ends_with_stop_marker():
    frames = list(simulate.meter_frames(RunConfig(duration_s=0.1), capture.TimestampKeeper()))
    assert frames[-1] == fc.STOP_MARKER
    assert len(frames) == 5 + 1 + 1


def test_per_sample_emission(tmp_path):
    path, _, _ = _run(tmp_path, duration_s=1.0, emission="sample")
    # every sample from the first completed window on, plus the final measurement
    assert path.stat().st_size == 12 * (4000 - 79 + 1)
    records = capture.parse(path, CaptureMetadata())
    assert all(r.rms_v > 0 for r in records)


def test_timestamps_follow_master_time(tmp_path):
    path, _, meta = _run(tmp_path, duration_s=3.0, mcu_offset_ns=-40_000_000, mcu_drift_ppm=-80.0)
    records = capture.parse(path, meta)
    start = RunConfig().start_unix_us + simulate.CAPTURE_START_NS // 1000
    for k, rec in enumerate(records[:-1]):
        true_us = start + (80 * k + 79) * 250
        # one 0.1 ms tick of quantization plus at most 80 us of drift before a pulse
        assert -200 <= rec.unix_us - true_us <= 100
    assert all(b.unix_us >= a.unix_us for a, b in zip(records, records[1:]))


def test_rebase_during_simulation(tmp_path):
    # start 2 s before the 40-bit field overflows under the initial constant
    start_us = (fc.DEFAULT_CONSTANT + fc.TSTAMP_LIMIT) * 100 - 2 * 10**6
    start_us -= start_us % 10**6
    path, _, meta = _run(tmp_path, duration_s=3.0, start_unix_us=start_us)
    assert len(meta.rebases) == 1
    records = capture.parse(path, meta)
    assert all(b.unix_us > a.unix_us for a, b in zip(records, records[1:]))
    assert records[0].unix_us > start_us


def test_mean_of_thirty_simulated_values_matches_exact_sum(tmp_path):
    path, _, meta = _run(tmp_path, duration_s=1.0, amplitude_pp=19.37)
    values = [r.rms_v for r in capture.parse(path, meta)][:30]
    exact = float(sum(Fraction(v) for v in values) / 30)
    assert analysis.mean(values) == pytest.approx(exact, rel=1e-12)


def test_sync_demo_rows():
    rows = simulate.sync_demo(RunConfig(repetitions=5, mcu_drift_ppm=90.0))
    assert len(rows) == 5
    assert rows[0].exchange.offset == 5_000_000
    assert all(abs(r.residual) <= 100_000 for r in rows)
