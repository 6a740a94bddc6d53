import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pmusim import analysis
from pmusim.analysis import build_report, mean, mean_pct_diff, reference_meter, std_error
from pmusim.capture import CaptureRecord
from pmusim.waveform import WaveformSpec

values = st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50)


def printed(x, sig=4):
    return float(f"{x:.{sig}g}")


def test_mean_examples():
    assert mean([6.9798]) == 6.9798
    assert mean([1, 2, 3]) == 2


def test_mean_empty():
    with pytest.raises(ValueError):
        mean([])


def test_mean_matches_exact_rational_sum():
    xs = [7.0710678 + (k % 7) * 7.03e-7 - 1e-6 for k in range(30)]
    exact = float(sum(Fraction(x) for x in xs) / len(xs))
    assert mean(xs) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("xs, expected", [([5, 5, 5], 0.0), ([1, 3], math.sqrt(2))])
def test_std_error_examples(xs, expected):
    assert std_error(xs) == pytest.approx(expected, abs=1e-15)


def test_std_error_needs_two():
    with pytest.raises(ValueError):
        std_error([1.0])


@given(values, st.floats(-1e3, 1e3))
def test_std_error_translation_invariant(xs, c):
    assert std_error([x + c for x in xs]) == pytest.approx(std_error(xs), rel=1e-9, abs=1e-9)


@given(values, st.floats(0.01, 100))
def test_std_error_scales_linearly(xs, k):
    assert std_error([x * k for x in xs]) == pytest.approx(k * std_error(xs), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("ref, platform, pct", [
    (6.9798, 6.9829, 0.04441),
    (6.9800, 6.9829, 0.04155),
    (5.6594, 5.7006, 0.7280),
    (5.6594, 5.7007, 0.7298),
    (5.6592, 5.7006, 0.7316),
])
def test_mean_pct_diff_table_values(ref, platform, pct):
    assert printed(mean_pct_diff(ref, platform)) == pct


def test_mean_pct_diff_identical_and_zero():
    assert mean_pct_diff(3.3, 3.3) == 0.0
    with pytest.raises(ValueError):
        mean_pct_diff(0.0, 1.0)


@given(st.floats(0.1, 100), st.floats(-100, 100))
def test_mean_pct_diff_non_negative(ref, platform):
    assert mean_pct_diff(ref, platform) >= 0


def test_reference_meter():
    ts = [1, 2, 3]
    assert [v for _, v in reference_meter(WaveformSpec("sine"), ts)] == pytest.approx([7.0710678] * 3, abs=1e-7)
    assert [v for _, v in reference_meter(WaveformSpec("triangle"), ts)] == pytest.approx([5.7735027] * 3, abs=1e-7)
    biased = reference_meter(WaveformSpec("sine"), ts, bias=0.01)
    assert biased[0] == (1, pytest.approx(10 / math.sqrt(2) * 1.01))


def _records(values, step_us=20_000, t0=1_700_000_000_000_000):
    return [CaptureRecord(t0 + i * step_us, 0.0, v) for i, v in enumerate(values)]


def test_identical_series_report():
    vals = [7.0 + 0.001 * (i % 5) for i in range(100)]
    recs = _records(vals)
    ref = [(r.unix_us, r.rms_v) for r in recs]
    report = build_report(recs, ref, seed=3)
    assert [r.n for r in report.rows] == [10, 20, 30]
    for row in report.rows:
        assert row.pct_diff == 0.0
        assert row.ref_s == row.platform_s
        assert row.ref_mean == row.platform_mean


def test_report_deterministic_csv():
    recs = _records([7.0 + 0.0001 * ((i * 37) % 11) for i in range(200)])
    ref = reference_meter(WaveformSpec(), [r.unix_us for r in recs])

    def render(seed):
        out = io.StringIO()
        build_report(recs, ref, seed=seed, waveform="sine").write_csv(out)
        return out.getvalue()

    assert render(5) == render(5)
    assert render(5) != render(6)
    assert render(5).splitlines()[0] == "waveform,n,ref_mean,platform_mean,ref_s,platform_s,pct_diff"


def test_report_insufficient_data():
    recs = _records([7.0] * 29)
    with pytest.raises(analysis.InsufficientData):
        build_report(recs, [(r.unix_us, 7.0) for r in recs])


def test_report_rejects_tiny_sets():
    recs = _records([7.0] * 40)
    with pytest.raises(ValueError):
        build_report(recs, [(r.unix_us, 7.0) for r in recs], sizes=(1,))


def test_pairing_nearest_within_tolerance():
    recs = _records([1.0, 2.0, 3.0], step_us=100_000)
    t0 = recs[0].unix_us
    ref = [(t0 + 4_000, 10.0), (t0 + 100_000 - 9_000, 20.0), (t0 + 100_000 + 2_000, 21.0), (t0 + 250_000, 30.0)]
    # record 2 has no reference within 10 ms
    assert analysis.pair_by_time(recs, ref) == [(1.0, 10.0), (2.0, 21.0)]


def test_bias_shows_up_in_pct_diff():
    recs = _records([5.0] * 60)
    ref = [(r.unix_us, 5.0 * 1.002) for r in recs]
    for row in build_report(recs, ref).rows:
        assert row.pct_diff == pytest.approx(0.2 / 1.002, rel=1e-9)
