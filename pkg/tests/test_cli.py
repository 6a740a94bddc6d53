import csv

import pytest

from pmusim.cli import main


def _write_cfg(path, **kw):
    path.write_text("".join(f"{k}={v}\n" for k, v in kw.items()))
    return path


def test_full_command_chain(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "run.cfg", duration_s=2.0)
    raw = tmp_path / "cap.bin"
    assert main(["simulate", "--config", str(cfg), "--out", str(raw), "--seed", "3"]) == 0
    assert raw.stat().st_size == 12 * 101
    parsed = tmp_path / "cap.csv"
    assert main(["parse", str(raw), "--out", str(parsed)]) == 0
    assert parsed.read_text().splitlines()[0] == "unix_us,inst_v,rms_v"
    report = tmp_path / "report.csv"
    assert main(["report", str(parsed), "--config", str(cfg), "--out", str(report)]) == 0
    rows = list(csv.DictReader(report.open()))
    assert [r["n"] for r in rows] == ["10", "20", "30"]
    assert all(float(r["pct_diff"]) <= 0.01 for r in rows)


def test_parse_to_stdout_with_explicit_meta(tmp_path, capsys):
    raw = tmp_path / "x.bin"
    assert main(["simulate", "--out", str(raw), "--duration", "0.1"]) == 0
    meta = tmp_path / "x.meta"
    assert main(["parse", str(raw), "--meta", str(meta)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 6


def test_syncdemo(tmp_path, capsys):
    assert main(["syncdemo", "--repetitions", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t1,t2,t3,t4,offset,residual"
    assert len(lines) == 5


def test_report_bias_and_sizes(tmp_path, capsys):
    raw = tmp_path / "b.bin"
    main(["simulate", "--out", str(raw), "--duration", "1"])
    parsed = tmp_path / "b.csv"
    main(["parse", str(raw), "--out", str(parsed)])
    assert main(["report", str(parsed), "--sizes", "5,15", "--bias", "0.001"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [r["n"] for r in rows] == ["5", "15"]
    assert all(float(r["pct_diff"]) == pytest.approx(0.0999, abs=2e-4) for r in rows)


def _one_line_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("pmusim: error:")
    return err[0]


def test_bad_config_exits_nonzero(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "bad.cfg", rms_cycle=0)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.bin")]) == 2
    assert "rms_cycle" in _one_line_error(capsys)


def test_trailing_byte_file_exits_nonzero(tmp_path, capsys):
    raw = tmp_path / "t.bin"
    raw.write_bytes(bytes(13))
    (tmp_path / "t.meta").write_text(
        "version=1\nconstant=16000000000000\ndivider_ratio=0.0212\nfull_scale_v=0.25\nsample_rate=4000\nrms_cycle=80\n")
    assert main(["parse", str(raw)]) == 2
    assert _one_line_error(capsys).endswith("1 trailing byte")


def test_missing_file_exits_nonzero(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "nope.bin")]) == 2
    _one_line_error(capsys)


def test_insufficient_data_exits_nonzero(tmp_path, capsys):
    raw = tmp_path / "s.bin"
    main(["simulate", "--out", str(raw), "--duration", "0.2"])
    parsed = tmp_path / "s.csv"
    main(["parse", str(raw), "--out", str(parsed)])
    assert main(["report", str(parsed)]) == 2
    assert "need 30" in _one_line_error(capsys)
