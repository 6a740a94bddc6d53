"""Command-line entry point: ``pmusim {simulate,parse,report,syncdemo}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
from pathlib import Path

from . import analysis, capture, config, simulate
from .framecodec import FrameError, TimestampOverflow, TimestampUnderflow
from .kvfile import KvError
from .ptpsync import SyncTimeout

log = logging.getLogger("pmusim")

EXIT_INVALID = 2
EXIT_FAILED = 1


@contextlib.contextmanager
def _output(path):
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _load_config(args, **overrides) -> config.RunConfig:
    return config.load(args.config, seed=args.seed, **overrides)


def cmd_simulate(args) -> int:
    cfg = _load_config(args, duration_s=args.duration)
    out = Path(args.out or "capture.bin")
    stats = simulate.simulate(cfg, out)
    log.info("wrote %d frames to %s (+ %s)", stats.written, out, capture.sidecar_path(out))
    return 0


def cmd_parse(args) -> int:
    meta_path = args.meta or capture.sidecar_path(args.raw)
    meta = capture.CaptureMetadata.read(meta_path)
    records = capture.parse(Path(args.raw), meta)
    with _output(args.out) as out:
        capture.write_csv(records, out)
    return 0


def cmd_report(args) -> int:
    cfg = _load_config(args, sizes=args.sizes, bias=args.bias)
    with open(args.parsed, newline="", encoding="utf-8") as fh:
        records = capture.read_csv(fh)
    spec = cfg.waveform_spec()
    reference = analysis.reference_meter(spec, (r.unix_us for r in records), cfg.bias)
    report = analysis.build_report(records, reference, cfg.size_list, cfg.seed, spec.kind)
    with _output(args.out) as out:
        report.write_csv(out)
    return 0


def cmd_syncdemo(args) -> int:
    cfg = _load_config(args, repetitions=args.repetitions)
    rows = simulate.sync_demo(cfg)
    with _output(args.out) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("t1", "t2", "t3", "t4", "offset", "residual"))
        for row in rows:
            w.writerow(row.exchange.as_row() + (row.residual,))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value run configuration file")
    common.add_argument("--out", help="output path ('-' for stdout where text)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pmusim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a capture into a raw .bin file")
    p.add_argument("--duration", type=float, help="override duration_s")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("parse", parents=[common], help="convert a raw capture to CSV")
    p.add_argument("raw", type=Path)
    p.add_argument("--meta", type=Path, help="metadata sidecar (default: RAW with .meta suffix)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("report", parents=[common], help="compare parsed RMS against the reference oracle")
    p.add_argument("parsed", type=Path)
    p.add_argument("--sizes", help="comma-separated comparison-set sizes")
    p.add_argument("--bias", type=float, help="relative bias applied to the reference")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("syncdemo", parents=[common], help="run repeated PTP exchanges")
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_syncdemo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (config.ConfigError, KvError, capture.ParseError, analysis.InsufficientData,
            FrameError, TimestampOverflow, TimestampUnderflow, FileNotFoundError) as exc:
        print(f"pmusim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (capture.CaptureError, SyncTimeout, OSError) as exc:
        print(f"pmusim: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
