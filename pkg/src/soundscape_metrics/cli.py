"""Command line entry point: ``soundscape-metrics run``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import SoundscapeError
from .pipeline import EXIT_FATAL, PipelineConfig, load_config, merge_config, run

log = logging.getLogger("soundscape_metrics")


def _tol_range(text):
    try:
        low, high = text.split(":")
        return float(low), (float(high) if high.strip() else None)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from None


def _workers(text):
    if text == "max":
        return os.cpu_count() or 1
    return int(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="soundscape-metrics",
        description="Welch PSD, third-octave levels and SPL from calibrated hydrophone WAV files.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="process every file listed in the metadata CSV")
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--metadata", dest="metadata_path", help="metadata CSV (filename,start_date)")
    r.add_argument("--audio-dir", dest="audio_dir")
    r.add_argument("--out", dest="output_path")
    r.add_argument("--workers", dest="worker_count", type=_workers,
                   help="worker processes, or 'max'")
    r.add_argument("--format", dest="output_format", choices=("ndjson", "csv"))
    r.add_argument("--tol", type=_tol_range, metavar="LOW:HIGH",
                   help="enable third-octave levels over [LOW, HIGH] Hz (HIGH may be empty)")
    r.add_argument("--sensitivity", dest="sensitivity_db", type=float,
                   help="hydrophone sensitivity S, dB re 1 V/uPa")
    r.add_argument("--segment-duration", dest="segment_duration", type=float, help="seconds")
    r.add_argument("--window-size", dest="window_size", type=int, help="samples")
    r.add_argument("--overlap", dest="window_overlap", type=int, help="samples")
    r.add_argument("--nfft", type=int)
    r.add_argument("--window", dest="window_kind", choices=("hamming_periodic", "rectangular"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        base = load_config(args.config) if args.config else PipelineConfig()
        overrides = {k: getattr(args, k) for k in (
            "metadata_path", "audio_dir", "output_path", "worker_count", "output_format",
            "sensitivity_db", "segment_duration", "window_size", "window_overlap", "nfft",
            "window_kind")}
        if args.tol is not None:
            overrides.update(tol_enabled=True, tol_low_freq=args.tol[0], tol_high_freq=args.tol[1])
        config = merge_config(base, **overrides)
        summary = run(config)
    except (SoundscapeError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_FATAL

    print(f"files in csv: {summary.files_in_csv}, processed: {summary.files_processed}, "
          f"skipped: {summary.files_skipped}, segments: {summary.segments_emitted}",
          file=sys.stderr)
    for name, reason in summary.skipped:
        print(f"  skipped {name}: {reason}", file=sys.stderr)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
