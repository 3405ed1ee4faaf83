"""Command-line entry point: ``giv-lab <subcommand> [options]``.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
3 collapse refused (the report is still written).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import GivError, InvalidConfig
from .report import emit_plot_data, row_checks, run_experiment, to_csv, to_json

log = logging.getLogger("givlab")

SUBCOMMANDS = {
    "arrow": "probability_table",
    "defect": "defect_scan",
    "interference": "interference",
    "collapse": "collapse_report",
    "sample": "sample",
    "spin-half": "spin_half",
    "isotropy": "isotropy_scan",
}
EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_COLLAPSE = 0, 1, 2, 3
SEED_ENV = "GIV_LAB_SEED"


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="giv-lab", description="Incompatible-variables numerical lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiment in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment} experiment")
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--seed", type=_u64, help=f"RNG seed (falls back to ${SEED_ENV})")
        p.add_argument("--out", type=Path, help="report path; stdout when omitted")
        p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
        p.add_argument("--grid", type=int, help="number of grid points")
        p.add_argument("--degrees", action="store_true", help="read bare numeric angles as degrees")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve_seed(flag: int | None, configured: int | None) -> int:
    if flag is not None:
        return flag
    if configured is not None:
        return configured
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _u64(env)
        except (ValueError, argparse.ArgumentTypeError):
            raise InvalidConfig(f"${SEED_ENV}={env!r} is not an unsigned 64-bit integer") from None
    return 0


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    experiment = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config, experiment, degrees=args.degrees)
        if args.grid is not None:
            if args.grid < 2:
                raise InvalidConfig("--grid must be at least 2")
            cfg.grid = args.grid
        seed = _resolve_seed(args.seed, cfg.seed)
        fmt = args.format or cfg.output_format
        out = args.out or (Path(cfg.output_path) if cfg.output_path else None)
        report = run_experiment(cfg, seed)
        row_checks(report)
    except GivError as exc:
        print(f"giv-lab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    body = to_json(report) if fmt == "json" else to_csv(report)
    code = EXIT_COLLAPSE if report.status != "ok" else EXIT_OK
    if out is None:
        sys.stdout.write(body)
        return code
    sidecar = dict(report.meta)
    sidecar["format"] = fmt
    sidecar["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        _write(out, body)
        _write(out.with_name(out.name + ".plot.csv"), emit_plot_data(report))
        _write(out.with_name(out.name + ".meta.json"), json.dumps(sidecar, indent=2) + "\n")
    except OSError as exc:
        print(f"giv-lab: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote %s (%d rows, status %s)", out, len(report.rows), report.status)
    if code == EXIT_COLLAPSE:
        print(f"giv-lab: collapse refused: {report.meta.get('failure')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
