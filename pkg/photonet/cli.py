"""
Command-line entry point.

Example:
  python -m photonet check tests/fixtures/mzi.net
  python -m photonet simulate tests/fixtures/mzi.net --format json --amplitudes --threads 4 --output mzi.json

Exit codes: 0 ok, 1 I/O, 2 parse, 3 validate, 4 numeric.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from photonet import __version__
from photonet.errors import (
    ComponentError,
    NetlistSyntaxError,
    NetlistValidationError,
    PassivityError,
    PhotonetError,
)
from photonet.netlist_io import CircuitDescription, parse_netlist, validate
from photonet.sweep_service import run_sweep, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_VALIDATE = 3
EXIT_NUMERIC = 4

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (NetlistSyntaxError, ComponentError)):
        return EXIT_PARSE
    if isinstance(exc, (NetlistValidationError, PassivityError)):
        return EXIT_VALIDATE
    # singular systems, grid and dimension problems
    return EXIT_NUMERIC


def _configure_logging(verbose: bool, quiet: bool) -> None:
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, os.environ.get("PHOTONET_LOG_LEVEL", "INFO").upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt="%H:%M:%S", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _load(path: str) -> CircuitDescription:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise NetlistSyntaxError(f"netlist is not valid UTF-8 (byte {exc.start})") from exc
    return parse_netlist(text)


def cmd_check(args: argparse.Namespace) -> int:
    circuit = _load(args.netlist)
    report = validate(circuit)
    print(
        f"m={report.port_map.total_ports_m}, {len(circuit.components)} components, "
        f"{len(circuit.connections)} connections"
    )
    for w in report.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    circuit = _load(args.netlist)
    report = validate(circuit)
    result = run_sweep(
        circuit,
        amplitudes=args.amplitudes,
        impulse=args.impulse,
        threads=args.threads,
        linewidth=args.linewidth,
        report=report,
    )
    if args.linewidth is not None and args.format != "json":
        logger.warning("broadband photocurrent is reported in JSON output only")
    writer = write_json if args.format == "json" else write_csv
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            writer(result, fh)
        logger.info("wrote %s", args.output)
    else:
        writer(result, sys.stdout)
    return EXIT_OK


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PHOTONET_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photonet", description="Scattering-matrix simulator for optical networks")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = ap.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = ap.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse and validate a netlist")
    check.add_argument("netlist")
    check.set_defaults(func=cmd_check)

    sim = sub.add_parser("simulate", help="run the netlist's sweep")
    sim.add_argument("netlist")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--amplitudes", action="store_true", help="add complex x/y amplitude columns")
    sim.add_argument("--impulse", action="store_true", help="add |h(tau)| per detector (frequency sweeps)")
    sim.add_argument("--threads", type=int, default=_default_threads(), metavar="N")
    sim.add_argument("--output", default=None, metavar="PATH", help="default: stdout")
    sim.add_argument(
        "--linewidth", type=float, default=None, metavar="SIGMA",
        help="Gaussian source rms width (rad/s); adds broadband photocurrent to JSON",
    )
    sim.set_defaults(func=cmd_simulate)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except (OSError, PhotonetError) as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
