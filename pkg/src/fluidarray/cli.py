"""Command-line entry point: ``fluidarray <subcommand> [--config ...]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments
from .errors import InfeasiblePlacementError
from .experiments import ConfigError
from .geometry import PortLayout

log = logging.getLogger("fluidarray")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

SUBCOMMANDS = {
    "mc-spacing": "minimum-distance Monte Carlo vs the Rayleigh law",
    "crb-sweep": "CRB vs SNR for greedy/uniform/random layouts per (W, M)",
    "tradeoff": "det, CRB and interior count over the beta0 sweep",
    "place": "greedy layout at beta0 with baseline comparison",
    "beam": "beam map and peak sidelobe level of a layout",
    "place-and-beam": "layouts and beam maps for each beta0 in beta0_list",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluidarray", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config; absent fields use defaults")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed (u64)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads, 0 = auto; never changes output bytes")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "beam":
            p.add_argument("--layout", type=Path,
                           help="layout JSON to evaluate (default: greedy at config beta0)")
    return parser


def run(args) -> object:
    cfg = experiments.load_config(args.config, args.seed)
    threads = args.threads
    if threads < 0:
        raise ConfigError("--threads must be >= 0")
    out = args.out
    if args.command == "mc-spacing":
        return experiments.run_mc_spacing(cfg, out, threads)
    if args.command == "crb-sweep":
        return experiments.run_crb_sweep(cfg, out, threads)
    if args.command == "tradeoff":
        return experiments.run_tradeoff(cfg, out, threads)
    if args.command == "place":
        return experiments.run_place(cfg, out, threads)
    if args.command == "beam":
        layout = None
        if args.layout is not None:
            try:
                layout = PortLayout.from_json(args.layout.read_text())
            except (ValueError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{args.layout}: {exc}") from exc
        return experiments.run_beam(cfg, out, layout, threads)
    if args.command == "place-and-beam":
        return experiments.run_place_and_beam(cfg, out, threads)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        result = run(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except InfeasiblePlacementError as exc:
        log.error("infeasible placement: %s", exc)
        return EXIT_INFEASIBLE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    log.info("%s finished, outputs in %s", args.command, args.out)
    if args.verbose:
        print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
