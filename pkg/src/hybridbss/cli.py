"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 runtime/model error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from .channel import condition_number, separability_index
from .config import ExperimentConfig, load_config
from .errors import ConfigError, SimulationError
from .pipeline import run_demo, run_simulate, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridbss",
        description="Hybrid MIMO/FSO blind source separation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment from a config file")
    sim.add_argument("--config", required=True, help="path to a JSON config")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument(
        "--mode", choices=["auto", "mimo", "fso"], default="auto",
        help="force a channel mode or let the controller decide",
    )

    swp = sub.add_parser("sweep", help="sweep one parameter and emit a CSV")
    swp.add_argument(
        "--param", required=True, choices=["rx_spacing_cm", "snr_db", "kappa_hi"]
    )
    swp.add_argument("--from", dest="start", type=float, required=True)
    swp.add_argument("--to", dest="stop", type=float, required=True)
    swp.add_argument("--steps", type=int, required=True)
    swp.add_argument("--config", required=True)
    swp.add_argument("--out", required=True, help="output CSV path")

    cnd = sub.add_parser("cond", help="conditioning of a 2x2 gain matrix")
    cnd.add_argument(
        "--matrix", required=True, help="comma-separated a11,a12,a21,a22"
    )

    demo = sub.add_parser("demo", help="constellation grid: three schemes x two modes")
    demo.add_argument("--out", required=True, help="output directory")
    return parser


def _parse_matrix(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"matrix: expected four comma-separated values, got {text!r}")
    try:
        a11, a12, a21, a22 = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"matrix: entries must be numbers, got {text!r}") from None
    return [[a11, a12], [a21, a22]]


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.12g}"


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    report = run_simulate(cfg, args.out, mode=args.mode)
    print(f"mode_trace {' '.join(report.mode_trace)}")
    print(f"evm_percent {_fmt(report.evm_percent)}")
    print(f"ser {_fmt(report.ser)}")
    print(f"ber {_fmt(report.ber)}")
    print(f"suppression_db {_fmt(report.suppression_db)}")
    print(f"separability_before {_fmt(report.separability_before)}")
    print(f"separability_after {_fmt(report.separability_after)}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    path = run_sweep(args.param, args.start, args.stop, args.steps, cfg, args.out)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_cond(args) -> int:
    matrix = _parse_matrix(args.matrix)
    print(f"condition_number {_fmt(condition_number(matrix))}")
    print(f"separability_index {_fmt(separability_index(matrix))}")
    return EXIT_OK


def _cmd_demo(args) -> int:
    summary = run_demo(args.out)
    print(f"{'scheme':<8}{'mode':<6}{'evm_percent':>14}{'ser':>12}")
    for row in summary:
        print(
            f"{row['scheme']:<8}{row['mode']:<6}"
            f"{row['evm_percent']:>14.3f}{row['ser']:>12.6f}"
        )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "cond": _cmd_cond,
        "demo": _cmd_demo,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
