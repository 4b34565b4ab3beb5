"""
Command-line front end

PURPOSE: `run`, `sweep` and `check` subcommands over the experiment harness

KEY COMPONENTS:
- build_parser: argparse definition of the three subcommands
- main: dispatch, exit status 0 on success and 1 on failure, errors printed to
  stderr as an ErrorResponse JSON document

    python app.py run --config configs/toy.cfg --scheme proposed --out out/run.csv
    python app.py sweep --config configs/default.cfg --param power --values 1,3,10,30 \\
        --trials 50 --schemes proposed,fpa --out out/power.csv
    python app.py check --config configs/default.cfg
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .errors import ConfigError, SixdmaError
from .harness import check_config, load_config, logger, run_single, run_sweep
from .models import ErrorResponse, SchemeKind, SweepParameter, SweepSpec

PARAMETERS = {
    "power": SweepParameter.TRANSMIT_POWER,
    "users": SweepParameter.MEAN_USERS,
    "eves": SweepParameter.MEAN_EVES,
}


def _schemes(text: str) -> List[SchemeKind]:
    try:
        return [SchemeKind(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _values(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sixdma", description="6DMA secure beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="optimise one scenario under one scheme")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--scheme", type=SchemeKind, choices=list(SchemeKind), default=None)
    run.add_argument("--out", type=Path, default=None, help="CSV record; the trace goes next to it")

    sweep = sub.add_parser("sweep", help="paired Monte-Carlo sweep across schemes")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--param", required=True, choices=sorted(PARAMETERS))
    sweep.add_argument("--values", required=True, type=_values)
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--schemes", type=_schemes, default=list(SchemeKind))
    sweep.add_argument("--out", required=True, type=Path)

    check = sub.add_parser("check", help="validate a config and its initial layout")
    check.add_argument("--config", required=True, type=Path)
    return parser


def _fail(error: Exception) -> int:
    response = ErrorResponse(error=str(error), details=type(error).__name__)
    print(response.model_dump_json(), file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            record, _ = run_single(args.config, args.scheme, args.out)
            print(record.model_dump_json())
        elif args.command == "sweep":
            config = load_config(args.config)
            try:
                spec = SweepSpec(
                    parameter=PARAMETERS[args.param],
                    values=args.values,
                    trials=args.trials or config.trials,
                    schemes=args.schemes,
                    base_seed=config.seed,
                )
            except ValueError as e:
                raise ConfigError("sweep", str(e)) from e
            run_sweep(spec, config, out=args.out)
        else:
            report = check_config(args.config)
            if not report.is_feasible():
                raise ConfigError(None, "initial layout infeasible: " + "; ".join(report.violations()))
            print("ok")
    except SixdmaError as e:
        logger.error(f"{args.command} failed: {e}")
        return _fail(e)
    return 0
