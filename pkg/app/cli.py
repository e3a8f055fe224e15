"""
Command-line front end

    extremal bound  --metric const --a 1 --b 1 --R 1.25
    extremal solve  --metric power:1 --a 2 --b 1 --r 5 --R 5
    extremal sweep  --metric const,power:2 --a 1 --b 0.5,1,2 --r 2 --R 1.5,2 --format csv

Documents go to stdout (or --out); logs and error JSON go to stderr.
Exit codes: 0 ok, 2 bad input, 3 infeasible instance, 4 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.config import settings
from app.core.errors import ExtremalError, Infeasible
from app.core.serialization import to_json
from app.engine import ExtremalEngine
from app.models import Command, ErrorResponse, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extremal",
        description="Extremal radial maps between annuli under a radial metric",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for command in Command:
        sub = commands.add_parser(command.value)
        # values stay strings here; RunConfig validates them (sweep takes comma lists)
        sub.add_argument("--metric", default="const", help="const | power:<lam> | table:<path>")
        sub.add_argument("--a", default="1", help="normal weight a > 0")
        sub.add_argument("--b", default="1", help="tangential weight b > 0")
        sub.add_argument("--r", default=None, help="outer radius of the source annulus")
        sub.add_argument("--R", default=None, help="outer radius of the target annulus")
        sub.add_argument("--samples", default=str(settings.SAMPLES), help="profile sample count")
        sub.add_argument("--tol", default=str(settings.REL_TOL), help="relative quadrature tolerance")
        sub.add_argument("--format", default="json", choices=["json", "csv"])
        sub.add_argument("--out", default=None, help="output path (default stdout)")
        if command == Command.ENERGY:
            sub.add_argument("--profile", required=True, help="profile CSV with header t,H,Hdot, or a solve JSON document")
        if command == Command.SWEEP:
            sub.add_argument("--workers", default=str(settings.SWEEP_WORKERS), help="parallel sweep workers")

    return parser


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, Infeasible):
        return EXIT_INFEASIBLE
    if isinstance(exc, ExtremalError) and isinstance(exc, ValueError):
        return EXIT_PARSE
    return EXIT_NUMERICAL


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info(f"wrote {path}")


def _report_error(exc: Exception) -> int:
    code = exit_code_for(exc)
    if not isinstance(exc, ExtremalError):
        logger.exception("unexpected failure")
    sys.stderr.write(to_json(ErrorResponse.from_exception(exc)))
    return code


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)

    try:
        run_config = RunConfig(
            args.command,
            metric=args.metric,
            a=args.a,
            b=args.b,
            r=args.r,
            R=args.R,
            samples=args.samples,
            tol=args.tol,
            output=args.out,
            format=args.format,
            profile=getattr(args, "profile", None),
            workers=getattr(args, "workers", 1),
        )
        engine = ExtremalEngine(settings)
        result = engine.run(run_config)
        _emit(engine.render(run_config, result), run_config.output)
    except Exception as e:
        return _report_error(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
