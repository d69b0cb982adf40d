import argparse
import logging
import sys
from typing import List, Optional

from ..core.config import settings
from ..core.exceptions import HorocountError
from . import __version__
from .common import attach_signed_values
from .commands import count, decompose, gcd_scan, lorentz, perturb, stats

logger = logging.getLogger(__name__)

COMMANDS = (decompose, gcd_scan, count, lorentz, perturb, stats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horocount",
        description="Lattice-point counting in Iwasawa coordinates and the experiments around it",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"horocount {__version__} (schema {settings.schema_version})",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        filename=settings.log_file,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(attach_signed_values(sys.argv[1:] if argv is None else argv))
    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except HorocountError as e:
        logger.error(f"{args.command}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
