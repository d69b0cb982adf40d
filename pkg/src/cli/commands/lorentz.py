import argparse
import logging

from ...core.config import LorentzConfig
from ...core.models import OutputFormat
from ...services.lorentz import lorentz_frame
from ...services.reports import emit_csv, emit_json
from ..common import add_run_options, flag, run_config

logger = logging.getLogger(__name__)

COMMAND = "lorentz"


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="integer points on the upper sheet of x0^2 - |x|^2 = 1")
    parser.add_argument("--n", type=int, help="2, 3 or 4")
    parser.add_argument("--x0-max", dest="x0_max", type=int)
    flag(parser, "--shortest-only", "keep only solutions whose v already lies in the L1 unit ball")
    add_run_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(LorentzConfig, args)
    frame = lorentz_frame(config.n, config.x0_max, config.shortest_only)
    logger.info(f"lorentz n={config.n}: {len(frame)} rows")
    if config.format == OutputFormat.JSON:
        emit_json(COMMAND, None, frame.to_dict(orient="records"), config.out)
    else:
        emit_csv(frame, COMMAND, None, config.out)
    return 0
