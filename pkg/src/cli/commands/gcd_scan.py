import argparse
import logging

from ...core.config import GcdScanConfig
from ...core.exceptions import ConfigMismatch
from ...core.models import ImagQuadRing, KRegionKind, OutputFormat
from ...services.gcd_lab import scan_z
from ...services.quadratic_ring import scan_od
from ...services.reports import emit_csv, emit_json
from ..common import add_run_options, run_config
from ..parsing import parse_phi

logger = logging.getLogger(__name__)

COMMAND = "gcd-scan"


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="shortest gcd solutions for primitive vectors up to a radius")
    parser.add_argument("--ring", choices=["z", "od"])
    parser.add_argument("--d", type=int, help="d for O_d, one of 1, 2, 3, 7, 11")
    parser.add_argument("--rmax", type=float)
    parser.add_argument("--phi", help="full, arc:lo:hi (z) or cap:c1,c2,c3,c4:radius (od)")
    add_run_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(GcdScanConfig, args)
    region = parse_phi(config.phi)
    full = region.kind == KRegionKind.FULL

    if config.ring == "z":
        if region.kind == KRegionKind.CAP:
            raise ConfigMismatch("integer scans take arcs, not caps")
        frame = scan_z(config.rmax, None if full else region)
    else:
        if config.d is None:
            raise ConfigMismatch("--ring od needs --d")
        if region.kind == KRegionKind.ARC:
            raise ConfigMismatch("O_d scans take caps, not arcs")
        frame = scan_od(ImagQuadRing(d=config.d), config.rmax, None if full else region)

    logger.info(f"gcd-scan ring={config.ring}: {len(frame)} rows up to r={config.rmax}")
    if config.format == OutputFormat.JSON:
        emit_json(COMMAND, None, frame.to_dict(orient="records"), config.out)
    else:
        emit_csv(frame, COMMAND, None, config.out)
    return 0
