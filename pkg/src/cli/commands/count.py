import argparse
import logging
import math
from typing import List

from ...core.config import CountConfig
from ...core.exceptions import ConfigMismatch
from ...core.models import CountMode, CountReport, DomainSpec, ImagQuadRing, LatticeConfig, LatticeKind, OutputFormat
from ...services.counting import LatticeCounter
from ...services.reports import count_frame, count_report_record, emit_csv, emit_json
from ..common import add_run_options, run_config
from ..parsing import parse_phi, parse_psi

logger = logging.getLogger(__name__)

COMMAND = "count"

DEFAULT_PSI = {
    LatticeKind.SL2Z: "-1/2:1/2",
    LatticeKind.SL2OD: "-1/2:1/2,-1/2:1/2",
}


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="lattice points in Iwasawa boxes or on a horosphere")
    parser.add_argument("--lattice", choices=[k.value for k in LatticeKind])
    parser.add_argument("--mode", choices=[m.value for m in CountMode])
    parser.add_argument("--d", type=int)
    parser.add_argument("--psi", help="lo:hi per N-coordinate, comma separated")
    parser.add_argument("--phi", help="full, arc:lo:hi or cap:c1,c2,c3,c4:radius")
    parser.add_argument("--T", type=float)
    parser.add_argument("--S", type=float)
    parser.add_argument("--y", type=float, help="horosphere height for --mode horosphere")
    parser.add_argument("--sweep", help="comma separated T values, one report each")
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--covolume", type=float)
    parser.add_argument("--error-constant", dest="error_constant", type=float)
    add_run_options(parser)
    parser.set_defaults(handler=run)


def lattice_config(config: CountConfig) -> LatticeConfig:
    if config.lattice == LatticeKind.SL2Z:
        return LatticeConfig.sl2z(
            covolume=config.covolume or math.pi ** 2 / 3,
            kappa=config.kappa or 7 / 8,
            error_constant=config.error_constant,
        )
    if config.lattice == LatticeKind.SL2OD:
        if config.d is None:
            raise ConfigMismatch("--lattice sl2od needs --d")
        return LatticeConfig.sl2od(
            config.d, kappa=config.kappa, covolume=config.covolume, error_constant=config.error_constant
        )
    raise ConfigMismatch(f"counting is not available for {config.lattice.value}")


def count_reports(config: CountConfig) -> List[CountReport]:
    lattice = lattice_config(config)
    T_values = config.sweep or ([config.T] if config.T is not None else [])
    if not T_values:
        raise ConfigMismatch("count needs --T or --sweep")

    with LatticeCounter(lattice, config.workers) as counter:
        if config.mode == CountMode.HOROSPHERE:
            return [counter.horosphere_lift_count(T, config.y) for T in T_values]

        psi = parse_psi(config.psi or DEFAULT_PSI[config.lattice])
        phi = parse_phi(config.phi)
        domains = [DomainSpec(psi=psi, phi=phi, T=T, S=config.S) for T in T_values]
        ring = ImagQuadRing(d=config.d) if config.lattice == LatticeKind.SL2OD else None
        return counter.sweep(domains, ring)


def run(args: argparse.Namespace) -> int:
    config = run_config(CountConfig, args)
    reports = count_reports(config)

    if config.format == OutputFormat.CSV:
        emit_csv(count_frame(reports), COMMAND, None, config.out)
    else:
        records = [count_report_record(r) for r in reports]
        emit_json(COMMAND, None, records[0] if config.sweep is None else records, config.out)
    return 0
