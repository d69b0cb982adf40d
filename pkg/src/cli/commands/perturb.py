import argparse
import logging
from typing import Any, Dict

from ...core.config import PerturbConfig
from ...core.exceptions import DimensionMismatch
from ...core.models import GroupFamily, IwasawaCoords, OutputFormat
from ...services.perturbation import adjoint_containment, k_from_angle, linear_regime_limit, t_scan
from ...services.reports import emit_csv, emit_json, t_scan_frame
from ..common import add_run_options, flag, run_config
from ..parsing import group_spec

logger = logging.getLogger(__name__)

COMMAND = "perturb"


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="displacement constants of Iwasawa coordinates under small perturbations")
    parser.add_argument("--group", choices=[f.value for f in GroupFamily])
    parser.add_argument("--n", type=int, help="n for so1n")
    parser.add_argument("--v", help="N-coordinates, comma separated; shorter lists are padded with zeros")
    parser.add_argument("--phi", type=float, help="K-angle of the base point")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--t-grid", dest="t_grid", help="comma separated t values")
    parser.add_argument("--samples", type=int)
    flag(parser, "--contrast", "allow positive t")
    flag(parser, "--adjoint-check", "also check the adjoint containment bound")
    flag(parser, "--linear-scan", "also locate the largest epsilon of the linear regime")
    add_run_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(PerturbConfig, args)
    spec = group_spec(config.group, config.n)
    if len(config.v) > spec.p:
        raise DimensionMismatch(f"{spec.family.value} has {spec.p} N-coordinates, got {len(config.v)}")
    v = list(config.v) + [0.0] * (spec.p - len(config.v))

    scan = t_scan(
        spec, v, config.phi, config.epsilon, config.t_grid,
        samples=config.samples, seed=config.seed, workers=config.workers, contrast=config.contrast,
    )
    result: Dict[str, Any] = {"group": spec.family.value, "n": spec.n, "scan": scan}

    if config.adjoint_check:
        result["adjoint_containment"] = adjoint_containment(spec, seed=config.seed)
    if config.linear_scan:
        base = IwasawaCoords(v=tuple(v), t=0.0, k=k_from_angle(spec, config.phi))
        limit, estimates = linear_regime_limit(spec, base, seed=config.seed)
        result["linear_regime"] = {"epsilon_limit": limit, "estimates": estimates}

    if config.format == OutputFormat.CSV:
        emit_csv(t_scan_frame(scan), COMMAND, config.seed, config.out)
    else:
        emit_json(COMMAND, config.seed, result, config.out)
    return 0
