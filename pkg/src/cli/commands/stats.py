import argparse
import logging
from typing import Any, Dict, List

import pandas as pd

from ...core.config import StatsConfig
from ...core.exceptions import ConfigMismatch, EmptySample, ParseError
from ...core.models import KRegion, OutputFormat, SolutionSign
from ...services.equidistribution import (
    angular_discrepancy,
    discrepancy_report,
    parse_shells,
    rate_fit,
    shell_samples,
    target_cdf,
)
from ...services.reports import emit_csv, emit_json, read_csv_chunks
from ..common import add_run_options, flag, run_config
from ..parsing import parse_phi

logger = logging.getLogger(__name__)

COMMAND = "stats"


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="per-shell discrepancies of a column from an earlier scan")
    parser.add_argument("--in", dest="input", help="CSV written by gcd-scan or lorentz")
    parser.add_argument("--statistic", choices=["ks", "star", "angular"])
    parser.add_argument("--column", help="value column (ratio, angle_v, cap_angle, reduced_v_1, ...)")
    parser.add_argument("--target", help="uniform:lo:hi, uniform01half, nu:d, arc:lo:hi, cap or full")
    parser.add_argument("--shells", help="geometric:R0, edges:e0,e1,... or linear:lo:hi:count")
    parser.add_argument("--shell-column", dest="shell_column")
    parser.add_argument("--sign", choices=[s.value for s in SolutionSign])
    flag(parser, "--fit", "fit log(statistic) against log(shell radius)")
    add_run_options(parser)
    parser.set_defaults(handler=run)


def _arc_target(target: str) -> KRegion:
    try:
        return parse_phi(target)
    except ParseError as e:
        raise ConfigMismatch(f"angular statistics take full or arc:lo:hi targets, got {target!r}") from e


def shell_rows(config: StatsConfig) -> List[Dict[str, Any]]:
    frames = list(read_csv_chunks(config.input))
    for column in (config.column, config.shell_column):
        if frames and column not in frames[0].columns:
            raise ConfigMismatch(f"column {column!r} is not in {config.input}")
    r_max = max((float(f[config.shell_column].max()) for f in frames if len(f)), default=0.0)
    shells = parse_shells(config.shells, r_max)
    sign = SolutionSign(config.sign) if config.sign else None
    samples = shell_samples(frames, config.column, config.shell_column, shells, sign)

    if config.statistic == "angular":
        arc = _arc_target(config.target)
    else:
        _, cdf = target_cdf(config.target)

    rows = []
    for sample in samples:
        try:
            if config.statistic == "angular":
                rows.append({
                    "shell_lo": sample.shell[0], "shell_hi": sample.shell[1], "count": sample.count,
                    "star_disc": angular_discrepancy(sample, arc), "target": config.target,
                })
                continue
            report = discrepancy_report(sample, cdf, config.target)
        except EmptySample:
            logger.warning(f"Skipping empty shell {sample.shell}")
            continue
        row = {"shell_lo": sample.shell[0], "shell_hi": sample.shell[1], "count": report.count}
        row["ks"] = report.ks
        row["star_disc"] = report.star_disc
        row["target"] = report.target
        rows.append(row)
    return rows


def run(args: argparse.Namespace) -> int:
    config = run_config(StatsConfig, args)
    rows = shell_rows(config)
    metric = "ks" if config.statistic == "ks" else "star_disc"
    result: Dict[str, Any] = {"statistic": config.statistic, "column": config.column, "shells": rows}

    if config.fit:
        fit = rate_fit([(row["shell_hi"], row[metric]) for row in rows])
        logger.info(f"rate fit: slope={fit.slope:.4g} r2={fit.r2:.4g}")
        result["fit"] = fit

    if config.format == OutputFormat.CSV:
        emit_csv(pd.DataFrame(rows), COMMAND, None, config.out)
    else:
        emit_json(COMMAND, None, result, config.out)
    return 0
