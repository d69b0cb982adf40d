import argparse
import logging

import numpy as np
import pandas as pd

from ...core.config import DecomposeConfig
from ...core.exceptions import ParseError
from ...core.models import GroupFamily, OutputFormat
from ...services.iwasawa import decompose, make_element, reconstruction_residual
from ...services.reports import emit_csv, emit_json
from ..common import add_run_options, run_config
from ..parsing import group_spec, parse_matrix

logger = logging.getLogger(__name__)

COMMAND = "decompose"


def register(subparsers) -> None:
    parser = subparsers.add_parser(COMMAND, help="Iwasawa coordinates of one group element")
    parser.add_argument("matrix", help="row-major entries, whitespace or comma separated, complex as a+bi")
    parser.add_argument("--group", choices=[f.value for f in GroupFamily])
    parser.add_argument("--n", type=int, help="n for so1n")
    add_run_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(DecomposeConfig, args)
    spec = group_spec(config.group, config.n)
    entries = parse_matrix(config.matrix, spec.matrix_size)
    if spec.family != GroupFamily.SL2C:
        if np.any(entries.imag != 0):
            raise ParseError(f"{spec.family.value} takes real entries")
        entries = entries.real

    g = make_element(spec, entries)
    coords = decompose(g)
    residual = reconstruction_residual(g, coords)
    logger.info(f"{spec.family.value}: t={coords.t:.6g} residual={residual:.3e}")

    result = {
        "group": spec.family.value,
        "v": list(coords.v),
        "z": list(coords.z),
        "t": coords.t,
        "k": coords.k.angle if coords.k.angle is not None else coords.k.matrix,
        "residual": residual,
    }
    if config.format == OutputFormat.JSON:
        emit_json(COMMAND, None, result, config.out)
        return 0

    row = {f"v_{i}": x for i, x in enumerate(coords.v, start=1)}
    row["t"] = coords.t
    if coords.k.angle is not None:
        row["theta"] = coords.k.angle
    else:
        for (i, j), x in np.ndenumerate(coords.k.matrix):
            row[f"k_{i}{j}"] = x if np.isrealobj(coords.k.matrix) else str(x)
    row["residual"] = residual
    emit_csv(pd.DataFrame([row]), COMMAND, None, config.out)
    return 0
