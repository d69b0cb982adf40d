import argparse
import re
from pathlib import Path
from typing import Any, Dict, List, Sequence, Type

from ..core.config import ConfigT, load_run_config
from ..core.models import OutputFormat

# argparse bookkeeping that never reaches a RunConfig
_CLI_ONLY = {"command", "config", "handler", "verbose"}

# options whose values may begin with a minus sign: intervals, vectors and grids
SIGNED_VALUE_OPTIONS = frozenset({"--psi", "--phi", "--t-grid", "--v", "--sweep"})
_SIGNED_VALUE = re.compile(r"^-[\d.]")


def attach_signed_values(argv: Sequence[str]) -> List[str]:
    """Rewrite `--psi -0.5:0.5` as `--psi=-0.5:0.5` so argparse keeps the value."""
    tokens = list(argv)
    joined: List[str] = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if (
            token in SIGNED_VALUE_OPTIONS
            and i + 1 < len(tokens)
            and _SIGNED_VALUE.match(tokens[i + 1])
        ):
            joined.append(f"{token}={tokens[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key=value file; flags override its values")
    parser.add_argument("--out", type=Path, help="output file (stdout when omitted)")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--seed", type=int, help="64-bit seed for every random stream")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const=OutputFormat.JSON.value)
    fmt.add_argument("--csv", dest="format", action="store_const", const=OutputFormat.CSV.value)


def flag(parser: argparse.ArgumentParser, name: str, help: str) -> None:
    """Boolean flag that stays None when absent so config-file values survive."""
    parser.add_argument(name, action="store_true", default=None, help=help)


def run_config(config_cls: Type[ConfigT], args: argparse.Namespace) -> ConfigT:
    overrides: Dict[str, Any] = {
        key: value for key, value in vars(args).items()
        if key not in _CLI_ONLY and value is not None
    }
    return load_run_config(config_cls, args.config, overrides)
