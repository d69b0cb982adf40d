import io
import json
import logging
import math
import sys
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.config import settings
from ..core.exceptions import OutputError
from ..core.models import CountReport, TScanResult

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = f"%.{settings.float_digits}g"
CSV_CHUNK_ROWS = 200_000


def jsonable(value: Any) -> Any:
    """Plain JSON data: rationals as {num, den}, non-finite floats as null."""
    if isinstance(value, BaseModel):
        return {name: jsonable(getattr(value, name)) for name in type(value).model_fields}
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, complex):
        return {"re": jsonable(value.real), "im": jsonable(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def envelope(command: str, seed: Optional[int], result: Any) -> Dict[str, Any]:
    return {
        "schema_version": settings.schema_version,
        "command": command,
        "seed": seed,
        "result": jsonable(result),
    }


def render_json(command: str, seed: Optional[int], result: Any) -> str:
    return json.dumps(envelope(command, seed, result), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(frame: pd.DataFrame, command: str, seed: Optional[int]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# horocount schema_version={settings.schema_version} command={command} seed={seed}\n")
    frame.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_text(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"Cannot write {out}: {e}") from e
    logger.info(f"Wrote {out}")


def emit_json(command: str, seed: Optional[int], result: Any, out: Optional[Path] = None) -> None:
    write_text(render_json(command, seed, result), out)


def emit_csv(frame: pd.DataFrame, command: str, seed: Optional[int], out: Optional[Path] = None) -> None:
    write_text(render_csv(frame, command, seed), out)


def read_csv_chunks(path: Path, chunksize: int = CSV_CHUNK_ROWS) -> Iterator[pd.DataFrame]:
    try:
        yield from pd.read_csv(path, comment="#", chunksize=chunksize)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise OutputError(f"Cannot read {path}: {e}") from e


# flat rows

def count_report_record(report: CountReport) -> Dict[str, Any]:
    """JSON form of a count report with psi, phi, T and S beside the counts."""
    record = jsonable(report)
    record.update(record.pop("domain"))
    return record


def count_report_row(report: CountReport) -> Dict[str, Any]:
    row = report.model_dump(exclude={"domain"})
    row["lattice"] = report.lattice.value
    row["T"] = report.domain.T
    row["S"] = report.domain.S
    row["phi"] = report.domain.phi.kind.value
    return row


def count_frame(reports: Sequence[CountReport]) -> pd.DataFrame:
    return pd.DataFrame([count_report_row(r) for r in reports])


def t_scan_frame(result: TScanResult) -> pd.DataFrame:
    return pd.DataFrame([e.model_dump() for e in result.estimates])
