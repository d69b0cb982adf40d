import json
import math
from fractions import Fraction

import pandas as pd
import pytest

from src.core.exceptions import OutputError
from src.core.models import DomainSpec, LatticeConfig, SolutionSign
from src.services.counting import count_sl2z
from src.services.reports import (
    count_frame,
    count_report_record,
    emit_csv,
    jsonable,
    read_csv_chunks,
    render_csv,
    render_json,
    write_text,
)


class TestJsonable:

    def test_fraction(self):
        assert jsonable(Fraction(-13, 34)) == {"num": -13, "den": 34}

    def test_non_finite(self):
        assert jsonable([math.inf, math.nan, 1.5]) == [None, None, 1.5]

    def test_enum_and_complex(self):
        assert jsonable(SolutionSign.NEGATIVE) == "negative"
        assert jsonable(1 + 2j) == {"re": 1.0, "im": 2.0}


class TestRendering:

    @pytest.fixture
    def report(self):
        domain = DomainSpec(psi=[(Fraction(-1, 2), Fraction(1, 2))], T=2 * math.log(10))
        return count_sl2z(domain, LatticeConfig.sl2z())

    def test_json_envelope(self, report):
        payload = json.loads(render_json("count", 7, count_report_record(report)))
        result = payload["result"]

        assert payload["schema_version"] == "1"
        assert payload["seed"] == 7
        assert result["lattice"] == "sl2z"
        assert result["psi"] == [[{"num": -1, "den": 2}, {"num": 1, "den": 2}]]
        assert result["T"] == pytest.approx(2 * math.log(10))
        assert result["S"] == 0.0
        assert result["phi"]["kind"] == "full"
        assert "domain" not in result

    def test_json_is_stable(self, report):
        assert render_json("count", 1, report) == render_json("count", 1, report)

    def test_csv_header_and_digits(self):
        text = render_csv(pd.DataFrame({"ratio": [0.1]}), "gcd-scan", None)
        lines = text.splitlines()

        assert lines[0].startswith("# horocount schema_version=1 command=gcd-scan")
        assert lines[1] == "ratio"
        assert lines[2] == "0.10000000000000001"

    def test_count_frame(self, report):
        frame = count_frame([report])
        assert frame.loc[0, "observed"] == report.observed
        assert frame.loc[0, "lattice"] == "sl2z"
        assert frame.loc[0, "phi"] == "full"


class TestFiles:

    def test_round_trip(self, tmp_path):
        path = tmp_path / "scan.csv"
        emit_csv(pd.DataFrame({"a": [1, 2], "ratio": [0.25, 0.5]}), "gcd-scan", None, path)
        frames = list(read_csv_chunks(path))

        assert len(frames) == 1
        assert frames[0]["ratio"].tolist() == [0.25, 0.5]

    def test_unwritable(self, tmp_path):
        with pytest.raises(OutputError):
            write_text("x", tmp_path)

    def test_missing_input(self, tmp_path):
        with pytest.raises(OutputError):
            list(read_csv_chunks(tmp_path / "missing.csv"))
