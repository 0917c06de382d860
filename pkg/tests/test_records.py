import dataclasses
from pathlib import Path

import pytest
from qesq._records import RECORD_FIELDS, ResultRecord, format_rows, read_records
from qesq._types import OutputFormat, Verdict
from qesq.exceptions import InvalidRecordError
from qesq.model import QesSolution

_SOLUTION: QesSolution = QesSolution(1.5, (1.0, -1.0), 2.0, physical=True)


def _record() -> ResultRecord:
    return ResultRecord.from_solution((3, 0, 1), -1.0, _SOLUTION, branch_id=0)


def test_from_solution():
    record = _record()
    assert (record.lambda1, record.lambda2, record.lambda4) == (-6.0, -2.0, 2.0)
    assert record.oracle_verdict == "unverified"
    assert record.spec.quasi_exact
    assert record.solution == _SOLUTION


def test_to_dict_order():
    assert tuple(_record().to_dict()) == RECORD_FIELDS


def test_with_verdict():
    record = _record().with_verdict(Verdict.CONFIRMED)
    assert record.oracle_verdict == "confirmed"


def test_tampered_lambda():
    with pytest.raises(InvalidRecordError, match="lambda"):
        dataclasses.replace(_record(), lambda1=-5.0)


@pytest.mark.parametrize(
    "changes",
    [
        {"coefficients": (1.0,)},
        {"oracle_verdict": "maybe"},
        {"residual": -1.0},
        {"dim": 0},
    ],
)
def test_invalid_record(changes: dict[str, object]):
    with pytest.raises(InvalidRecordError):
        dataclasses.replace(_record(), **changes)  # type: ignore[arg-type]


def test_from_mapping_missing_field():
    row = _record().to_dict()
    del row["energy"]
    with pytest.raises(InvalidRecordError, match="energy"):
        ResultRecord.from_mapping(row)


def test_from_mapping_malformed():
    row = _record().to_dict() | {"physical": "perhaps"}
    with pytest.raises(InvalidRecordError):
        ResultRecord.from_mapping(row)


@pytest.mark.parametrize("fmt", list(OutputFormat))
def test_read_records(tmp_path: Path, fmt: OutputFormat):
    record = _record()
    path = tmp_path / f"records.{'jsonl' if fmt is OutputFormat.JSON else 'csv'}"
    path.write_text(format_rows([record.to_dict()], fmt), encoding="utf-8")

    assert read_records(path) == [record]


def test_csv_header():
    header, row = format_rows([_record().to_dict()], OutputFormat.CSV).splitlines()
    assert header == ",".join(RECORD_FIELDS)
    assert row == "3,0,1,-1.0,2.0,1.5,-6.0,-2.0,2.0,1.0;-1.0,true,0.0,unverified,0"


def test_read_records_invalid_json(tmp_path: Path):
    path = tmp_path / "records.jsonl"
    path.write_text("{not json}\n", encoding="utf-8")

    with pytest.raises(InvalidRecordError, match="line 1"):
        read_records(path)
