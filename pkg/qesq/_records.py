"""Persisted result records: schema checks and the JSON-lines / CSV codecs."""

import csv
import dataclasses
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any, Final, Self, TextIO, final

from ._types import OutputFormat, Verdict
from .exceptions import InvalidRecordError
from .model import AnsatzParams, OscillatorSpec, QesSolution, potential_coefficients

__all__ = (
    "RECORD_FIELDS",
    "VERIFY_FIELDS",
    "ResultRecord",
    "format_rows",
    "read_records",
)

# also the CSV column order
RECORD_FIELDS: Final = (
    "dim",
    "ell",
    "degree",
    "alpha",
    "beta",
    "energy",
    "lambda1",
    "lambda2",
    "lambda4",
    "coefficients",
    "physical",
    "residual",
    "oracle_verdict",
    "branch_id",
)
VERIFY_FIELDS: Final = ("ode_residual", "norm_integral", "matched_index", "match_error")

_LAMBDA_RTOL: Final = 1e-12
_COEFF_SEP: Final = ";"


@final
@dataclasses.dataclass(frozen=True, slots=True)
class ResultRecord:
    dim: int
    ell: int
    degree: int
    alpha: float
    beta: float
    energy: float
    lambda1: float
    lambda2: float
    lambda4: float
    coefficients: tuple[float, ...]
    physical: bool
    residual: float
    oracle_verdict: str
    branch_id: int

    def __post_init__(self, /) -> None:
        if self.dim < 1 or self.ell < 0 or self.degree < 0 or self.branch_id < 0:
            raise InvalidRecordError("dim, ell, degree and branch_id out of range")
        if len(self.coefficients) != self.degree + 1:
            raise InvalidRecordError(
                f"expected {self.degree + 1} coefficients, "
                f"got {len(self.coefficients)}",
            )
        if self.oracle_verdict not in set(Verdict):
            raise InvalidRecordError(f"unknown oracle verdict {self.oracle_verdict!r}")
        if not self.residual >= 0:
            raise InvalidRecordError("residual must be non-negative")

        values = (self.alpha, self.beta, self.energy, *self.coefficients)
        if not all(math.isfinite(x) for x in values):
            raise InvalidRecordError("non-finite alpha, beta, energy or coefficient")

        expect = potential_coefficients(
            self.alpha,
            self.beta,
            self.dim,
            self.ell,
            self.degree,
        )
        actual = (self.lambda1, self.lambda2, self.lambda4)
        if not all(
            math.isclose(a, e, rel_tol=_LAMBDA_RTOL)
            for a, e in zip(actual, expect, strict=True)
        ):
            raise InvalidRecordError(
                f"lambda fields {actual} inconsistent with alpha and beta, "
                f"expected {expect}",
            )

    @classmethod
    def from_solution(
        cls,
        spec: tuple[int, int, int],
        alpha: float,
        solution: QesSolution,
        /,
        branch_id: int,
        verdict: Verdict = Verdict.UNVERIFIED,
    ) -> Self:
        dim, ell, degree = spec
        lambdas = potential_coefficients(alpha, solution.beta, dim, ell, degree)
        return cls(
            dim,
            ell,
            degree,
            alpha,
            solution.beta,
            solution.energy,
            *lambdas,
            solution.coeffs,
            solution.physical,
            solution.residual,
            str(verdict),
            branch_id,
        )

    @classmethod
    def from_mapping(cls, row: Mapping[str, Any], /) -> Self:
        """Parse and validate a decoded JSON object or CSV row."""
        if missing := [name for name in RECORD_FIELDS if name not in row]:
            raise InvalidRecordError(f"missing field(s): {', '.join(missing)}")

        try:
            coeffs = row["coefficients"]
            if isinstance(coeffs, str):
                coeffs = coeffs.split(_COEFF_SEP) if coeffs else []
            return cls(
                dim=int(row["dim"]),
                ell=int(row["ell"]),
                degree=int(row["degree"]),
                alpha=float(row["alpha"]),
                beta=float(row["beta"]),
                energy=float(row["energy"]),
                lambda1=float(row["lambda1"]),
                lambda2=float(row["lambda2"]),
                lambda4=float(row["lambda4"]),
                coefficients=tuple(float(c) for c in coeffs),
                physical=_parse_bool(row["physical"]),
                residual=float(row["residual"]),
                oracle_verdict=str(row["oracle_verdict"]),
                branch_id=int(row["branch_id"]),
            )
        except InvalidRecordError:
            raise
        except (TypeError, ValueError) as e:
            raise InvalidRecordError(f"malformed record: {e}") from e

    @property
    def spec(self, /) -> OscillatorSpec:
        return OscillatorSpec(
            self.dim,
            self.ell,
            self.degree,
            self.lambda1,
            self.lambda2,
            self.lambda4,
        )

    @property
    def params(self, /) -> AnsatzParams:
        return AnsatzParams(self.alpha, self.beta)

    @property
    def solution(self, /) -> QesSolution:
        return QesSolution(
            self.energy,
            self.coefficients,
            self.beta,
            self.physical,
            self.residual,
        )

    def to_dict(self, /) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["coefficients"] = list(self.coefficients)
        return out

    def with_verdict(self, verdict: Verdict, /) -> Self:
        return dataclasses.replace(self, oracle_verdict=str(verdict))


def _parse_bool(value: object, /) -> bool:
    if isinstance(value, bool):
        return value
    match str(value).strip().lower():
        case "true" | "1":
            return True
        case "false" | "0":
            return False
        case _:
            raise InvalidRecordError(f"not a boolean: {value!r}")


def _csv_cell(value: object, /) -> str:
    match value:
        case None:
            return ""
        case bool():
            return str(value).lower()
        case float():
            return repr(value)
        case list() | tuple():
            return _COEFF_SEP.join(repr(float(c)) for c in value)
        case _:
            return str(value)


def format_rows(
    rows: Iterable[Mapping[str, Any]],
    /,
    fmt: OutputFormat,
    columns: Sequence[str] = RECORD_FIELDS,
) -> str:
    """
    Serialize to JSON lines (sorted keys) or CSV with a header in `columns` order.

    >>> print(format_rows([{"b": 1.5, "a": [1.0, -1.0]}], OutputFormat.JSON), end="")
    {"a": [1.0, -1.0], "b": 1.5}
    """
    if fmt is OutputFormat.JSON:
        return "".join(json.dumps(dict(row), sort_keys=True) + "\n" for row in rows)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(name)) for name in columns])
    return buffer.getvalue()


def _read_rows(stream: TextIO, /, *, is_csv: bool) -> list[dict[str, Any]]:
    if is_csv:
        return list(csv.DictReader(stream))

    rows: list[dict[str, Any]] = []
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise InvalidRecordError(f"line {lineno}: invalid JSON: {e.msg}") from e
        if not isinstance(row, dict):
            raise InvalidRecordError(f"line {lineno}: expected a JSON object")
        rows.append(row)
    return rows


def read_records(path: Path, /) -> list[ResultRecord]:
    """JSON lines, or CSV if the file name ends in `.csv`."""
    try:
        with path.open(encoding="utf-8", newline="") as stream:
            rows = _read_rows(stream, is_csv=path.suffix.lower() == ".csv")
    except OSError as e:
        raise InvalidRecordError(f"cannot read {str(path)!r}: {e}") from e

    return [ResultRecord.from_mapping(row) for row in rows]
