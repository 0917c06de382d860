from pathlib import Path

import pytest
from qesq.config import (
    DEFAULT_TOLERANCES,
    Tolerances,
    parse_tolerance_overrides,
    read_config_file,
)
from qesq.exceptions import InvalidParameterError


def test_default_tolerances():
    assert DEFAULT_TOLERANCES.imag == 1e-9
    assert DEFAULT_TOLERANCES.validation == 1e-10
    assert DEFAULT_TOLERANCES.newton == 1e-12
    assert DEFAULT_TOLERANCES.cluster == 1e-6
    assert DEFAULT_TOLERANCES.ode == 1e-8
    assert DEFAULT_TOLERANCES.fd == 1e-3


def test_with_overrides():
    tolerances = DEFAULT_TOLERANCES.with_overrides({"ode": 1e-6})
    assert tolerances.ode == 1e-6
    assert tolerances.fd == DEFAULT_TOLERANCES.fd
    assert DEFAULT_TOLERANCES.ode == 1e-8


@pytest.mark.parametrize("overrides", [{"spam": 1.0}, {"ode": 0.0}, {"fd": -1e-3}])
def test_with_overrides_invalid(overrides: dict[str, float]):
    with pytest.raises(InvalidParameterError):
        Tolerances().with_overrides(overrides)


@pytest.mark.parametrize("item", ["ode", "ode=small"])
def test_parse_tolerance_overrides_invalid(item: str):
    with pytest.raises(InvalidParameterError):
        parse_tolerance_overrides([item])


def test_read_config_file(tmp_path: Path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# N = 3\n"
        "dim = 3\n"
        "--ell = 1  # trailing comment\n"
        "\n"
        "alpha=-1\n"
        "tol.newton = 1e-13\n",
        encoding="utf-8",
    )

    options, tolerances = read_config_file(path)
    assert options == {"dim": "3", "ell": "1", "alpha": "-1"}
    assert tolerances == {"newton": 1e-13}


def test_read_config_file_malformed(tmp_path: Path):
    path = tmp_path / "run.cfg"
    path.write_text("dim 3\n", encoding="utf-8")

    with pytest.raises(InvalidParameterError, match=r"run\.cfg:1"):
        read_config_file(path)


def test_read_config_file_missing(tmp_path: Path):
    with pytest.raises(InvalidParameterError, match="cannot read"):
        read_config_file(tmp_path / "missing.cfg")
