"""
Numeric tolerances and the flat `key = value` run-configuration file.

A config file mirrors the long CLI flag names, e.g.

```
# N = 3 ground sector
dim = 3
ell = 0
degree = 2
alpha = -1
tol.newton = 1e-13
```

Values given as flags always take precedence over values read from a file.
"""

import dataclasses
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Final, Self, final

from .exceptions import InvalidParameterError

__all__ = (
    "DEFAULT_TOLERANCES",
    "Tolerances",
    "parse_tolerance_overrides",
    "read_config_file",
)

_TOL_PREFIX: Final = "tol."


@final
@dataclasses.dataclass(frozen=True, slots=True)
class Tolerances:
    # relative imaginary part below which an energy counts as real
    imag: float = 1e-9
    # `|F b|` relative to `|F| |b|` for a returned solution
    validation: float = 1e-10
    # Newton residual relative to the magnitude of its terms
    newton: float = 1e-12
    # joint relative distance for merging `(E, beta)` roots
    cluster: float = 1e-6
    # max Niven residual for a converged configuration
    niven: float = 1e-10
    # minimum pairwise distance of Niven zeros, relative to their scale
    separation: float = 1e-8
    # per-zero tolerance for multiset deduplication
    dedup: float = 1e-6
    # scaled ODE residual of a confirmed solution
    ode: float = 1e-8
    # absolute finite-difference eigenvalue match
    fd: float = 1e-3

    @classmethod
    def names(cls, /) -> tuple[str, ...]:
        return tuple(field.name for field in dataclasses.fields(cls))

    def with_overrides(self, overrides: Mapping[str, float], /) -> Self:
        if unknown := sorted(set(overrides) - set(self.names())):
            raise InvalidParameterError(f"unknown tolerance(s): {', '.join(unknown)}")
        for name, value in overrides.items():
            if not value > 0:
                raise InvalidParameterError(f"tolerance {name!r} must be positive")
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES: Final = Tolerances()


def parse_tolerance_overrides(items: Iterable[str], /) -> dict[str, float]:
    """
    Parse repeated `name=value` pairs.

    >>> parse_tolerance_overrides(["ode=1e-6", "fd = 0.01"])
    {'ode': 1e-06, 'fd': 0.01}
    """
    overrides: dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InvalidParameterError(f"expected 'name=value', got {item!r}")
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise InvalidParameterError(
                f"invalid tolerance value in {item!r}",
            ) from None
    return overrides


def read_config_file(path: Path, /) -> tuple[dict[str, str], dict[str, float]]:
    """
    Read a flat `key = value` file.

    Returns the plain options (keyed by long flag name, without leading dashes)
    and the `tol.<name>` overrides separately.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidParameterError(
            f"cannot read config file {str(path)!r}: {e}",
        ) from e

    options: dict[str, str] = {}
    tolerances: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        key, sep, value = line.partition("=")
        key, value = key.strip().removeprefix("--"), value.strip()
        if not sep or not key:
            raise InvalidParameterError(f"{path}:{lineno}: expected 'key = value'")

        if key.startswith(_TOL_PREFIX):
            tolerances |= parse_tolerance_overrides([
                f"{key.removeprefix(_TOL_PREFIX)}={value}",
            ])
        else:
            options[key] = value

    return options, tolerances
