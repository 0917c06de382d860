# ruff: noqa: UP040
from __future__ import annotations

import contextlib
import dataclasses
import json
import logging
from collections.abc import Callable, Iterator, Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Final, TypeAlias

import typer

from ._records import (
    RECORD_FIELDS,
    VERIFY_FIELDS,
    ResultRecord,
    format_rows,
    read_records,
)
from ._types import MatrixKind, OutputFormat, Verdict
from .config import (
    DEFAULT_TOLERANCES,
    Tolerances,
    parse_tolerance_overrides,
    read_config_file,
)
from .exceptions import (
    ConvergenceError,
    DegenerateParameterError,
    InvalidParameterError,
    QesError,
)

if TYPE_CHECKING:
    from .oracle import OracleConfig
    from .spectra import SpectralResult

__all__ = ("app",)

_EXIT_NONE: Final = 1
_EXIT_INVALID: Final = 2
_EXIT_CONVERGENCE: Final = 3

_DEFAULT_SEED: Final = 42
_DEFAULT_FORMAT: Final = OutputFormat.JSON
_NIVEN_FIELDS: Final = (
    "dim",
    "ell",
    "degree",
    "alpha",
    "beta",
    "config_id",
    "zeros_re",
    "zeros_im",
    "residual_norm",
    "real_only",
    "energy",
    "energy_imag",
    "coefficients",
    "coefficients_im",
    "consistent",
)


def _version_callback(*, value: bool) -> None:
    if not value:
        return

    from ._meta import get_version  # noqa: PLC0415

    typer.echo(f"qesq {get_version()}")
    raise typer.Exit


_OptionVersion: TypeAlias = Annotated[
    bool | None,
    typer.Option(
        "--version",
        callback=_version_callback,
        is_eager=True,
        help="Show the version and exit",
    ),
]
_OptionVerbose: TypeAlias = Annotated[
    bool,
    typer.Option("--verbose", "-v", help="Log solver diagnostics to stderr"),
]
_OptionDim: TypeAlias = Annotated[
    int | None,
    typer.Option("--dim", help="Space dimension N."),
]
_OptionEll: TypeAlias = Annotated[
    int | None,
    typer.Option("--ell", help="Angular momentum l."),
]
_OptionDegree: TypeAlias = Annotated[
    int | None,
    typer.Option("--degree", help="Degree m of the polynomial factor."),
]
_OptionAlpha: TypeAlias = Annotated[
    float | None,
    typer.Option("--alpha", help="Ansatz alpha."),
]
_OptionBeta: TypeAlias = Annotated[
    float | None,
    typer.Option("--beta", help="Ansatz beta (N = 1 only; solved for when N > 1)."),
]
_OptionEnergy: TypeAlias = Annotated[
    float | None,
    typer.Option("--energy", help="Energy E."),
]
_OptionFormat: TypeAlias = Annotated[
    OutputFormat | None,
    typer.Option("--format", help="Output format."),
]
_OptionOut: TypeAlias = Annotated[
    Path | None,
    typer.Option(
        "--out",
        dir_okay=False,
        writable=True,
        help="Output file. Defaults to stdout.",
    ),
]
_OptionSeed: TypeAlias = Annotated[
    int | None,
    typer.Option("--seed", help="Seed of all randomized start sets."),
]
_OptionStarts: TypeAlias = Annotated[
    int | None,
    typer.Option("--starts", help="Number of generated Newton starts."),
]
_OptionTol: TypeAlias = Annotated[
    list[str] | None,
    typer.Option("--tol", help="Tolerance override 'name=value', repeatable."),
]
_OptionConfig: TypeAlias = Annotated[
    Path | None,
    typer.Option(
        "--config",
        exists=True,
        dir_okay=False,
        readable=True,
        help="Flat 'key = value' file with defaults for the flags.",
    ),
]
_OptionVerify: TypeAlias = Annotated[
    bool | None,
    typer.Option("--verify", help="Run the numerical oracle on every record."),
]
_OptionRealOnly: TypeAlias = Annotated[
    bool | None,
    typer.Option("--real-only", help="Restrict the zeros to the real line."),
]
_OptionGridPoints: TypeAlias = Annotated[
    int | None,
    typer.Option("--grid-points", help="Points of the radial grid."),
]
_OptionRMax: TypeAlias = Annotated[
    float | None,
    typer.Option(
        "--rmax",
        help="Fixed radial cutoff instead of the turning-point rule.",
    ),
]
_OptionInput: TypeAlias = Annotated[
    Path | None,
    typer.Option("--input", dir_okay=False, help="JSON-lines or .csv result records."),
]
_OptionEllRange: TypeAlias = Annotated[
    str | None,
    typer.Option("--ell-range", help="Inclusive range 'a:b' of l."),
]
_OptionDegreeRange: TypeAlias = Annotated[
    str | None,
    typer.Option("--degree-range", help="Inclusive range 'a:b' of m."),
]
_OptionOutDir: TypeAlias = Annotated[
    Path | None,
    typer.Option("--out", file_okay=False, help="Directory for the case files."),
]
_OptionKind: TypeAlias = Annotated[
    MatrixKind | None,
    typer.Option("--kind", case_sensitive=False, help="Which matrix to print."),
]


@dataclasses.dataclass(slots=True)
class _Run:
    """Flag values merged over the optional config file."""

    options: Mapping[str, str]
    tolerances: Tolerances

    @classmethod
    def load(cls, config: Path | None, tol: list[str] | None) -> _Run:
        options: dict[str, str] = {}
        overrides: dict[str, float] = {}
        if config is not None:
            options, overrides = read_config_file(config)
        overrides |= parse_tolerance_overrides(tol or ())
        return cls(options, DEFAULT_TOLERANCES.with_overrides(overrides))

    def pick[T](self, value: T | None, key: str, parse: Callable[[str], T]) -> T | None:
        if value is not None:
            return value
        if (raw := self.options.get(key)) is None:
            return None
        try:
            return parse(raw)
        except ValueError:
            raise InvalidParameterError(f"invalid value {raw!r} for {key!r}") from None

    def get[T](
        self,
        value: T | None,
        key: str,
        parse: Callable[[str], T],
        default: T,
    ) -> T:
        out = self.pick(value, key, parse)
        return default if out is None else out

    def require[T](self, value: T | None, key: str, parse: Callable[[str], T]) -> T:
        if (out := self.pick(value, key, parse)) is None:
            raise InvalidParameterError(f"missing option '--{key}'")
        return out


def _parse_flag(raw: str, /) -> bool:
    match raw.strip().lower():
        case "true" | "yes" | "1":
            return True
        case "false" | "no" | "0":
            return False
        case _:
            raise ValueError(raw)


def _parse_range(raw: str, /) -> tuple[int, int]:
    lo, sep, hi = raw.partition(":")
    start, stop = int(lo), int(hi) if sep else int(lo)
    if stop < start:
        raise ValueError(raw)
    return start, stop


@contextlib.contextmanager
def _exit_codes() -> Iterator[None]:
    try:
        yield
    except ConvergenceError as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(_EXIT_CONVERGENCE) from e
    except (QesError, ValueError) as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(_EXIT_INVALID) from e


def _write_output(output: Path | None, /, output_str: str) -> None:
    if output is None or str(output) == "-":
        typer.echo(output_str, nl=False)
    else:
        _ = output.write_text(output_str, encoding="utf-8")


def _solve(
    run: _Run,
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float | None,
    *,
    starts: int | None,
    seed: int,
) -> SpectralResult:
    from .spectra import MultistartConfig, solve_n1, solve_ngt1  # noqa: PLC0415

    tol = run.tolerances
    if dim == 1:
        if beta is None:
            raise InvalidParameterError("'--beta' is required for N = 1")
        if ell != 0:
            raise InvalidParameterError("N = 1 requires l = 0")
        return solve_n1(
            degree,
            alpha,
            beta,
            imag_tol=tol.imag,
            validation_tol=tol.validation,
        )

    if beta is not None:
        raise InvalidParameterError("'--beta' is solved for when N > 1")
    config = MultistartConfig(
        starts=MultistartConfig().starts if starts is None else starts,
        rtol=tol.newton,
        cluster_rtol=tol.cluster,
        seed=seed,
    )
    return solve_ngt1(
        dim,
        ell,
        degree,
        alpha,
        config,
        imag_tol=tol.imag,
        validation_tol=tol.validation,
    )


def _records(result: SpectralResult, /) -> list[ResultRecord]:
    """Physical solutions first, then rejected branches that have a real solution."""
    key = result.dim, result.ell, result.degree
    rejected = [r.solution for r in result.rejected if r.solution]
    solutions = [*result.solutions, *rejected]
    for rejection in result.rejected:
        if rejection.solution is None:
            typer.echo(f"rejected E = {rejection.energy}: {rejection.reason}", err=True)
    return [
        ResultRecord.from_solution(key, result.alpha, solution, branch_id=i)
        for i, solution in enumerate(solutions)
    ]


def _oracle_config(
    run: _Run,
    points: int | None = None,
    r_max: float | None = None,
) -> OracleConfig:
    from .oracle import DEFAULT_POINTS, OracleConfig  # noqa: PLC0415

    return OracleConfig(
        points=points or DEFAULT_POINTS,
        r_max=r_max,
        ode_tol=run.tolerances.ode,
        fd_tol=run.tolerances.fd,
    )


app: Final = typer.Typer(
    name="qesq",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
    help="Quasi-exact levels of the O(N) quartic anharmonic oscillator.",
)


@app.callback()  # type: ignore[no-any-expr]
def main(
    *,
    version: _OptionVersion = None,
    verbose: _OptionVerbose = False,
) -> None:
    assert not version

    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("qesq").setLevel(level)


@app.command()  # type: ignore[no-any-expr]
def solve(  # noqa: PLR0913
    *,
    dim: _OptionDim = None,
    ell: _OptionEll = None,
    degree: _OptionDegree = None,
    alpha: _OptionAlpha = None,
    beta: _OptionBeta = None,
    starts: _OptionStarts = None,
    seed: _OptionSeed = None,
    fmt: _OptionFormat = None,
    out: _OptionOut = None,
    verify: _OptionVerify = None,
    tol: _OptionTol = None,
    config: _OptionConfig = None,
) -> None:
    """Quasi-exact levels and the coefficients of their polynomial factor."""
    with _exit_codes():
        run = _Run.load(config, tol)
        n = run.require(dim, "dim", int)
        result = _solve(
            run,
            n,
            run.get(ell, "ell", int, 0),
            run.require(degree, "degree", int),
            run.require(alpha, "alpha", float),
            run.pick(beta, "beta", float),
            starts=run.pick(starts, "starts", int),
            seed=run.get(seed, "seed", int, _DEFAULT_SEED),
        )
        records = _records(result)

        if run.get(verify, "verify", _parse_flag, False):
            from .oracle import verify as run_oracle  # noqa: PLC0415

            oracle = _oracle_config(run)
            records = [
                r.with_verdict(run_oracle(r.spec, r.params, r.solution, oracle).verdict)
                for r in records
            ]

        fmt = run.get(fmt, "format", OutputFormat, _DEFAULT_FORMAT)
        rows = [r.to_dict() for r in records]
        _write_output(run.pick(out, "out", Path), format_rows(rows, fmt))

    if not result.solutions:
        typer.echo("no physical solution", err=True)
        raise typer.Exit(_EXIT_NONE)


@app.command()  # type: ignore[no-any-expr]
def niven(  # noqa: PLR0913
    *,
    dim: _OptionDim = None,
    ell: _OptionEll = None,
    degree: _OptionDegree = None,
    alpha: _OptionAlpha = None,
    beta: _OptionBeta = None,
    starts: _OptionStarts = None,
    seed: _OptionSeed = None,
    real_only: _OptionRealOnly = None,
    fmt: _OptionFormat = None,
    out: _OptionOut = None,
    tol: _OptionTol = None,
    config: _OptionConfig = None,
) -> None:
    """Zeros of the polynomial factor from the Niven equations."""
    from . import niven as nv  # noqa: PLC0415

    with _exit_codes():
        run = _Run.load(config, tol)
        n = run.require(dim, "dim", int)
        l_ = run.get(ell, "ell", int, 0)
        m = run.require(degree, "degree", int)
        a = run.require(alpha, "alpha", float)
        b = run.require(beta, "beta", float)
        tols = run.tolerances

        search = nv.solve_niven(
            a,
            b,
            n,
            l_,
            m,
            starts=_matrix_starts(n, m, a, b),
            n_starts=run.get(starts, "starts", int, nv.DEFAULT_STARTS),
            seed=run.get(seed, "seed", int, _DEFAULT_SEED),
            real_only=run.get(real_only, "real-only", _parse_flag, False),
            tol=tols.niven,
            separation_tol=tols.separation,
            dedup_tol=tols.dedup,
        )
        rows: list[dict[str, Any]] = []
        for i, conf in enumerate(search.configurations):
            energy = nv.energy_from_zeros(conf, a, b)
            coeffs = nv.polynomial_from_zeros(conf)
            consistent = nv.is_consistent(
                coeffs, a, b, energy, n, l_, m, tol=tols.niven
            )
            rows.append({
                "dim": n,
                "ell": l_,
                "degree": m,
                "alpha": a,
                "beta": b,
                "config_id": i,
                "zeros_re": [z.real for z in conf.zeros],
                "zeros_im": [z.imag for z in conf.zeros],
                "residual_norm": conf.residual_norm,
                "real_only": conf.real_only,
                "energy": energy.real,
                "energy_imag": energy.imag,
                "coefficients": [float(c.real) for c in coeffs],
                "coefficients_im": [float(c.imag) for c in coeffs],
                "consistent": consistent,
            })

        fmt = run.get(fmt, "format", OutputFormat, _DEFAULT_FORMAT)
        _write_output(run.pick(out, "out", Path), format_rows(rows, fmt, _NIVEN_FIELDS))

    typer.echo(
        f"{len(rows)} configuration(s), "
        f"{search.converged} of {search.attempted} starts converged",
        err=True,
    )
    for message, count in sorted(search.failures.items()):
        typer.echo(f"  {count} start(s): {message}", err=True)
    if not rows:
        raise typer.Exit(_EXIT_NONE)


def _matrix_starts(
    dim: int,
    degree: int,
    alpha: float,
    beta: float,
) -> list[list[complex]]:
    """Zeros of the `N = 1` matrix solutions, when that solver applies."""
    if dim != 1 or not beta > 0 or degree < 1:
        return []

    from .niven import configuration_from_coeffs  # noqa: PLC0415
    from .spectra import solve_n1  # noqa: PLC0415

    with contextlib.suppress(QesError, ValueError, ZeroDivisionError):
        result = solve_n1(degree, alpha, beta)
        configs = [
            configuration_from_coeffs(s.coeffs, alpha, beta, 1, 0)
            for s in result.solutions
        ]
        return [list(c.zeros) for c in configs if c.degree == degree]
    return []


@app.command("verify")  # type: ignore[no-any-expr]
def verify_records(
    *,
    source: _OptionInput = None,
    grid_points: _OptionGridPoints = None,
    r_max: _OptionRMax = None,
    fmt: _OptionFormat = None,
    out: _OptionOut = None,
    tol: _OptionTol = None,
    config: _OptionConfig = None,
) -> None:
    """Check stored records against the numerical oracle."""
    from .oracle import verify  # noqa: PLC0415

    with _exit_codes():
        run = _Run.load(config, tol)
        records = read_records(run.require(source, "input", Path))
        oracle = _oracle_config(
            run,
            run.pick(grid_points, "grid-points", int),
            run.pick(r_max, "rmax", float),
        )
        fmt = run.get(fmt, "format", OutputFormat, _DEFAULT_FORMAT)
        output = run.pick(out, "out", Path)

        if not records:
            typer.echo("warning: no records to verify", err=True)
            _write_output(output, "")
            return

        rows: list[dict[str, Any]] = []
        confirmed = True
        for record in records:
            report = verify(record.spec, record.params, record.solution, oracle)
            if record.physical and report.verdict is not Verdict.CONFIRMED:
                confirmed = False
            rows.append(
                record.with_verdict(report.verdict).to_dict()
                | {
                    "ode_residual": report.ode_residual_max,
                    "norm_integral": report.norm_integral,
                    "matched_index": report.matched_index,
                    "match_error": report.match_error,
                },
            )

        _write_output(output, format_rows(rows, fmt, RECORD_FIELDS + VERIFY_FIELDS))

    if not confirmed:
        raise typer.Exit(_EXIT_NONE)


@app.command()  # type: ignore[no-any-expr]
def sweep(  # noqa: PLR0913
    *,
    dim: _OptionDim = None,
    ell_range: _OptionEllRange = None,
    degree_range: _OptionDegreeRange = None,
    alpha: _OptionAlpha = None,
    beta: _OptionBeta = None,
    out: _OptionOutDir = None,
    starts: _OptionStarts = None,
    seed: _OptionSeed = None,
    fmt: _OptionFormat = None,
    tol: _OptionTol = None,
    config: _OptionConfig = None,
) -> None:
    """Solve every (l, m) in a grid into one file per case, plus a manifest."""
    from ._meta import get_version  # noqa: PLC0415
    from .spectra import MultistartConfig  # noqa: PLC0415

    with _exit_codes():
        run = _Run.load(config, tol)
        n = run.require(dim, "dim", int)
        ells = run.require(ell_range, "ell-range", _parse_range)
        degrees = run.require(degree_range, "degree-range", _parse_range)
        a = run.require(alpha, "alpha", float)
        b = run.pick(beta, "beta", float)
        directory = run.require(out, "out", Path)
        n_starts = run.get(starts, "starts", int, MultistartConfig().starts)
        s = run.get(seed, "seed", int, _DEFAULT_SEED)
        fmt = run.get(fmt, "format", OutputFormat, _DEFAULT_FORMAT)

        if a == 0:
            raise DegenerateParameterError("alpha = 0 is excluded from the ansatz")
        if n == 1 and ells != (0, 0):
            raise InvalidParameterError("N = 1 requires '--ell-range 0:0'")
        if n == 1 and b is None:
            raise InvalidParameterError("'--beta' is required for N = 1")
        if n > 1 and b is not None:
            raise InvalidParameterError("'--beta' is solved for when N > 1")
        if n > 1 and degrees[0] < 1:
            raise InvalidParameterError("N > 1 requires degrees >= 1")
        if ells[0] < 0 or degrees[0] < 0:
            raise InvalidParameterError("ranges must be non-negative")

        directory.mkdir(parents=True, exist_ok=True)
        suffix = "jsonl" if fmt is OutputFormat.JSON else "csv"
        cases: list[dict[str, Any]] = []
        for l_ in range(ells[0], ells[1] + 1):
            for m in range(degrees[0], degrees[1] + 1):
                filename = f"case_l{l_}_m{m}.{suffix}"
                case: dict[str, Any] = {"ell": l_, "degree": m, "file": filename}
                try:
                    result = _solve(run, n, l_, m, a, b, starts=n_starts, seed=s)
                except ConvergenceError as e:
                    records: list[ResultRecord] = []
                    case |= {"status": "failed", "error": str(e)}
                else:
                    records = _records(result)
                    case |= {"status": "ok", "error": None}

                case |= {
                    "records": len(records),
                    "physical": sum(r.physical for r in records),
                }
                _ = (directory / filename).write_text(
                    format_rows([r.to_dict() for r in records], fmt),
                    encoding="utf-8",
                )
                cases.append(case)

        manifest = {
            "version": get_version(),
            "seed": s,
            "command": {
                "name": "sweep",
                "dim": n,
                "ell_range": list(ells),
                "degree_range": list(degrees),
                "alpha": a,
                "beta": b,
                "starts": n_starts,
                "format": str(fmt),
                "tolerances": dataclasses.asdict(run.tolerances),
            },
            "cases": cases,
        }
        _ = (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    failed = [c for c in cases if c["status"] != "ok"]
    done = len(cases) - len(failed)
    typer.echo(f"{done} of {len(cases)} case(s) completed", err=True)
    if failed:
        raise typer.Exit(_EXIT_CONVERGENCE)


@app.command()  # type: ignore[no-any-expr]
def matrix(  # noqa: PLR0913
    *,
    kind: _OptionKind = None,
    dim: _OptionDim = None,
    ell: _OptionEll = None,
    degree: _OptionDegree = None,
    alpha: _OptionAlpha = None,
    beta: _OptionBeta = None,
    energy: _OptionEnergy = None,
    fmt: _OptionFormat = None,
    config: _OptionConfig = None,
) -> None:
    """Print F, P or Q."""
    from .matrices import build_F, build_P, build_Q  # noqa: PLC0415

    with _exit_codes():
        run = _Run.load(config, None)
        k = run.require(kind, "kind", lambda s: MatrixKind(s.upper()))
        m = run.require(degree, "degree", int)
        a = run.require(alpha, "alpha", float)
        # the D(s) band starts at row 2
        has_beta = m >= (2 if k is MatrixKind.Q else 1)
        if has_beta:
            b = run.require(beta, "beta", float)
        else:
            b = run.get(beta, "beta", float, 0.0)

        if k is MatrixKind.P:
            built = build_P(m, a, b)
        else:
            n = run.require(dim, "dim", int)
            l_ = run.get(ell, "ell", int, 0)
            e = run.require(energy, "energy", float)
            built = (build_F if k is MatrixKind.F else build_Q)(n, l_, m, a, b, e)

        fmt = run.get(fmt, "format", OutputFormat, _DEFAULT_FORMAT)
        if fmt is OutputFormat.JSON:
            output = json.dumps(built.tolist()) + "\n"
        else:
            lines = (",".join(repr(x) for x in row) for row in built.tolist())
            output = "".join(f"{line}\n" for line in lines)
        _write_output(None, output)
