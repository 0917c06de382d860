"""
Checks of claimed solutions that do not rely on the recurrence: the radial
Schroedinger equation evaluated on the analytic ansatz, a finite-difference
eigensolver for the same operator, and the normalization integral.
"""

import dataclasses
import logging
import math
from collections.abc import Callable
from typing import Final, Self, final

import numpy as np
from numpy.polynomial import polynomial as npp
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal

from ._types import FloatArray, Verdict
from .exceptions import DomainError, InvalidParameterError
from .model import (
    AnsatzParams,
    OscillatorSpec,
    QesSolution,
    evaluate_potential,
    radial_factor,
)
from .spectra import Rejection

__all__ = (
    "DEFAULT_FD_TOL",
    "DEFAULT_ODE_TOL",
    "FdSpectrum",
    "OracleConfig",
    "OracleReport",
    "RadialGrid",
    "fd_spectrum",
    "norm_integral",
    "ode_residual",
    "radial_fd_spectrum",
    "verify",
)

logger: Final = logging.getLogger(__name__)

DEFAULT_POINTS: Final = 4000
DEFAULT_ODE_TOL: Final = 1e-8
DEFAULT_FD_TOL: Final = 1e-3
MIN_POINTS: Final = 100

_TAIL_RTOL: Final = 1e-12
_MAX_EXTENSIONS: Final = 8
_EXTENSION: Final = 1.5

type Potential = Callable[[FloatArray], FloatArray]


@final
@dataclasses.dataclass(frozen=True, slots=True)
class RadialGrid:
    r_max: float
    points: int = DEFAULT_POINTS

    def __post_init__(self, /) -> None:
        if not self.r_max > 0:
            raise InvalidParameterError(f"r_max must be > 0, got {self.r_max}")
        if self.points < MIN_POINTS:
            raise InvalidParameterError(
                f"points must be >= {MIN_POINTS}, got {self.points}",
            )

    @property
    def spacing(self, /) -> float:
        return self.r_max / self.points

    @property
    def nodes(self, /) -> FloatArray:
        """`points + 1` nodes on `[0, r_max]`."""
        return np.linspace(0.0, self.r_max, self.points + 1)

    @property
    def centers(self, /) -> FloatArray:
        """The `points` cell midpoints."""
        return (np.arange(self.points) + 0.5) * self.spacing

    def refined(self, factor: float, /) -> Self:
        return type(self)(self.r_max, max(MIN_POINTS, round(self.points * factor)))

    def extended(self, factor: float, /) -> Self:
        """Same spacing on `[0, factor * r_max]`."""
        return type(self)(self.r_max * factor, round(self.points * factor))

    @classmethod
    def for_energy(
        cls,
        spec: OscillatorSpec,
        energy: float,
        /,
        points: int = DEFAULT_POINTS,
        *,
        padding: float = 1.5,
        min_r_max: float = 6.0,
    ) -> Self:
        """Padded outer classical turning point of `V(r) = energy`."""
        roots = npp.polyroots([-energy, spec.lambda1, spec.lambda2, 0.0, spec.lambda4])
        scale = max(1.0, float(np.max(np.abs(roots))))
        real = roots.real[(np.abs(roots.imag) <= 1e-9 * scale) & (roots.real > 0)]
        turning = float(np.max(real)) if real.size else 0.0
        return cls(max(padding * turning, min_r_max), points)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class OracleConfig:
    points: int = DEFAULT_POINTS
    # fixed r_max instead of `RadialGrid.for_energy`
    r_max: float | None = None
    padding: float = 1.5
    min_r_max: float = 6.0
    levels: int = 5
    ode_tol: float = DEFAULT_ODE_TOL
    fd_tol: float = DEFAULT_FD_TOL

    def grid(self, spec: OscillatorSpec, energy: float, /) -> RadialGrid:
        if self.r_max is not None:
            return RadialGrid(self.r_max, self.points)
        return RadialGrid.for_energy(
            spec,
            energy,
            self.points,
            padding=self.padding,
            min_r_max=self.min_r_max,
        )


@final
@dataclasses.dataclass(frozen=True, slots=True)
class FdSpectrum:
    eigenvalues: tuple[float, ...]
    # the same levels at half the resolution
    coarse: tuple[float, ...]
    extrapolated: tuple[float, ...]
    error_estimate: float
    converged: bool


@final
@dataclasses.dataclass(frozen=True, slots=True)
class OracleReport:
    ode_residual_max: float
    fd_eigenvalues: tuple[float, ...]
    matched_index: int | None
    match_error: float | None
    norm_integral: float
    verdict: Verdict


def ode_residual(
    spec: OscillatorSpec,
    params: AnsatzParams,
    solution: QesSolution,
    grid: RadialGrid,
    /,
) -> float:
    """
    `max_r |H R - E R| / max_r |R|` over the nodes with `r > 0`, where `H` is the
    radial operator with the `(N - 1) / r` and centrifugal terms.
    """
    n, ell = spec.dim, spec.ell
    r = grid.nodes[1:]
    value, d1, d2 = radial_factor(params, solution.coeffs, ell, r)

    with np.errstate(over="ignore", invalid="ignore"):
        kinetic = -(d2 + (n - 1) / r * d1 - ell * (ell + n - 2) / r**2 * value) / 2
        residual = kinetic + (evaluate_potential(spec, r) - solution.energy) * value

    norm = float(np.max(np.abs(value), initial=0.0))
    if norm == 0 or not np.all(np.isfinite(residual)):
        return math.inf
    return float(np.max(np.abs(residual))) / norm


def radial_fd_spectrum(
    potential: Potential,
    dim: int,
    ell: int,
    grid: RadialGrid,
    /,
    levels: int = 5,
) -> FloatArray:
    """
    The `levels` lowest eigenvalues of

        -(r^(N - 1) R')' / (2 r^(N - 1)) + [V(r) + l(l + N - 2) / (2 r^2)] R = E R

    by second-order finite volumes: `R` at the cell centers, the exact cell
    volumes as weights, no flux through `r = 0` and `R(r_max) = 0`.

    The unreduced form stays regular at the origin for every `(N, l)`, including
    `N = 2, l = 0` where `u = r^(1/2) R` is not smooth.
    """
    if dim < 2:  # noqa: PLR2004
        raise DomainError("the radial equation needs dim >= 2")
    if not 1 <= levels <= (most := grid.points // 10):
        raise InvalidParameterError(f"levels must be in [1, {most}], got {levels}")

    faces, r, h = grid.nodes, grid.centers, grid.spacing
    flux = faces ** (dim - 1)
    # R = 0 on the outer face, half a cell beyond the last center
    flux[-1] *= 2
    volume = np.diff(faces**dim) / (dim * h)

    centrifugal = ell * (ell + dim - 2) / (2 * r**2)
    kinetic = (flux[:-1] + flux[1:]) / (2 * h**2 * volume)
    diagonal = kinetic + np.asarray(potential(r), dtype=np.float64) + centrifugal
    # symmetrized with the volume weights
    off = -flux[1:-1] / (2 * h**2 * np.sqrt(volume[:-1] * volume[1:]))

    return eigh_tridiagonal(
        diagonal,
        off,
        eigvals_only=True,
        select="i",
        select_range=(0, levels - 1),
    )


def fd_spectrum(
    spec: OscillatorSpec,
    grid: RadialGrid,
    /,
    levels: int = 5,
    *,
    tol: float = DEFAULT_FD_TOL,
) -> FdSpectrum:
    """
    `radial_fd_spectrum` of the oscillator on `grid` and on half of its points.

    The Richardson estimate `|fine - coarse| / 3` of the discretization error
    decides `converged`; `extrapolated` is `fine` with that error removed.
    """
    if spec.dim < 2:  # noqa: PLR2004
        raise DomainError("no finite-difference spectrum for dim = 1")

    def potential(r: FloatArray) -> FloatArray:
        return evaluate_potential(spec, r)

    fine = radial_fd_spectrum(potential, spec.dim, spec.ell, grid, levels)
    coarse_grid = grid.refined(0.5)
    coarse_levels = min(levels, coarse_grid.points // 10)
    coarse = radial_fd_spectrum(
        potential, spec.dim, spec.ell, coarse_grid, coarse_levels
    )

    correction = (fine[:coarse_levels] - coarse) / 3
    extrapolated = fine.copy()
    extrapolated[:coarse_levels] += correction

    error = float(np.max(np.abs(correction)))
    if error > tol:
        logger.warning("finite-difference levels not converged (error %.3g)", error)
    return FdSpectrum(
        tuple(float(e) for e in fine),
        tuple(float(e) for e in coarse),
        tuple(float(e) for e in extrapolated),
        error,
        error <= tol,
    )


def _norm_on(
    params: AnsatzParams,
    solution: QesSolution,
    ell: int,
    dim: int,
    grid: RadialGrid,
) -> tuple[float, float]:
    r = grid.nodes
    value, _, _ = radial_factor(params, solution.coeffs, ell, r)
    density = value**2 * r ** (dim - 1)
    total = float(simpson(density, x=r))

    # log-derivative of the density at r_max, dominated by the cubic exponent
    r_max = grid.r_max
    decay = 2 * params.beta * r_max**2 + 2 * params.alpha
    tail = float(density[-1]) / decay if decay > 0 else math.inf
    return total, tail


def norm_integral(
    params: AnsatzParams,
    solution: QesSolution,
    ell: int,
    dim: int,
    grid: RadialGrid,
    /,
) -> float:
    """
    `int_0^inf R(r)^2 r^(N - 1) dr` by composite Simpson, `inf` for `beta <= 0`.

    The grid is extended at constant spacing while the estimated tail beyond
    `r_max` exceeds `1e-12` of the total.
    """
    if not params.beta > 0:
        return math.inf

    total, tail = _norm_on(params, solution, ell, dim, grid)
    for _ in range(_MAX_EXTENSIONS):
        if tail <= _TAIL_RTOL * total:
            break
        grid = grid.extended(_EXTENSION)
        logger.debug("extending the normalization grid to r_max = %g", grid.r_max)
        total, tail = _norm_on(params, solution, ell, dim, grid)
    else:
        if not tail <= _TAIL_RTOL * total:
            logger.warning("normalization tail still %.3g of the total", tail / total)

    return total + tail if math.isfinite(tail) else math.inf


def _nearest(levels: FloatArray, energy: float) -> tuple[int, float]:
    index = int(np.argmin(np.abs(levels - energy)))
    return index, float(abs(levels[index] - energy))


def verify(
    spec: OscillatorSpec,
    params: AnsatzParams,
    solution: QesSolution | Rejection,
    /,
    config: OracleConfig | None = None,
) -> OracleReport:
    """
    Run the ODE residual, the normalization integral and (for `dim >= 2`) the
    finite-difference spectrum against a solution.

    A rejected complex-energy candidate has nothing to evaluate and is reported
    as unmatched; a rejected `beta <= 0` branch is checked like any solution.
    """
    config = config or OracleConfig()
    if isinstance(solution, Rejection):
        if solution.solution is None:
            return OracleReport(math.inf, (), None, None, math.nan, Verdict.UNMATCHED)
        solution = solution.solution

    grid = config.grid(spec, solution.energy)
    residual = ode_residual(spec, params, solution, grid)
    norm = norm_integral(params, solution, spec.ell, spec.dim, grid)

    eigenvalues: tuple[float, ...] = ()
    matched: int | None = None
    error: float | None = None
    if spec.dim >= 2:  # noqa: PLR2004
        levels = max(config.levels, solution.degree + 2)
        fd = fd_spectrum(spec, grid, levels, tol=config.fd_tol)
        eigenvalues = fd.extrapolated
        matched, error = _nearest(np.asarray(eigenvalues), solution.energy)

    if not math.isfinite(norm):
        verdict = Verdict.NON_NORMALIZABLE
    elif residual <= config.ode_tol and (error is None or error <= config.fd_tol):
        verdict = Verdict.CONFIRMED
    else:
        verdict = Verdict.UNMATCHED

    logger.debug(
        "E = %.12g: residual %.3g, norm %.6g, match %s -> %s",
        solution.energy,
        residual,
        norm,
        matched,
        verdict,
    )
    return OracleReport(residual, eigenvalues, matched, error, norm, verdict)
