"""
The polynomial factor `Phi_m(r) = prod_i (r - r_i)` through its zeros.

At every zero the ODE for `Phi` reduces to the Niven equations

    sum_{j != i} 2 / (r_i - r_j) - 2 beta r_i^2 - 2 alpha + (N + 2l - 1) / r_i = 0,

which for real zeros are the equilibrium conditions of unit charges on a line
in the external field of `W` (see `electrostatic_energy`).
"""

import dataclasses
import logging
import math
from collections import Counter
from collections.abc import Sequence
from typing import Final, final

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as npp

from ._newton import newton
from ._types import ComplexArray, FloatArray
from .exceptions import InvalidParameterError, SingularConfigurationError

__all__ = (
    "DEFAULT_NIVEN_TOL",
    "NivenConfiguration",
    "NivenSearch",
    "configuration_from_coeffs",
    "consistency_check",
    "electrostatic_energy",
    "energy_from_zeros",
    "is_consistent",
    "niven_residual",
    "polynomial_from_zeros",
    "solve_niven",
)

logger: Final = logging.getLogger(__name__)

DEFAULT_NIVEN_TOL: Final = 1e-10
DEFAULT_SEPARATION_TOL: Final = 1e-8
DEFAULT_DEDUP_TOL: Final = 1e-6
DEFAULT_STARTS: Final = 16
_REAL_TOL: Final = 1e-12


@final
@dataclasses.dataclass(frozen=True, slots=True)
class NivenConfiguration:
    # sorted by real, then imaginary part
    zeros: tuple[complex, ...]
    residual_norm: float
    real_only: bool

    @property
    def degree(self, /) -> int:
        return len(self.zeros)

    @property
    def array(self, /) -> ComplexArray:
        return np.asarray(self.zeros, dtype=np.complex128)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class NivenSearch:
    configurations: tuple[NivenConfiguration, ...]
    attempted: int
    converged: int
    # failure message -> number of starts
    failures: dict[str, int] = dataclasses.field(default_factory=dict)


def _scale(z: ComplexArray, /) -> float:
    return max(float(np.max(np.abs(z), initial=0.0)), np.finfo(np.float64).tiny)


def _check_configuration(
    z: ComplexArray,
    k: int,
    /,
    separation_tol: float = DEFAULT_SEPARATION_TOL,
) -> None:
    scale = _scale(z)
    if k != 0 and np.any(np.abs(z) <= separation_tol * scale):
        raise SingularConfigurationError("zero at the origin with N + 2l != 1")
    if z.size > 1:
        gaps = np.abs(z[:, None] - z[None, :])
        gaps[np.diag_indices(z.size)] = np.inf
        if np.min(gaps) <= separation_tol * scale:
            raise SingularConfigurationError("coincident zeros")


def _residual_and_jacobian(
    z: ComplexArray,
    alpha: float,
    beta: float,
    k: int,
    /,
) -> tuple[ComplexArray, FloatArray, ComplexArray]:
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)

    pair = 2 * inv.sum(axis=1)
    field = -2 * beta * z**2 - 2 * alpha
    centre = k / z if k else np.zeros_like(z)
    residual = pair + field + centre
    scale = (
        np.abs(2 * inv).sum(axis=1)
        + np.abs(field)
        + 2 * abs(alpha)
        + np.abs(centre)
    )

    jac = 2 * inv**2
    diag = -2 * (inv**2).sum(axis=1) - 4 * beta * z - (k / z**2 if k else 0)
    jac[np.diag_indices(z.size)] = diag
    return residual, scale, jac


def niven_residual(
    zeros: Sequence[complex] | npt.ArrayLike,
    /,
    alpha: float,
    beta: float,
    dim: int,
    ell: int,
    *,
    separation_tol: float = DEFAULT_SEPARATION_TOL,
) -> ComplexArray:
    """
    >>> abs(niven_residual([1.0], -1.0, 2.0, 3, 0)).tolist()
    [0.0]
    >>> niven_residual([1.0], -1.0, 1.0, 3, 0).real.tolist()
    [2.0]
    """
    z = np.atleast_1d(np.asarray(zeros, dtype=np.complex128))
    k = dim + 2 * ell - 1
    _check_configuration(z, k, separation_tol)
    return _residual_and_jacobian(z, alpha, beta, k)[0]


def _canonical(z: ComplexArray, /) -> ComplexArray:
    order = np.lexsort((z.imag, z.real))
    return z[order]


def _same_multiset(x: ComplexArray, y: ComplexArray, tol: float) -> bool:
    scale = max(_scale(x), _scale(y), 1.0)
    return bool(np.all(np.abs(_canonical(x) - _canonical(y)) <= tol * scale))


def _start_set(
    alpha: float,
    beta: float,
    degree: int,
    n_starts: int,
    rng: np.random.Generator,
    *,
    real_only: bool,
) -> list[ComplexArray]:
    # sqrt(|alpha| / beta) is the N = 1, m = 1 zero; spread wider for larger m
    radius = math.sqrt(abs(alpha) / abs(beta)) * math.sqrt(max(degree, 1))
    m = degree
    starts: list[ComplexArray] = []

    for i in range(n_starts):
        spread = radius * math.exp(rng.uniform(-math.log(2), math.log(2)))
        if real_only or i % 2:
            # real configurations across both half-lines
            if i % 4 < 2:
                base = np.linspace(spread / (m + 1), spread, m)
            elif m > 1:
                base = np.linspace(-spread, spread, m + 2)[1:-1]
            else:
                base = np.array([-spread])
            z = base + rng.normal(scale=0.05 * radius, size=m)
            starts.append(z.astype(np.complex128))
        else:
            offset = 2 * math.pi * i / n_starts
            theta = 2 * math.pi * np.arange(m) / m + offset
            z = spread * np.exp(1j * theta)
            z = z + radius * 0.05 * (rng.normal(size=m) + 1j * rng.normal(size=m))
            starts.append(z)

    return starts


def solve_niven(
    alpha: float,
    beta: float,
    dim: int,
    ell: int,
    degree: int,
    /,
    *,
    starts: Sequence[Sequence[complex]] | None = None,
    n_starts: int = DEFAULT_STARTS,
    seed: int = 42,
    real_only: bool = False,
    tol: float = DEFAULT_NIVEN_TOL,
    separation_tol: float = DEFAULT_SEPARATION_TOL,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
    max_iter: int = 100,
) -> NivenSearch:
    """
    Newton iteration on the (complex) Niven residual map from every start.

    Explicit `starts` are used first, then `n_starts` seeded ring and real-line
    configurations. An empty search is not an error; see `NivenSearch.failures`.
    """
    if degree < 1:
        raise InvalidParameterError("the Niven equations need degree >= 1")
    if beta == 0:
        raise InvalidParameterError("beta must be nonzero")

    k = dim + 2 * ell - 1
    rng = np.random.default_rng(seed)
    start_set = [np.asarray(s, dtype=np.complex128) for s in starts or ()]
    if any(s.shape != (degree,) for s in start_set):
        raise InvalidParameterError(f"every start needs exactly {degree} zeros")
    start_set += _start_set(alpha, beta, degree, n_starts, rng, real_only=real_only)

    def project(z: ComplexArray) -> ComplexArray:
        return z.real.astype(np.complex128) if real_only else z

    def fun(z: ComplexArray) -> tuple[ComplexArray, FloatArray]:
        residual, scale, _ = _residual_and_jacobian(project(z), alpha, beta, k)
        return residual, scale

    def jac(z: ComplexArray) -> ComplexArray:
        return _residual_and_jacobian(project(z), alpha, beta, k)[2]

    failures: Counter[str] = Counter()
    found: list[NivenConfiguration] = []
    converged = 0
    for z0 in start_set:
        # iterate past `tol` so the reported norm sits well inside it
        res = newton(fun, jac, z0, rtol=tol * 1e-3, maxiter=max_iter)
        z = project(np.asarray(res.x, dtype=np.complex128))
        if not res.success:
            failures[str(res.message)] += 1
            continue

        try:
            residual = niven_residual(
                z, alpha, beta, dim, ell, separation_tol=separation_tol
            )
        except SingularConfigurationError as e:
            failures[str(e)] += 1
            continue

        norm = float(np.max(np.abs(residual)))
        scale = float(np.max(_residual_and_jacobian(z, alpha, beta, k)[1]))
        if norm > tol * max(1.0, scale):
            failures["residual above tolerance"] += 1
            continue

        converged += 1
        z = _canonical(z)
        z_real = bool(np.all(np.abs(z.imag) <= _REAL_TOL * _scale(z)))
        if z_real:
            z = z.real.astype(np.complex128)
        if any(_same_multiset(z, c.array, dedup_tol) for c in found):
            continue
        found.append(NivenConfiguration(tuple(complex(x) for x in z), norm, z_real))

    if not found:
        logger.warning(
            "no Niven configuration converged from %d starts", len(start_set)
        )
    return NivenSearch(tuple(found), len(start_set), converged, dict(failures))


def polynomial_from_zeros(
    config: NivenConfiguration | Sequence[complex],
    /,
    imag_tol: float = _REAL_TOL,
) -> FloatArray | ComplexArray:
    """
    Ascending coefficients of the monic `prod_i (r - r_i)`; real (float) when the
    imaginary parts cancel, complex otherwise.

    >>> polynomial_from_zeros([1.0, -1.0]).tolist()
    [-1.0, 0.0, 1.0]
    >>> polynomial_from_zeros([]).tolist()
    [1.0]
    """
    zeros = config.zeros if isinstance(config, NivenConfiguration) else tuple(config)
    if not zeros:
        return np.ones(1)

    coeffs = npp.polyfromroots(np.asarray(zeros, dtype=np.complex128))
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if np.all(np.abs(coeffs.imag) <= imag_tol * scale):
        # `+ 0.0` drops negative zeros
        return coeffs.real + 0.0
    logger.debug("complex polynomial coefficients for zeros %s", zeros)
    return coeffs


def energy_from_zeros(
    config: NivenConfiguration | Sequence[complex],
    /,
    alpha: float,
    beta: float,
) -> complex:
    """
    `E = -alpha^2 / 2 + beta sum_i r_i`: the `beta`-constraint with
    `b_{m-1} / b_m = -sum_i r_i` for the monic polynomial.

    >>> energy_from_zeros([1.0], -1.0, 1.0)
    (0.5+0j)
    """
    zeros = config.zeros if isinstance(config, NivenConfiguration) else tuple(config)
    return complex(-(alpha**2) / 2 + beta * sum(zeros, 0j))


def _consistency_terms(
    coeffs: npt.ArrayLike,
    alpha: float,
    beta: float,
    energy: complex,
    dim: int,
    ell: int,
    degree: int,
) -> list[npp.Polynomial]:
    k = dim + 2 * ell - 1
    mu = 2 * energy + alpha**2
    phi = npp.Polynomial(np.asarray(coeffs))
    r = npp.Polynomial([0, 1])
    return [
        -r * phi.deriv(2),
        (2 * beta * r**3 + 2 * alpha * r - k) * phi.deriv(1),
        (-2 * degree * beta * r**2 - mu * r + k * alpha) * phi,
    ]


def consistency_check(
    coeffs: npt.ArrayLike,
    /,
    alpha: float,
    beta: float,
    energy: complex,
    dim: int,
    ell: int,
    degree: int,
) -> FloatArray | ComplexArray:
    """
    Ascending coefficients (`degree + 3` of them) of the left-hand side of the ODE
    for `Phi`, with `lambda1` on its quantized value. A configuration is globally
    valid iff all of them vanish.
    """
    terms = _consistency_terms(coeffs, alpha, beta, energy, dim, ell, degree)
    total = sum(terms, npp.Polynomial([0]))
    out = np.zeros(degree + 3, dtype=np.result_type(total.coef, np.float64))
    out[: min(total.coef.size, degree + 3)] = total.coef[: degree + 3]
    return out


def is_consistent(
    coeffs: npt.ArrayLike,
    /,
    alpha: float,
    beta: float,
    energy: complex,
    dim: int,
    ell: int,
    degree: int,
    *,
    tol: float = DEFAULT_NIVEN_TOL,
) -> bool:
    """`consistency_check` relative to the largest coefficient of its terms."""
    terms = _consistency_terms(coeffs, alpha, beta, energy, dim, ell, degree)
    scale = max(float(np.max(np.abs(t.coef), initial=0.0)) for t in terms)
    residual = consistency_check(coeffs, alpha, beta, energy, dim, ell, degree)
    return bool(np.max(np.abs(residual)) <= tol * max(scale, np.finfo(np.float64).tiny))


def configuration_from_coeffs(
    coeffs: npt.ArrayLike,
    /,
    alpha: float,
    beta: float,
    dim: int,
    ell: int,
) -> NivenConfiguration:
    """The zeros of `Phi` by companion-matrix eigenvalues, as a configuration."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=np.float64), "b")
    z = _canonical(np.asarray(npp.polyroots(c), dtype=np.complex128))
    residual = niven_residual(z, alpha, beta, dim, ell) if z.size else np.zeros(0)
    z_real = bool(np.all(np.abs(z.imag) <= _REAL_TOL * _scale(z)))
    return NivenConfiguration(
        tuple(complex(x) for x in z),
        float(np.max(np.abs(residual), initial=0.0)),
        z_real,
    )


def electrostatic_energy(
    zeros: Sequence[float] | FloatArray,
    /,
    alpha: float,
    beta: float,
    dim: int,
    ell: int,
) -> float:
    """
    `W = sum_{i<j} 2 ln|r_i - r_j| + sum_i [k ln|r_i| - 2 alpha r_i - 2/3 beta r_i^3]`
    with `k = N + 2l - 1`; its gradient is the Niven residual.
    """
    r = np.asarray(zeros, dtype=np.float64)
    k = dim + 2 * ell - 1
    i, j = np.triu_indices(r.size, 1)
    w = 2 * float(np.sum(np.log(np.abs(r[i] - r[j]))))
    if k:
        w += k * float(np.sum(np.log(np.abs(r))))
    return w + float(np.sum(-2 * alpha * r - 2 * beta * r**3 / 3))
