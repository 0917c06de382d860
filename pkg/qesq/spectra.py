"""
Quasi-exact spectra.

- `N = 1`: the eigenvalues `mu = 2E + alpha^2` of the non-symmetric matrix `P`;
  complex ones are discarded.
- `N > 1`: `b_1 = alpha b_0` fixes the coefficient chain, and the two remaining
  rows of `F` are a 2 x 2 polynomial system in `(E, beta)`, solved by a
  multistart Newton iteration with an analytic Jacobian.
- closed forms for `m = 1, 2`, used as warm starts and regression fixtures.
- projection onto the span of the physical eigenvectors.
"""

import dataclasses
import logging
import math
from collections.abc import Sequence
from typing import Final, final

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ._newton import newton
from ._types import ComplexArray, FloatArray, MatrixKind, Method
from .exceptions import (
    ConvergenceError,
    DegenerateParameterError,
    InvalidParameterError,
)
from .matrices import (
    BandedMatrix,
    build_F,
    build_P,
    recurrence_coeffs,
    relative_residual,
)
from .model import (
    DEFAULT_IMAG_TOL,
    AnsatzParams,
    OscillatorSpec,
    QesSolution,
    potential_from_params,
    validate_physicality,
)

__all__ = (
    "DEFAULT_VALIDATION_TOL",
    "MultistartConfig",
    "Projector",
    "Rejection",
    "SpectralResult",
    "build_projector",
    "closed_form_m1",
    "closed_form_m2",
    "closed_form_n1",
    "coefficient_chain",
    "physical_projector",
    "projected_solve",
    "projected_spectrum",
    "residual_pair",
    "solve_n1",
    "solve_ngt1",
)

logger: Final = logging.getLogger(__name__)

DEFAULT_VALIDATION_TOL: Final = 1e-10

_REASON_COMPLEX: Final = "complex energy"
_REASON_BETA: Final = "non-positive beta"
_REASON_RESIDUAL: Final = "failed revalidation"


@final
@dataclasses.dataclass(frozen=True, slots=True)
class Rejection:
    energy: complex
    reason: str
    # real candidates (e.g. a beta < 0 branch) are kept for reporting
    solution: QesSolution | None = None


@final
@dataclasses.dataclass(frozen=True, slots=True)
class SpectralResult:
    dim: int
    ell: int
    degree: int
    alpha: float
    method: Method
    solutions: tuple[QesSolution, ...] = ()
    rejected: tuple[Rejection, ...] = ()
    # start-set provenance of the Newton solver
    starts: int = 0
    converged: int = 0

    @property
    def energies(self, /) -> tuple[float, ...]:
        return tuple(s.energy for s in self.solutions)

    def potential(self, solution: QesSolution, /) -> OscillatorSpec:
        """The potential for which `solution` is a quasi-exact level."""
        params = AnsatzParams(self.alpha, solution.beta)
        return potential_from_params(params, self.dim, self.ell, self.degree)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class Projector:
    matrix: FloatArray
    # orthonormal columns spanning the range
    basis: FloatArray

    @property
    def dim(self, /) -> int:
        return int(self.matrix.shape[0])

    @property
    def rank(self, /) -> int:
        return int(self.basis.shape[1])


@final
@dataclasses.dataclass(frozen=True, slots=True)
class MultistartConfig:
    starts: int = 25
    # half-width of the start grid in units of alpha^2 (N + 2l + m), resp.
    # |alpha|^3 (N + 2l + m)
    spread: float = 2.0
    max_iter: int = 100
    rtol: float = 1e-12
    cluster_rtol: float = 1e-6
    # uniform jitter as a fraction of a grid cell
    jitter: float = 0.05
    seed: int = 42

    def __post_init__(self, /) -> None:
        if self.starts < 1:
            raise InvalidParameterError("at least one start is required")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be positive")


def _check_alpha(alpha: float, /) -> None:
    if alpha == 0:
        raise DegenerateParameterError("alpha = 0 is excluded from the ansatz")


def _check_ngt1(dim: int, ell: int, degree: int, /) -> None:
    if dim < 1 or ell < 0:
        raise InvalidParameterError(f"invalid (dim, ell) = ({dim}, {ell})")
    if dim + 2 * ell <= 1:
        raise InvalidParameterError("N + 2l > 1 required; use the N = 1 solver")
    if degree < 1:
        raise InvalidParameterError("N > 1 requires degree >= 1")


def _normalized(v: npt.ArrayLike, /) -> FloatArray:
    b = np.real(np.asarray(v)).astype(np.float64)
    pivot = b[0]
    if abs(pivot) <= 1e-12 * float(np.max(np.abs(b))):
        # Phi(0) = 0: scale by the largest coefficient instead
        pivot = b[int(np.argmax(np.abs(b)))]
    return b / pivot


def _make_solution(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
    coeffs: FloatArray,
    /,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
) -> QesSolution:
    f = build_F(dim, ell, degree, alpha, beta, energy)
    return QesSolution(
        energy=float(energy),
        coeffs=tuple(float(x) for x in coeffs),
        beta=float(beta),
        physical=validate_physicality(AnsatzParams(alpha, beta), energy, imag_tol),
        residual=relative_residual(f, coeffs),
    )


def _eigen_solutions(
    mus: ComplexArray,
    vectors: npt.NDArray[np.complexfloating] | FloatArray,
    /,
    *,
    alpha: float,
    beta: float,
    degree: int,
    imag_tol: float,
    validation_tol: float,
) -> tuple[list[QesSolution], list[Rejection]]:
    params = AnsatzParams(alpha, beta)
    solutions: list[QesSolution] = []
    rejected: list[Rejection] = []

    for mu, v in zip(mus, np.asarray(vectors).T, strict=True):
        energy = complex((mu - alpha**2) / 2)
        if not validate_physicality(params, energy, imag_tol):
            logger.debug("discarding complex energy %s", energy)
            rejected.append(Rejection(energy, _REASON_COMPLEX))
            continue

        b = _normalized(np.real(v))
        solution = _make_solution(
            1, 0, degree, alpha, beta, energy.real, b, imag_tol=imag_tol
        )
        if solution.residual > validation_tol:
            logger.warning(
                "E = %.17g fails revalidation (%.3g)", energy.real, solution.residual
            )
            rejected.append(Rejection(energy, _REASON_RESIDUAL, solution))
        else:
            solutions.append(solution)

    solutions.sort(key=lambda s: s.energy)
    return solutions, rejected


def solve_n1(
    degree: int,
    alpha: float,
    beta: float,
    /,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL,
) -> SpectralResult:
    """Solve `P v = (2E + alpha^2) v`, keeping the real eigenvalues only."""
    _check_alpha(alpha)
    if not beta > 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")

    p = build_P(degree, alpha, beta)
    try:
        mus, vectors = scipy.linalg.eig(p.entries)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigensolver failed: {e}") from e
    if not np.all(np.isfinite(mus)):
        raise ConvergenceError("eigensolver returned non-finite eigenvalues")

    solutions, rejected = _eigen_solutions(
        mus,
        vectors,
        alpha=alpha,
        beta=beta,
        degree=degree,
        imag_tol=imag_tol,
        validation_tol=validation_tol,
    )
    return SpectralResult(
        dim=1,
        ell=0,
        degree=degree,
        alpha=alpha,
        method=Method.EIGEN_N1,
        solutions=tuple(solutions),
        rejected=tuple(rejected),
    )


def _chain(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """`b`, `db/dE` and `db/dbeta`, all from the same forward recurrence."""
    m = degree
    # two leading zeros stand in for b_{-2} and b_{-1}
    b, b_e, b_beta = np.zeros(m + 3), np.zeros(m + 3), np.zeros(m + 3)
    b[2] = 1.0

    for s in range(m):
        rc = recurrence_coeffs(s, dim, ell, degree, alpha, beta, energy)
        j = s + 2
        b[j + 1] = -(rc.b * b[j] + rc.c * b[j - 1] + rc.d * b[j - 2]) / rc.a
        b_e[j + 1] = -(
            rc.b * b_e[j] + rc.c * b_e[j - 1] - 2 * b[j - 1] + rc.d * b_e[j - 2]
        ) / rc.a
        b_beta[j + 1] = -(
            rc.b * b_beta[j]
            + rc.c * b_beta[j - 1]
            + rc.d * b_beta[j - 2]
            + 2 * (s - 2 - m) * b[j - 2]
        ) / rc.a

    return b[2:], b_e[2:], b_beta[2:]


def coefficient_chain(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
) -> FloatArray:
    """
    `b_0 = 1` and rows `0..m-1` of the recurrence solved forward for `b_{s+1}`.

    >>> coefficient_chain(3, 0, 1, -1.0, 2.0, 1.5).tolist()
    [1.0, -1.0]
    """
    if dim + 2 * ell <= 1:
        raise InvalidParameterError("the forward chain requires N + 2l > 1")
    return _chain(dim, ell, degree, alpha, beta, energy)[0]


def _pair_system(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    energy: float,
    beta: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Residuals `(g1, g2)`, the magnitudes of their terms, and the Jacobian."""
    m = degree
    b, b_e, b_beta = _chain(dim, ell, degree, alpha, beta, energy)
    rc = recurrence_coeffs(m, dim, ell, degree, alpha, beta, energy)
    mu = 2 * energy + alpha**2

    def at(x: FloatArray, j: int) -> float:
        return float(x[j]) if j >= 0 else 0.0

    g1_terms = rc.b * b[m], rc.c * b[m - 1], rc.d * at(b, m - 2)
    g2_terms = mu * b[m], 2 * beta * b[m - 1]

    g = np.array([math.fsum(g1_terms), math.fsum(g2_terms)])
    scale = np.array([sum(map(abs, g1_terms)), sum(map(abs, g2_terms))])
    jac = np.array([
        [
            rc.b * b_e[m] + rc.c * b_e[m - 1] - 2 * b[m - 1] + rc.d * at(b_e, m - 2),
            rc.b * b_beta[m] + rc.c * b_beta[m - 1] + rc.d * at(b_beta, m - 2)
            - 4 * at(b, m - 2),
        ],
        [
            2 * b[m] + mu * b_e[m] + 2 * beta * b_e[m - 1],
            mu * b_beta[m] + 2 * b[m - 1] + 2 * beta * b_beta[m - 1],
        ],
    ])
    return g, scale, jac


def residual_pair(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    /,
    *,
    energy: float,
    beta: float,
) -> tuple[float, float]:
    """
    `g1`: row `m` of the recurrence, `g2`: the `beta`-constraint in product form
    `(2E + alpha^2) b_m + 2 beta b_{m-1}`. Quasi-exact levels are common zeros.

    >>> residual_pair(3, 0, 1, -1.0, energy=1.5, beta=2.0)
    (0.0, 0.0)
    """
    _check_ngt1(dim, ell, degree)
    g, _, _ = _pair_system(dim, ell, degree, alpha, energy, beta)
    return float(g[0]), float(g[1])


def closed_form_n1(
    degree: int,
    alpha: float,
    beta: float,
    /,
) -> tuple[QesSolution, ...]:
    """
    The `N = 1` levels for `degree` 0 and 1, ordered by energy. For `degree = 1`
    the potential needs `lambda2 = alpha beta < 0`.
    """
    _check_alpha(alpha)

    if degree == 0:
        e0 = -(alpha**2) / 2
        return (_make_solution(1, 0, 0, alpha, beta, e0, np.ones(1)),)
    if degree != 1:
        raise InvalidParameterError(f"no N = 1 closed form for degree {degree}")

    lambda2 = alpha * beta
    if not lambda2 < 0:
        raise InvalidParameterError("degree 1 requires lambda2 = alpha * beta < 0")

    q = math.sqrt(-lambda2)
    out: list[QesSolution] = []
    for sign in (-1, 1):
        energy = -(alpha**2) / 2 + sign * q
        b = np.array([1.0, -sign * beta / q])
        out.append(_make_solution(1, 0, 1, alpha, beta, energy, b))
    return tuple(out)


def closed_form_m1(dim: int, ell: int, alpha: float, /) -> QesSolution:
    """
    The single `N > 1` level of degree 1:
    `E = alpha^2 (N + 2l) / 2`, `beta = -(N + 2l + 1) alpha^3 / 2`, `b_1 = alpha b_0`.
    """
    _check_ngt1(dim, ell, 1)
    _check_alpha(alpha)

    n = dim + 2 * ell
    energy = alpha**2 * n / 2
    beta = -(n + 1) * alpha**3 / 2
    b = np.array([1.0, alpha])
    return _make_solution(dim, ell, 1, alpha, beta, energy, b)


def closed_form_m2(
    dim: int,
    ell: int,
    alpha: float,
    /,
) -> tuple[QesSolution, QesSolution]:
    """
    Both degree-2 branches, unfiltered: `(a)` with `+sqrt((n + 1)(9n + 25))` and
    `(b)` with the minus sign, where `n = N + 2l`. For `alpha < 0` only `(b)` has
    `beta > 0`.
    """
    _check_ngt1(dim, ell, 2)
    _check_alpha(alpha)

    n = dim + 2 * ell
    root = math.sqrt((n + 1) * (9 * n + 25))
    out: list[QesSolution] = []
    for sign in (1, -1):
        energy = -(n + 5 + sign * root) * alpha**2 / 8
        b2 = (5 * n + 5 + sign * root) * alpha**2 / (8 * n)
        beta = (n + 1 + sign * root) * (5 * n + 5 + sign * root) * alpha**3 / (64 * n)
        b = np.array([1.0, alpha, b2])
        out.append(_make_solution(dim, ell, 2, alpha, beta, energy, b))

    branch_a, branch_b = out
    return branch_a, branch_b


def _start_set(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    config: MultistartConfig,
) -> list[FloatArray]:
    warm: list[QesSolution] = []
    if degree == 1:
        warm.append(closed_form_m1(dim, ell, alpha))
    elif degree == 2:
        warm.extend(closed_form_m2(dim, ell, alpha))
    starts = [np.array([s.energy, s.beta]) for s in warm]

    width = dim + 2 * ell + degree
    e_half = config.spread * alpha**2 * width
    beta_max = config.spread * abs(alpha) ** 3 * width

    n_e = math.ceil(math.sqrt(config.starts))
    n_beta = math.ceil(config.starts / n_e)
    e_grid = np.linspace(-e_half, e_half, n_e)
    beta_grid = np.linspace(beta_max / n_beta, beta_max, n_beta)
    de = 2 * e_half / max(n_e - 1, 1)
    dbeta = beta_max / n_beta

    rng = np.random.default_rng(config.seed)
    grid = [(e, b) for e in e_grid for b in beta_grid][: config.starts]
    noise = rng.uniform(-1, 1, size=(len(grid), 2)) * config.jitter
    for (e, b), (ne, nb) in zip(grid, noise, strict=True):
        starts.append(np.array([e + ne * de, b + nb * dbeta]))
    return starts


def _same_root(x: FloatArray, y: FloatArray, alpha: float, rtol: float) -> bool:
    e_scale = max(abs(x[0]), abs(y[0]), alpha**2)
    beta_scale = max(abs(x[1]), abs(y[1]), abs(alpha) ** 3)
    return bool(
        abs(x[0] - y[0]) <= rtol * e_scale
        and abs(x[1] - y[1]) <= rtol * beta_scale
    )


def solve_ngt1(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    /,
    config: MultistartConfig | None = None,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL,
) -> SpectralResult:
    """
    Find the isolated common zeros `(E, beta)` of `residual_pair` reachable from
    the start set. Roots with `beta <= 0` are returned in `rejected`.

    Completeness is only guaranteed where closed forms seed the search (`m <= 2`).
    """
    _check_ngt1(dim, ell, degree)
    _check_alpha(alpha)
    config = config or MultistartConfig()

    def fun(x: FloatArray) -> tuple[FloatArray, FloatArray]:
        g, scale, _ = _pair_system(dim, ell, degree, alpha, float(x[0]), float(x[1]))
        return g, scale

    def jac(x: FloatArray) -> FloatArray:
        return _pair_system(dim, ell, degree, alpha, float(x[0]), float(x[1]))[2]

    starts = _start_set(dim, ell, degree, alpha, config)
    roots: list[FloatArray] = []
    for i, x0 in enumerate(starts):
        res = newton(fun, jac, x0, rtol=config.rtol, maxiter=config.max_iter)
        if res.success:
            roots.append(np.asarray(res.x, dtype=np.float64))
        else:
            logger.debug("start %d at %s: %s", i, x0, res.message)

    if not roots:
        raise ConvergenceError(f"none of {len(starts)} Newton starts converged")

    unique: list[FloatArray] = []
    for root in roots:
        if not any(_same_root(root, u, alpha, config.cluster_rtol) for u in unique):
            unique.append(root)

    solutions: list[QesSolution] = []
    rejected: list[Rejection] = []
    for root in unique:
        energy, beta = float(root[0]), float(root[1])
        b = coefficient_chain(dim, ell, degree, alpha, beta, energy)
        solution = _make_solution(
            dim, ell, degree, alpha, beta, energy, b, imag_tol=imag_tol
        )
        if not solution.physical:
            logger.debug("rejecting E = %.17g with beta = %.17g", energy, beta)
            rejected.append(Rejection(complex(energy), _REASON_BETA, solution))
        elif solution.residual > validation_tol:
            logger.warning(
                "E = %.17g fails revalidation (%.3g)", energy, solution.residual
            )
            rejected.append(Rejection(complex(energy), _REASON_RESIDUAL, solution))
        else:
            solutions.append(solution)

    solutions.sort(key=lambda s: s.energy)
    rejected.sort(key=lambda r: r.energy.real)
    return SpectralResult(
        dim=dim,
        ell=ell,
        degree=degree,
        alpha=alpha,
        method=Method.NEWTON_NGT1,
        solutions=tuple(solutions),
        rejected=tuple(rejected),
        starts=len(starts),
        converged=len(roots),
    )


def build_projector(
    values: Sequence[complex] | npt.ArrayLike,
    vectors: npt.ArrayLike,
    /,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
) -> Projector:
    """
    The orthogonal projector onto the span of the columns of `vectors` whose
    corresponding `values` are real.

    Eigenvectors of a non-symmetric matrix are not orthogonal, so the span is
    orthonormalized first; `sum_i v_i v_i^T` itself is not idempotent.
    """
    vals = np.atleast_1d(np.asarray(values, dtype=np.complex128))
    vecs = np.asarray(vectors)
    if vecs.ndim != 2 or vecs.shape[1] != vals.size:
        raise ValueError("expected one vector (column) per value")

    n = vecs.shape[0]
    keep = np.abs(vals.imag) <= imag_tol * np.maximum(1.0, np.abs(vals))
    if not np.any(keep):
        return Projector(np.zeros((n, n)), np.zeros((n, 0)))

    basis = scipy.linalg.orth(np.real(vecs[:, keep]))
    lam = basis @ basis.T
    return Projector((lam + lam.T) / 2, basis)


def physical_projector(
    matrix: BandedMatrix,
    /,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
) -> Projector:
    """Projector onto the eigenvectors of `P` that have a real energy."""
    if matrix.kind is not MatrixKind.P:
        raise ValueError("only P has an eigenbasis; build Q projectors from solutions")

    mus, vectors = scipy.linalg.eig(matrix.entries)
    return build_projector((mus - matrix.alpha**2) / 2, vectors, imag_tol=imag_tol)


def projected_spectrum(matrix: BandedMatrix, projector: Projector, /) -> ComplexArray:
    """All eigenvalues of `L M L`: the physical subset padded with zeros."""
    lam = projector.matrix
    values = scipy.linalg.eigvals(lam @ matrix.entries @ lam)
    order = np.lexsort((values.imag, values.real))
    return np.asarray(values[order], dtype=np.complex128)


def projected_solve(
    matrix: BandedMatrix,
    projector: Projector,
    /,
    *,
    imag_tol: float = DEFAULT_IMAG_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL,
) -> SpectralResult:
    """
    Solve `L P L v = (2E + alpha^2) v`, or `L Q L v = 0`, on the range of `L`.

    On that range both reduce to the small problem in the orthonormal basis `U`,
    i.e. the eigenproblem of `U^T P U` or the null space of `U^T Q U`.
    """
    if matrix.kind is MatrixKind.F:
        raise ValueError("F is not square; project P or Q")

    result = SpectralResult(
        dim=matrix.dim,
        ell=matrix.ell,
        degree=matrix.degree,
        alpha=matrix.alpha,
        method=Method.PROJECTED,
    )
    u = projector.basis
    if not projector.rank:
        return result

    reduced = u.T @ matrix.entries @ u
    if matrix.kind is MatrixKind.P:
        mus, vectors = scipy.linalg.eig(reduced)
        solutions, rejected = _eigen_solutions(
            mus,
            u @ vectors,
            alpha=matrix.alpha,
            beta=matrix.beta,
            degree=matrix.degree,
            imag_tol=imag_tol,
            validation_tol=validation_tol,
        )
        return dataclasses.replace(
            result,
            solutions=tuple(solutions),
            rejected=tuple(rejected),
        )

    assert matrix.energy is not None
    _, sigma, vh = scipy.linalg.svd(reduced)
    threshold = validation_tol * max(1.0, float(np.max(np.abs(matrix.entries))))
    found: list[QesSolution] = []
    for s, c in zip(sigma, vh, strict=True):
        if s > threshold:
            continue
        b = _normalized(u @ c)
        found.append(
            _make_solution(
                matrix.dim,
                matrix.ell,
                matrix.degree,
                matrix.alpha,
                matrix.beta,
                matrix.energy,
                b,
                imag_tol=imag_tol,
            ),
        )
    return dataclasses.replace(result, solutions=tuple(found))
