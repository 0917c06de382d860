"""
The quadri-diagonal matrices of the truncated power-series problem.

Substituting `Phi(r) = sum_j b_j r^j` into the differential equation for `Phi`
(with `lambda1` on its quantized value) and matching powers of `r` gives, for
every `s = 0, ..., m + 1`,

    A(s) b_{s+1} + B(s) b_s + C b_{s-1} + D(s) b_{s-2} = 0,

    A(s) = -(s + 1)(s + N + 2l - 1)
    B(s) = (2s + N + 2l - 1) alpha
    C    = -(2E + alpha^2)
    D(s) = 2 beta (s - 2 - m)

Row `s` of `F` is exactly this identity; `P` and `Q` are views of it.
"""

import dataclasses
from typing import Final, final

import numpy as np

from ._types import FloatArray, MatrixKind

__all__ = (
    "BandedMatrix",
    "RecurrenceCoeffs",
    "build_F",
    "build_P",
    "build_Q",
    "recurrence_coeffs",
    "relative_residual",
)

# (lower, upper) bandwidths: F and Q put the row identity at columns s-2..s+1,
# P is shifted one row up
_BANDWIDTHS: Final = {
    MatrixKind.F: (2, 1),
    MatrixKind.P: (1, 2),
    MatrixKind.Q: (2, 1),
}


@final
@dataclasses.dataclass(frozen=True, slots=True)
class RecurrenceCoeffs:
    """Coefficients of `b_{s+1}`, `b_s`, `b_{s-1}` and `b_{s-2}` in row `s`."""

    a: float
    b: float
    c: float
    d: float


@final
@dataclasses.dataclass(frozen=True, slots=True)
class BandedMatrix:
    kind: MatrixKind
    entries: FloatArray
    dim: int
    ell: int
    degree: int
    alpha: float
    beta: float
    # `None` for P, whose eigenvalues determine the energy
    energy: float | None

    @property
    def rows(self, /) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self, /) -> int:
        return int(self.entries.shape[1])

    @property
    def shape(self, /) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def lower(self, /) -> int:
        return _BANDWIDTHS[self.kind][0]

    @property
    def upper(self, /) -> int:
        return _BANDWIDTHS[self.kind][1]

    def check_bands(self, /) -> bool:
        """Whether all entries outside the four bands are exactly zero."""
        i, j = np.indices(self.shape)
        outside = (j - i > self.upper) | (i - j > self.lower)
        return not np.any(self.entries[outside])

    def tolist(self, /) -> list[list[float]]:
        return [[float(x) for x in row] for row in self.entries]


def _coeffs(
    s: int,
    k: int,
    degree: int,
    alpha: float,
    beta: float,
    mu: float,
) -> RecurrenceCoeffs:
    # k = N + 2l - 1, mu = 2E + alpha^2
    return RecurrenceCoeffs(
        a=float(-(s + 1) * (s + k)),
        b=(2 * s + k) * alpha,
        c=-mu,
        d=2 * beta * (s - 2 - degree),
    )


def recurrence_coeffs(
    s: int,
    /,
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
) -> RecurrenceCoeffs:
    """
    >>> recurrence_coeffs(0, 3, 0, 1, -1.0, 2.0, 1.5)
    RecurrenceCoeffs(a=-2.0, b=-2.0, c=-4.0, d=-12.0)
    """
    if not 0 <= s <= degree + 1:
        raise IndexError(f"row {s} out of range [0, {degree + 1}]")

    mu = 2 * energy + alpha**2
    return _coeffs(s, dim + 2 * ell - 1, degree, alpha, beta, mu)


def _recurrence_rows(
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    mu: float,
) -> FloatArray:
    m, k = degree, dim + 2 * ell - 1
    out = np.zeros((m + 2, m + 1))
    for s in range(m + 2):
        rc = _coeffs(s, k, m, alpha, beta, mu)
        for col, value in ((s - 2, rc.d), (s - 1, rc.c), (s, rc.b), (s + 1, rc.a)):
            if 0 <= col <= m:
                out[s, col] = value

    # drop negative zeros, e.g. `0 * alpha` in the N = 1 top row
    out += 0.0
    return out


def _readonly(entries: FloatArray) -> FloatArray:
    entries.setflags(write=False)
    return entries


def build_F(  # noqa: N802
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
) -> BandedMatrix:
    """The `(m + 2) x (m + 1)` matrix with `F v = 0` iff `Phi` solves the ODE."""
    mu = 2 * energy + alpha**2
    entries = _recurrence_rows(dim, ell, degree, alpha, beta, mu)
    return BandedMatrix(
        MatrixKind.F,
        _readonly(entries),
        dim,
        ell,
        degree,
        alpha,
        beta,
        energy,
    )


def build_P(degree: int, alpha: float, beta: float) -> BandedMatrix:  # noqa: N802
    """
    The `N = 1` eigenproblem `P v = (2E + alpha^2) v`: rows `1..m+1` of `F` at
    `dim = 1`, with the `C` column moved to the eigenvalue side.

    >>> build_P(1, -1.0, 1.0).tolist()
    [[0.0, -2.0], [-2.0, 0.0]]
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")

    entries = _recurrence_rows(1, 0, degree, alpha, beta, 0.0)[1:]
    entries[np.diag_indices(degree + 1)] = 0.0
    return BandedMatrix(
        MatrixKind.P,
        _readonly(entries),
        1,
        0,
        degree,
        alpha,
        beta,
        None,
    )


def build_Q(  # noqa: N802
    dim: int,
    ell: int,
    degree: int,
    alpha: float,
    beta: float,
    energy: float,
) -> BandedMatrix:
    """
    Rows `0..m` of `F`, with the top row divided by `N + 2l - 1` so that it reads
    `(alpha, -1, 0, ...)`. Only defined for `N + 2l > 1`.
    """
    k = dim + 2 * ell - 1
    if k <= 0:
        raise ValueError("Q requires N + 2l > 1; use P for N = 1")

    mu = 2 * energy + alpha**2
    entries = _recurrence_rows(dim, ell, degree, alpha, beta, mu)[:-1]
    entries[0] /= k
    return BandedMatrix(
        MatrixKind.Q,
        _readonly(entries),
        dim,
        ell,
        degree,
        alpha,
        beta,
        energy,
    )


def relative_residual(
    matrix: BandedMatrix | FloatArray,
    vector: FloatArray,
    /,
) -> float:
    """`|M v|_inf / (max(1, |M|_max) |v|_inf)`, or `inf` for a zero vector."""
    entries = matrix.entries if isinstance(matrix, BandedMatrix) else matrix
    v = np.asarray(vector)
    v_norm = float(np.max(np.abs(v), initial=0.0))
    if v_norm == 0:
        return float("inf")

    m_norm = max(1.0, float(np.max(np.abs(entries), initial=0.0)))
    return float(np.max(np.abs(entries @ v), initial=0.0)) / (m_norm * v_norm)
