"""
Domain types of the O(N)-invariant quartic oscillator

    V(r) = lambda1 r + lambda2 r^2 + lambda4 r^4,

the map between the potential coefficients and the parameters of the ansatz

    R_l(r) = r^l Phi(r) exp(-alpha r - beta r^3 / 3),

and the evaluation of both, with exact derivatives of the radial factor.
"""

import dataclasses
import math
from collections.abc import Sequence
from typing import Final, final, overload

import numpy as np
from numpy.polynomial import polynomial as npp

from ._types import FloatArray, Parity
from .exceptions import DegenerateParameterError, DomainError, InvalidParameterError

__all__ = (
    "DEFAULT_IMAG_TOL",
    "AnsatzParams",
    "OscillatorSpec",
    "QesSolution",
    "WavefunctionSample",
    "evaluate_ansatz",
    "evaluate_potential",
    "full_line_sample",
    "origin_mismatch",
    "params_from_potential",
    "potential_coefficients",
    "potential_from_params",
    "radial_factor",
    "validate_physicality",
)

DEFAULT_IMAG_TOL: Final = 1e-9
_QUANTIZATION_RTOL: Final = 1e-12


@final
@dataclasses.dataclass(frozen=True, slots=True)
class OscillatorSpec:
    dim: int
    ell: int
    degree: int
    lambda1: float
    lambda2: float
    lambda4: float

    def __post_init__(self, /) -> None:
        if self.dim < 1:
            raise InvalidParameterError(f"dim must be >= 1, got {self.dim}")
        if self.ell < 0:
            raise InvalidParameterError(f"ell must be >= 0, got {self.ell}")
        if self.degree < 0:
            raise InvalidParameterError(f"degree must be >= 0, got {self.degree}")
        if self.dim == 1 and self.ell != 0:
            raise InvalidParameterError("dim = 1 requires ell = 0")
        if not self.lambda4 > 0:
            raise InvalidParameterError(f"lambda4 must be > 0, got {self.lambda4}")

    @property
    def dim_eff(self, /) -> int:
        """`N + 2l`, the only combination of `N` and `l` in the radial problem."""
        return self.dim + 2 * self.ell

    @property
    def quasi_exact(self, /) -> bool:
        """Whether `lambda1` truncates `Phi` to a polynomial of degree `degree`."""
        beta = math.sqrt(2 * self.lambda4)
        expect = -(self.dim_eff + 2 * self.degree + 1) * beta / 2
        return math.isclose(self.lambda1, expect, rel_tol=_QUANTIZATION_RTOL)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class AnsatzParams:
    alpha: float
    beta: float

    @property
    def valid(self, /) -> bool:
        return bool(self.alpha != 0 and self.beta > 0)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class QesSolution:
    energy: float
    coeffs: tuple[float, ...]
    beta: float
    physical: bool
    residual: float = 0.0

    def __post_init__(self, /) -> None:
        if not self.coeffs:
            raise InvalidParameterError("a solution needs at least one coefficient")
        if not self.residual >= 0:
            raise InvalidParameterError("residual must be non-negative")

    @property
    def degree(self, /) -> int:
        return len(self.coeffs) - 1

    @property
    def coefficients(self, /) -> FloatArray:
        return np.asarray(self.coeffs, dtype=np.float64)


@final
@dataclasses.dataclass(frozen=True, slots=True)
class WavefunctionSample:
    r: float
    value: float
    d1: float
    d2: float


def params_from_potential(spec: OscillatorSpec, /) -> AnsatzParams:
    """
    >>> params_from_potential(OscillatorSpec(3, 0, 1, -6.0, -2.0, 2.0))
    AnsatzParams(alpha=-1.0, beta=2.0)
    """
    if not spec.lambda4 > 0:
        raise InvalidParameterError(f"lambda4 must be > 0, got {spec.lambda4}")

    beta = math.sqrt(2 * spec.lambda4)
    alpha = spec.lambda2 / beta
    if alpha == 0:
        raise DegenerateParameterError("lambda2 = 0 gives alpha = 0")
    return AnsatzParams(alpha, beta)


def potential_coefficients(
    alpha: float,
    beta: float,
    /,
    dim: int,
    ell: int,
    degree: int,
) -> tuple[float, float, float]:
    """`(lambda1, lambda2, lambda4)`, without requiring `beta > 0`."""
    lambda1 = -(dim + 2 * ell + 2 * degree + 1) * beta / 2
    return lambda1, alpha * beta, beta * beta / 2


def potential_from_params(
    params: AnsatzParams,
    /,
    dim: int,
    ell: int,
    degree: int,
) -> OscillatorSpec:
    """
    >>> potential_from_params(AnsatzParams(-1.0, 2.0), 3, 0, 1)
    OscillatorSpec(dim=3, ell=0, degree=1, lambda1=-6.0, lambda2=-2.0, lambda4=2.0)
    """
    if not params.beta > 0:
        raise InvalidParameterError(f"beta must be > 0, got {params.beta}")

    coeffs = potential_coefficients(params.alpha, params.beta, dim, ell, degree)
    return OscillatorSpec(dim, ell, degree, *coeffs)


@overload
def evaluate_potential(spec: OscillatorSpec, r: float, /) -> float: ...
@overload
def evaluate_potential(spec: OscillatorSpec, r: FloatArray, /) -> FloatArray: ...
def evaluate_potential(
    spec: OscillatorSpec,
    r: float | FloatArray,
    /,
) -> float | FloatArray:
    """
    For `dim = 1`, negative `r` evaluates the parity-symmetric extension to the
    full line, i.e. `lambda1 |x| + lambda2 x^2 + lambda4 x^4`.
    """
    x = np.asarray(r, dtype=np.float64)
    if spec.dim > 1 and np.any(x < 0):
        raise DomainError(f"negative radius for dim = {spec.dim}")

    # the odd term flips sign on the negative half-line
    v = spec.lambda1 * np.abs(x) + spec.lambda2 * x**2 + spec.lambda4 * x**4
    return float(v) if v.ndim == 0 else v


def _radial_polynomial(coeffs: Sequence[float] | FloatArray, ell: int, /) -> FloatArray:
    # r^l Phi(r) as one ascending coefficient vector
    return np.concatenate([np.zeros(ell), np.asarray(coeffs, dtype=np.float64)])


def radial_factor(
    params: AnsatzParams,
    coeffs: Sequence[float] | FloatArray,
    ell: int,
    r: FloatArray,
    /,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    `R_l`, `R_l'` and `R_l''` on an array of radii, differentiated analytically.

    With `p(r) = r^l Phi(r)` and `s(r) = -alpha r - beta r^3 / 3`:

        R   = p e^s
        R'  = (p' + p s') e^s
        R'' = (p'' + 2 p' s' + p (s'' + s'^2)) e^s
    """
    alpha, beta = params.alpha, params.beta
    x = np.asarray(r, dtype=np.float64)

    c0 = _radial_polynomial(coeffs, ell)
    c1 = npp.polyder(c0)
    c2 = npp.polyder(c1)
    p0, p1, p2 = npp.polyval(x, c0), npp.polyval(x, c1), npp.polyval(x, c2)

    s1 = -alpha - beta * x**2
    s2 = -2 * beta * x
    # beta <= 0 overflows for large r
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        e = np.exp(-alpha * x - beta * x**3 / 3)
        return p0 * e, (p1 + p0 * s1) * e, (p2 + 2 * p1 * s1 + p0 * (s2 + s1**2)) * e


def evaluate_ansatz(
    params: AnsatzParams,
    solution: QesSolution,
    /,
    ell: int,
    r: float,
) -> WavefunctionSample:
    if r < 0:
        raise DomainError(f"the radial ansatz is defined for r >= 0, got {r}")

    value, d1, d2 = radial_factor(params, solution.coeffs, ell, np.array([r]))
    return WavefunctionSample(float(r), float(value[0]), float(d1[0]), float(d2[0]))


def validate_physicality(
    params: AnsatzParams,
    energy: complex,
    /,
    imag_tol: float = DEFAULT_IMAG_TOL,
) -> bool:
    """
    >>> validate_physicality(AnsatzParams(-1.0, 1.0), 0.5)
    True
    >>> validate_physicality(AnsatzParams(-1.0, 1.0), 0.5 + 0.3j)
    False
    """
    e = complex(energy)
    return bool(abs(e.imag) <= imag_tol * max(1.0, abs(e))) and params.valid


def full_line_sample(
    params: AnsatzParams,
    solution: QesSolution,
    /,
    x: float,
    parity: Parity = "even",
) -> WavefunctionSample:
    """
    Evaluate the `dim = 1` half-line solution extended to `x < 0` as an even or
    odd function. Smoothness at the origin is not checked here, see
    `origin_mismatch`.
    """
    sample = evaluate_ansatz(params, solution, 0, abs(x))
    if x >= 0:
        return sample

    sign = 1.0 if parity == "even" else -1.0
    # d/dx f(-x) = -f'(-x)
    return WavefunctionSample(
        x,
        sign * sample.value,
        -sign * sample.d1,
        sign * sample.d2,
    )


def origin_mismatch(
    params: AnsatzParams,
    solution: QesSolution,
    /,
) -> tuple[float, float]:
    """
    `(R(0), R'(0))`: the even extension is continuously differentiable iff the
    second entry vanishes, the odd extension iff the first one does.
    """
    sample = evaluate_ansatz(params, solution, 0, 0.0)
    return sample.value, sample.d1
