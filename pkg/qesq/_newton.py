from collections.abc import Callable
from typing import Final

import numpy as np
import numpy.typing as npt
from scipy.optimize import OptimizeResult

__all__ = ("newton",)

_EPS: Final = float(np.finfo(np.float64).eps)
# iterates beyond this multiple of the start magnitude are treated as diverged
_BLOWUP: Final = 1e8

type _Vector = npt.NDArray[np.float64] | npt.NDArray[np.complex128]
type _Residual = Callable[[_Vector], tuple[_Vector, _Vector]]
type _Jacobian = Callable[[_Vector], _Vector]


def newton(
    fun: _Residual,
    jac: _Jacobian,
    x0: _Vector,
    /,
    *,
    rtol: float,
    maxiter: int = 100,
    stall_rtol: float = 1e-8,
) -> OptimizeResult:
    """
    Undamped Newton-Raphson on a square system, real or complex.

    `fun(x)` returns the residual vector together with the per-equation magnitude
    of the terms it was summed from; convergence means `|f_i| <= rtol * scale_i`
    for all `i`. Once the step stalls at rounding level, a residual within
    `stall_rtol` of its scale is accepted as well.

    The result follows `scipy.optimize.OptimizeResult` (`x`, `success`, `fun`,
    `nit`, `message`).
    """
    x = np.array(x0, copy=True)
    size0 = max(float(np.max(np.abs(x), initial=0.0)), 1.0)
    fx = np.full_like(x, np.nan)

    with np.errstate(all="ignore"):
        for nit in range(maxiter + 1):
            fx, scale = fun(x)
            if not np.all(np.isfinite(fx)):
                return _result(x, fx, nit, success=False, message="non-finite residual")

            bound = np.maximum(np.abs(scale), np.finfo(np.float64).tiny)
            if np.all(np.abs(fx) <= rtol * bound):
                return _result(x, fx, nit, success=True, message="converged")
            if nit == maxiter:
                break

            try:
                step = np.linalg.solve(jac(x), -fx)
            except np.linalg.LinAlgError:
                return _result(x, fx, nit, success=False, message="singular jacobian")

            x = x + step
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > _BLOWUP * size0:
                return _result(x, fx, nit, success=False, message="diverged")

            if np.max(np.abs(step)) <= 4 * _EPS * max(float(np.max(np.abs(x))), 1e-300):
                fx, scale = fun(x)
                bound = np.maximum(np.abs(scale), np.finfo(np.float64).tiny)
                ok = bool(np.all(np.abs(fx) <= stall_rtol * bound))
                return _result(x, fx, nit + 1, success=ok, message="stalled")

    return _result(x, fx, maxiter, success=False, message="maximum iterations reached")


def _result(
    x: _Vector,
    fx: _Vector,
    nit: int,
    *,
    success: bool,
    message: str,
) -> OptimizeResult:
    return OptimizeResult(x=x, fun=fx, nit=nit, success=success, message=message)
