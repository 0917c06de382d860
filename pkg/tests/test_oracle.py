import math

import numpy as np
import pytest
from qesq._types import Verdict
from qesq.exceptions import DomainError, InvalidParameterError
from qesq.model import (
    AnsatzParams,
    OscillatorSpec,
    QesSolution,
    evaluate_potential,
    potential_coefficients,
    potential_from_params,
)
from qesq.oracle import (
    OracleConfig,
    RadialGrid,
    fd_spectrum,
    norm_integral,
    ode_residual,
    radial_fd_spectrum,
    verify,
)
from qesq.spectra import Rejection, closed_form_m1, closed_form_m2, solve_ngt1

# V = -6 r - 2 r^2 + 2 r^4 in three dimensions, E = 3/2
_SPEC_3D: OscillatorSpec = OscillatorSpec(3, 0, 1, -6.0, -2.0, 2.0)
_PARAMS_3D: AnsatzParams = AnsatzParams(-1.0, 2.0)
_SOLUTION_3D: QesSolution = QesSolution(1.5, (1.0, -1.0), 2.0, physical=True)

_PARAMS_1D: AnsatzParams = AnsatzParams(-1.0, 1.0)
_SPEC_1D: OscillatorSpec = potential_from_params(_PARAMS_1D, 1, 0, 0)
_SOLUTION_1D: QesSolution = QesSolution(-0.5, (1.0,), 1.0, physical=True)

_GRID: RadialGrid = RadialGrid(6.0, 4000)


def test_grid_invalid():
    with pytest.raises(InvalidParameterError):
        RadialGrid(6.0, 99)
    with pytest.raises(InvalidParameterError):
        RadialGrid(0.0, 1000)


def test_grid_nodes():
    grid = RadialGrid(2.0, 200)
    assert grid.spacing == pytest.approx(0.01)
    assert grid.nodes.size == 201
    assert grid.centers.size == 200
    assert grid.centers[0] == pytest.approx(0.005)
    assert grid.extended(2.0) == RadialGrid(4.0, 400)


def test_grid_for_energy():
    assert RadialGrid.for_energy(_SPEC_3D, 1.5).r_max == 6.0

    # 2 r^4 - 2 r^2 - 6 r = 1000 near r = 4.8
    wide = RadialGrid.for_energy(_SPEC_3D, 1000.0)
    assert wide.r_max > 7.0
    assert wide.points == 4000


def test_ode_residual_exact():
    assert ode_residual(_SPEC_3D, _PARAMS_3D, _SOLUTION_3D, _GRID) <= 1e-10
    assert ode_residual(_SPEC_1D, _PARAMS_1D, _SOLUTION_1D, _GRID) <= 1e-10


def test_ode_residual_wrong_energy():
    wrong = QesSolution(1.6, (1.0, -1.0), 2.0, physical=True)
    residual = ode_residual(_SPEC_3D, _PARAMS_3D, wrong, _GRID)
    assert residual == pytest.approx(0.1, rel=1e-6)


def test_ode_residual_scaling():
    t = 1.7
    spec = OscillatorSpec(3, 0, 1, -6.0 * t**3, -2.0 * t**4, 2.0 * t**6)
    params = AnsatzParams(-t, 2.0 * t**3)
    solution = QesSolution(1.5 * t**2, (1.0, -t), 2.0 * t**3, physical=True)
    grid = RadialGrid(6.0 / t, 4000)

    assert ode_residual(spec, params, solution, grid) <= 1e-10 * t**2


def test_fd_spectrum_quasi_exact_level():
    spectrum = fd_spectrum(_SPEC_3D, _GRID, 5)
    levels = np.array(spectrum.eigenvalues)

    assert levels.size == 5
    assert np.all(np.diff(levels) >= 0)
    assert np.min(np.abs(levels - 1.5)) <= 1e-3
    assert spectrum.converged
    assert spectrum.error_estimate <= 1e-3


def test_fd_spectrum_extrapolated():
    spectrum = fd_spectrum(_SPEC_3D, _GRID, 5)
    fine = np.array(spectrum.eigenvalues)
    extrapolated = np.array(spectrum.extrapolated)

    np.testing.assert_allclose(extrapolated, fine + (fine - spectrum.coarse) / 3)
    assert np.min(np.abs(extrapolated - 1.5)) <= 1e-6


# N = 2, l = 0 has the critical -1/(8 r^2) term in the reduced equation
@pytest.mark.parametrize("dim", [2, 3])
def test_fd_spectrum_second_order(dim: int):
    solution = closed_form_m1(dim, 0, -1.0)
    spec = potential_from_params(AnsatzParams(-1.0, solution.beta), dim, 0, 1)

    def potential(r: np.ndarray) -> np.ndarray:
        return evaluate_potential(spec, r)

    errors = []
    for points in (1000, 2000):
        levels = radial_fd_spectrum(potential, dim, 0, RadialGrid(6.0, points), 5)
        errors.append(np.min(np.abs(levels - solution.energy)))

    assert errors[1] <= 1e-4
    assert errors[0] / errors[1] >= 3.0


@pytest.mark.parametrize(
    ("dim", "ell", "expect"),
    [
        (2, 0, [2.0, 6.0, 10.0]),
        (2, 1, [4.0, 8.0, 12.0]),
        (3, 0, [3.0, 7.0, 11.0]),
        (3, 1, [5.0, 9.0, 13.0]),
    ],
)
def test_fd_spectrum_harmonic(dim: int, ell: int, expect: list[float]):
    # V = omega^2 r^2 / 2 with omega = 2: E = omega (2n + l + N/2)
    def potential(r: np.ndarray) -> np.ndarray:
        return 2 * r**2

    levels = radial_fd_spectrum(potential, dim, ell, RadialGrid(8.0, 4000), 3)
    np.testing.assert_allclose(levels, expect, atol=1e-3)


def test_fd_spectrum_invalid():
    with pytest.raises(DomainError):
        fd_spectrum(_SPEC_1D, _GRID)
    with pytest.raises(InvalidParameterError):
        fd_spectrum(_SPEC_3D, RadialGrid(6.0, 100), 11)


def test_norm_integral():
    norm = norm_integral(_PARAMS_3D, _SOLUTION_3D, 0, 3, _GRID)
    assert math.isfinite(norm)
    assert norm > 0


def test_norm_integral_non_normalizable():
    params = AnsatzParams(-1.0, -0.5)
    assert norm_integral(params, _SOLUTION_3D, 0, 3, _GRID) == math.inf


def test_norm_integral_r_max_independent():
    short = norm_integral(_PARAMS_1D, _SOLUTION_1D, 0, 1, _GRID)
    long = norm_integral(_PARAMS_1D, _SOLUTION_1D, 0, 1, _GRID.extended(2.0))
    assert long == pytest.approx(short, rel=1e-10)


def test_norm_integral_extends_grid():
    reference = norm_integral(_PARAMS_1D, _SOLUTION_1D, 0, 1, _GRID)
    extended = norm_integral(_PARAMS_1D, _SOLUTION_1D, 0, 1, RadialGrid(1.0, 100))
    assert extended == pytest.approx(reference, rel=1e-6)


def test_verify_confirmed():
    report = verify(_SPEC_3D, _PARAMS_3D, _SOLUTION_3D)

    assert report.verdict is Verdict.CONFIRMED
    assert report.matched_index is not None
    assert 0 <= report.matched_index < 5
    assert report.match_error is not None
    assert report.match_error <= 1e-3
    assert report.ode_residual_max <= 1e-8


def test_verify_wrong_energy():
    wrong = QesSolution(1.6, (1.0, -1.0), 2.0, physical=True)
    assert verify(_SPEC_3D, _PARAMS_3D, wrong).verdict is Verdict.UNMATCHED


def test_verify_complex_rejection():
    report = verify(_SPEC_3D, _PARAMS_3D, Rejection(1.5 + 0.5j, "complex energy"))
    assert report.verdict is Verdict.UNMATCHED
    assert report.fd_eigenvalues == ()


def test_verify_n1_skips_fd():
    report = verify(_SPEC_1D, _PARAMS_1D, _SOLUTION_1D)
    assert report.verdict is Verdict.CONFIRMED
    assert report.fd_eigenvalues == ()
    assert report.matched_index is None
    assert report.match_error is None


def test_verify_negative_beta():
    branch_a, _ = closed_form_m2(3, 0, -1.0)
    assert branch_a.beta < 0

    params = AnsatzParams(-1.0, branch_a.beta)
    lambdas = potential_coefficients(-1.0, branch_a.beta, 3, 0, 2)
    spec = OscillatorSpec(3, 0, 2, *lambdas)
    report = verify(spec, params, branch_a, OracleConfig(points=1000))
    assert report.verdict is Verdict.NON_NORMALIZABLE


@pytest.mark.parametrize("degree", [1, 2])
@pytest.mark.parametrize("dim", [2, 3, 5])
@pytest.mark.parametrize("ell", [0, 1, 2])
@pytest.mark.parametrize("alpha", [-0.5, -1.0, -2.0])
def test_verify_physical_solutions(degree: int, dim: int, ell: int, alpha: float):
    result = solve_ngt1(dim, ell, degree, alpha)
    assert result.solutions

    for solution in result.solutions:
        spec = result.potential(solution)
        params = AnsatzParams(alpha, solution.beta)
        report = verify(spec, params, solution)
        assert report.verdict is Verdict.CONFIRMED, report
        assert report.match_error is not None
        assert report.match_error <= 1e-3
