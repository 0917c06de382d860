import dataclasses
import json
import math

import numpy as np
import pytest
from qesq._types import Method
from qesq.exceptions import DegenerateParameterError, InvalidParameterError
from qesq.matrices import build_P, build_Q
from qesq.spectra import (
    MultistartConfig,
    Rejection,
    build_projector,
    closed_form_m1,
    closed_form_m2,
    closed_form_n1,
    coefficient_chain,
    physical_projector,
    projected_solve,
    projected_spectrum,
    residual_pair,
    solve_n1,
    solve_ngt1,
)


@pytest.mark.parametrize("alpha", [-0.5, -1.0, -2.0])
def test_n1_ground_state(alpha: float):
    result = solve_n1(0, alpha, 1.0)
    assert result.method is Method.EIGEN_N1
    assert len(result.solutions) == 1
    assert result.solutions[0].energy == pytest.approx(-(alpha**2) / 2, abs=1e-12)
    assert result.solutions[0].coeffs == (1.0,)


def test_n1_degree_one():
    result = solve_n1(1, -1.0, 1.0)
    energies = [s.energy for s in result.solutions]
    assert energies == pytest.approx([-1.5, 0.5], abs=1e-10)

    ratios = [s.coeffs[1] / s.coeffs[0] for s in result.solutions]
    assert ratios == pytest.approx([1.0, -1.0], abs=1e-10)
    assert all(s.physical for s in result.solutions)
    assert not result.rejected


def test_n1_degree_two_cubic():
    # det(P - mu) = -(mu^3 - 16 mu + 16) for alpha = -1, beta = 1
    mus = np.sort(np.roots([1.0, 0.0, -16.0, 16.0]).real)
    result = solve_n1(2, -1.0, 1.0)
    np.testing.assert_allclose(result.energies, (mus - 1) / 2, atol=1e-10)


def test_n1_closed_form_agrees():
    expect = closed_form_n1(1, -1.3, 0.7)
    result = solve_n1(1, -1.3, 0.7)
    for closed, solved in zip(expect, result.solutions, strict=True):
        assert solved.energy == pytest.approx(closed.energy, rel=1e-12)
        np.testing.assert_allclose(solved.coefficients, closed.coefficients, rtol=1e-12)


def test_n1_complex_pair_rejected():
    # lambda2 = alpha beta > 0
    result = solve_n1(1, 1.0, 1.0)
    assert not result.solutions
    assert len(result.rejected) == 2
    assert all(r.reason == "complex energy" for r in result.rejected)
    assert all(r.solution is None for r in result.rejected)


@pytest.mark.parametrize("degree", [1, 2, 4])
def test_n1_solutions_are_null_vectors(degree: int):
    result = solve_n1(degree, -1.0, 1.0)
    assert result.solutions
    assert all(s.residual <= 1e-10 for s in result.solutions)


def test_n1_invalid():
    with pytest.raises(InvalidParameterError):
        solve_n1(1, -1.0, 0.0)
    with pytest.raises(DegenerateParameterError):
        solve_n1(1, 0.0, 1.0)


def test_closed_form_n1_requires_negative_lambda2():
    with pytest.raises(InvalidParameterError):
        closed_form_n1(1, 1.0, 1.0)


def test_coefficient_chain_m2():
    b = coefficient_chain(3, 0, 2, -1.0, 0.3, 0.8)
    assert b[0] == 1.0
    assert b[1] == pytest.approx(-1.0)


def test_residual_pair():
    assert residual_pair(3, 0, 1, -1.0, energy=1.5, beta=2.0) == (0.0, 0.0)
    g1, g2 = residual_pair(3, 0, 1, -1.0, energy=1.5, beta=1.0)
    assert g1 == 0.0
    assert g2 != 0.0


@pytest.mark.parametrize("dim", [2, 3, 5])
@pytest.mark.parametrize("ell", [0, 1, 2])
@pytest.mark.parametrize("alpha", [-0.5, -1.0, -2.0])
def test_ngt1_degree_one(dim: int, ell: int, alpha: float):
    n = dim + 2 * ell
    result = solve_ngt1(dim, ell, 1, alpha)
    assert result.method is Method.NEWTON_NGT1
    assert len(result.solutions) == 1

    (solution,) = result.solutions
    assert solution.energy == pytest.approx(alpha**2 * n / 2, rel=1e-9)
    assert solution.beta == pytest.approx(-(n + 1) * alpha**3 / 2, rel=1e-9)
    assert solution.coeffs[1] == pytest.approx(alpha * solution.coeffs[0], rel=1e-12)


def test_ngt1_degree_two_branches():
    result = solve_ngt1(3, 0, 2, -1.0)

    assert len(result.solutions) == 1
    (physical,) = result.solutions
    assert physical.energy == pytest.approx(0.8027756, abs=1e-6)
    assert physical.beta == pytest.approx(0.3027755, abs=1e-6)

    _, branch_b = closed_form_m2(3, 0, -1.0)
    assert physical.energy == pytest.approx(branch_b.energy, rel=1e-10)

    negative = [r for r in result.rejected if r.solution and r.solution.beta < 0]
    assert len(negative) == 1
    assert negative[0].reason == "non-positive beta"
    assert not negative[0].solution.physical  # type: ignore[union-attr]


@pytest.mark.parametrize("dim", [2, 3, 5])
@pytest.mark.parametrize("ell", [0, 1, 2])
@pytest.mark.parametrize("alpha", [-0.5, -1.0, -2.0])
def test_ngt1_degree_two(dim: int, ell: int, alpha: float):
    branch_a, branch_b = closed_form_m2(dim, ell, alpha)
    result = solve_ngt1(dim, ell, 2, alpha)

    (solution,) = result.solutions
    assert solution.energy == pytest.approx(branch_b.energy, rel=1e-9)
    assert solution.beta == pytest.approx(branch_b.beta, rel=1e-9)
    np.testing.assert_allclose(solution.coefficients, branch_b.coefficients, rtol=1e-8)

    energies = [r.energy.real for r in result.rejected]
    assert any(e == pytest.approx(branch_a.energy, rel=1e-9) for e in energies)


def test_ngt1_closed_form_m2_are_roots():
    for branch in closed_form_m2(4, 1, -0.7):
        g1, g2 = residual_pair(4, 1, 2, -0.7, energy=branch.energy, beta=branch.beta)
        assert abs(g1) <= 1e-12 * max(1.0, abs(branch.energy))
        assert abs(g2) <= 1e-12 * max(1.0, abs(branch.energy))


def test_ngt1_closed_form_m1():
    solution = closed_form_m1(3, 0, -1.0)
    assert (solution.energy, solution.beta) == (1.5, 2.0)
    assert solution.coeffs == (1.0, -1.0)


@pytest.mark.parametrize("t", [0.5, 0.8, 1.3, 1.7, 2.0])
def test_ngt1_scaling(t: float):
    base = solve_ngt1(3, 1, 2, -1.0).solutions
    scaled = solve_ngt1(3, 1, 2, -t).solutions
    assert len(base) == len(scaled)

    for s0, s1 in zip(base, scaled, strict=True):
        assert s1.energy == pytest.approx(t**2 * s0.energy, rel=1e-8)
        assert s1.beta == pytest.approx(t**3 * s0.beta, rel=1e-8)


def test_ngt1_seed_is_deterministic():
    config = MultistartConfig(starts=9, seed=7)
    first = solve_ngt1(2, 0, 2, -1.0, config)
    second = solve_ngt1(2, 0, 2, -1.0, config)
    assert first == second
    assert first.starts == second.starts


@pytest.mark.parametrize(
    ("dim", "ell", "degree"),
    [(1, 0, 1), (3, 0, 0), (0, 1, 1)],
)
def test_ngt1_invalid(dim: int, ell: int, degree: int):
    with pytest.raises(InvalidParameterError):
        solve_ngt1(dim, ell, degree, -1.0)


def test_ngt1_degenerate_alpha():
    with pytest.raises(DegenerateParameterError):
        solve_ngt1(3, 0, 1, 0.0)


def test_multistart_config_invalid():
    with pytest.raises(InvalidParameterError):
        MultistartConfig(starts=0)


def test_spectral_result_potential():
    result = solve_ngt1(3, 0, 1, -1.0)
    spec = result.potential(result.solutions[0])
    assert spec.lambda1 == pytest.approx(-6.0)
    assert spec.lambda2 == pytest.approx(-2.0)
    assert spec.lambda4 == pytest.approx(2.0)
    assert spec.quasi_exact


@pytest.mark.parametrize("degree", [1, 2, 3, 5])
def test_projector_properties(degree: int):
    lam = physical_projector(build_P(degree, -1.0, 1.0)).matrix
    np.testing.assert_allclose(lam @ lam, lam, atol=1e-12)
    np.testing.assert_allclose(lam, lam.T, atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_projected_solve_reproduces_spectrum(degree: int):
    p = build_P(degree, -1.0, 1.0)
    projector = physical_projector(p)
    projected = projected_solve(p, projector)
    direct = solve_n1(degree, -1.0, 1.0)

    assert projected.method is Method.PROJECTED
    np.testing.assert_allclose(projected.energies, direct.energies, atol=1e-10)


def test_projected_spectrum_keeps_real_subset():
    rng = np.random.default_rng(42)
    for _ in range(10):
        alpha, beta = rng.uniform(0.2, 2.0, size=2)
        p = build_P(3, alpha, beta)
        mus = np.linalg.eigvals(p.entries)
        real = mus[np.abs(mus.imag) <= 1e-9 * np.maximum(1.0, np.abs(mus))].real
        scale = max(1.0, float(np.max(np.abs(mus))))

        values = projected_spectrum(p, physical_projector(p))
        assert values.shape == (4,)
        assert np.all(np.abs(values.imag) <= 1e-9 * scale)

        nonzero = values.real[np.abs(values) > 1e-9 * scale]
        assert nonzero.size <= real.size
        for value in nonzero:
            assert np.min(np.abs(real - value)) <= 1e-8 * scale


def test_projector_without_physical_vectors():
    projector = physical_projector(build_P(1, 1.0, 1.0))
    assert projector.rank == 0
    np.testing.assert_array_equal(projector.matrix, np.zeros((2, 2)))
    assert not projected_solve(build_P(1, 1.0, 1.0), projector).solutions


def test_projected_solve_q():
    q = build_Q(3, 0, 1, -1.0, 2.0, 1.5)
    projector = build_projector([1.5], np.array([[1.0], [-1.0]]))
    result = projected_solve(q, projector)

    (solution,) = result.solutions
    assert solution.energy == 1.5
    np.testing.assert_allclose(solution.coefficients, [1.0, -1.0], atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2])
def test_solutions_are_serializable(degree: int):
    result = solve_ngt1(3, 0, degree, -1.0)
    for solution in (*result.solutions, *(r.solution for r in result.rejected)):
        assert solution is not None
        assert type(solution.physical) is bool
        assert type(solution.energy) is float
        assert type(solution.beta) is float
        json.dumps(dataclasses.asdict(solution))


def test_rejection_is_value_type():
    rejection = Rejection(complex(0.5, 0.25), "complex energy")
    assert rejection.solution is None
    assert math.isclose(rejection.energy.imag, 0.25)
