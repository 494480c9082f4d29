import math

import numpy as np
import pytest

from mixop.bo.eigen import (
    EigenOptions,
    EigenReport,
    WeightFn,
    asymptotic_weights,
    existence_predicate,
    lambda1,
    lambda1_bo,
    rayleigh,
    weighted_eigen,
)
from mixop.bo.errors import ConvergenceError
from mixop.bo.forms import FormContext, assemble_p2, build_context, weighted_mass
from mixop.bo.mesh import CoeffVec, build_space, from_function, lp_norm, zeros
from mixop.bo.minimize import random_starts
from mixop.bo.nonlinearity import logistic_model, power_model

ZERO = WeightFn.const(0.0)


def test_weight_fn_validation() -> None:
    with pytest.raises(ValueError, match="cover"):
        WeightFn(np.array([0.1, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="equal length"):
        WeightFn(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="NaN"):
        WeightFn(np.array([0.0, 1.0]), np.array([1.0, math.nan]))
    w = WeightFn(np.array([0.0, 0.5, 1.0]), np.array([0.0, 2.0, 0.0]))
    assert w.at(np.array(0.25)) == pytest.approx(1.0)
    assert w.shifted(1.0).negated().values.tolist() == [-1.0, -3.0, -1.0]
    with pytest.raises(ValueError, match="extended"):
        WeightFn.const(math.inf).at(np.array([0.5]))


def test_rayleigh_quotient_properties(ctx_p2: FormContext) -> None:
    u = from_function(ctx_p2.space, lambda x: x * (1.0 - x) * (1.0 + x))
    base = rayleigh(ctx_p2, ZERO, u)
    assert rayleigh(ctx_p2, ZERO, u.scaled(-3.0)) == pytest.approx(base, rel=1e-12)
    assert rayleigh(ctx_p2, WeightFn.const(5.0), u) == pytest.approx(base + 5.0, rel=1e-12)
    with pytest.raises(ValueError, match="u = 0"):
        rayleigh(ctx_p2, ZERO, zeros(ctx_p2.space))
    with pytest.raises(ValueError, match="bounded"):
        rayleigh(ctx_p2, WeightFn.const(-math.inf), u)


def test_single_hat_quotient_exceeds_dirichlet_laplacian(ctx_p2: FormContext) -> None:
    vals = np.zeros(ctx_p2.space.dim)
    vals[ctx_p2.space.dim // 2] = 1.0
    assert rayleigh(ctx_p2, ZERO, CoeffVec(ctx_p2.space, vals)) > math.pi**2


def test_dense_first_eigenpair(ctx_p2: FormContext) -> None:
    report = lambda1(ctx_p2, ZERO)
    assert report.method == "dense" and report.converged
    assert report.lambda1 > math.pi**2
    assert report.lambda2 is not None and report.lambda2 > report.lambda1
    e1 = report.e1
    assert e1 is not None
    assert np.all(e1.values > 0.0)
    assert lp_norm(e1, 2.0) == pytest.approx(1.0, abs=1e-10)
    mats = assemble_p2(ctx_p2)
    lhs = mats.stiffness @ e1.values
    rhs = report.lambda1 * (mats.mass @ e1.values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * report.lambda1
    assert rayleigh(ctx_p2, ZERO, e1) == pytest.approx(report.lambda1, rel=1e-10)


def test_dense_shift_by_constant_weight(ctx_p2: FormContext) -> None:
    base = lambda1(ctx_p2, ZERO).lambda1
    shifted = lambda1(ctx_p2, WeightFn.const(5.0)).lambda1
    assert shifted == pytest.approx(base + 5.0, abs=1e-10 * max(1.0, base))


def test_variable_weight_lies_between_its_bounds(ctx_p2: FormContext) -> None:
    base = lambda1(ctx_p2, ZERO).lambda1
    bump = WeightFn(np.array([0.0, 0.5, 1.0]), np.array([0.0, 4.0, 0.0]))
    value = lambda1(ctx_p2, bump).lambda1
    assert base < value < base + 4.0
    w = weighted_mass(ctx_p2.space, bump.at(ctx_p2.space.quad_points))
    assert np.all(np.linalg.eigvalsh(0.5 * (w + w.T)) >= -1e-14)


def test_descent_matches_dense_at_p2(ctx_p2: FormContext) -> None:
    dense = lambda1(ctx_p2, ZERO)
    descent = lambda1(ctx_p2, ZERO, EigenOptions(method="descent"))
    assert descent.method == "descent" and descent.converged
    assert descent.lambda1 == pytest.approx(dense.lambda1, rel=1e-6)
    assert descent.lambda1 >= dense.lambda1 - 1e-9 * dense.lambda1
    history = np.array(descent.rayleigh_history)
    assert np.all(np.diff(history) <= 1e-10 * history[0])


def test_descent_p3_is_start_independent(ctx_p3: FormContext) -> None:
    reports = [
        lambda1(ctx_p3, ZERO, start=u0) for u0 in random_starts(ctx_p3, 3, seed=11)
    ]
    values = [r.lambda1 for r in reports]
    assert max(values) == pytest.approx(min(values), rel=1e-6)
    for r in reports:
        assert r.e1 is not None
        assert lp_norm(r.e1, 3.0) == pytest.approx(1.0, rel=1e-12)
        assert np.all(r.e1.values > 0.0)


def test_extended_weights() -> None:
    ctx = build_context(build_space(8, 2.0, 0.5))
    minus_inf = WeightFn(np.array([0.0, 0.5, 1.0]), np.array([0.0, -math.inf, 0.0]))
    assert lambda1_bo(ctx, minus_inf) == -math.inf
    assert lambda1_bo(ctx, WeightFn.const(math.inf)) == math.inf
    partly = WeightFn(np.array([0.0, 0.5, 1.0]), np.array([math.inf, 0.0, math.inf]))
    with pytest.raises(ValueError, match="part of the domain"):
        lambda1_bo(ctx, partly)
    report = weighted_eigen(ctx, WeightFn.const(-math.inf))
    assert report.method == "extended" and report.e1 is None
    assert report.to_document()["lambda1"] == "-inf"
    with pytest.raises(ValueError, match="lambda1_bo"):
        lambda1(ctx, WeightFn.const(math.inf))


def test_lambda1_bo_shift_shortcut(ctx_p2: FormContext) -> None:
    base = lambda1(ctx_p2, ZERO).lambda1
    minus_a0, _ = asymptotic_weights(logistic_model(2.0, 7.0))
    direct = lambda1_bo(ctx_p2, minus_a0)
    assert direct == pytest.approx(base - 7.0, abs=1e-9)
    assert lambda1_bo(ctx_p2, minus_a0, base=base) == base - 7.0


def test_existence_predicate_for_power_model(ctx_p2: FormContext) -> None:
    verdict = existence_predicate(ctx_p2, power_model(2.0, 0.5))
    assert verdict.lambda_a0 == -math.inf
    assert verdict.lambda_ainf > math.pi**2
    assert verdict.predict_exists and verdict.sharp
    assert verdict.to_document()["lambda_a0"] == "-inf"


@pytest.mark.parametrize("offset, expected", [(-1.0, False), (1.0, True)])
def test_existence_predicate_for_logistic_model(
    ctx_p2: FormContext, offset: float, expected: bool
) -> None:
    base = lambda1(ctx_p2, ZERO).lambda1
    verdict = existence_predicate(ctx_p2, logistic_model(2.0, base + offset), base=base)
    assert verdict.lambda_ainf == math.inf
    assert verdict.lambda_a0 == pytest.approx(-offset, abs=1e-9)
    assert verdict.predict_exists is expected


def test_existence_predicate_is_not_sharp_away_from_p2(ctx_p3: FormContext) -> None:
    verdict = existence_predicate(ctx_p3, power_model(3.0, 0.5))
    assert verdict.predict_exists
    assert not verdict.sharp


@pytest.mark.slow
def test_fine_mesh_eigenvalue_and_stability() -> None:
    coarse = lambda1(build_context(build_space(128, 2.0, 0.5)), ZERO)
    fine = lambda1(build_context(build_space(256, 2.0, 0.5)), ZERO)
    assert coarse.lambda1 > math.pi**2
    assert fine.lambda1 > math.pi**2
    assert abs(coarse.lambda1 - fine.lambda1) <= 1e-2 * fine.lambda1


def test_descent_reports_a_stalled_line_search(
    ctx_p3: FormContext, monkeypatch: pytest.MonkeyPatch
) -> None:
    # no step can pass either acceptance test
    monkeypatch.setattr("mixop.bo.eigen.C_ARMIJO", 1e6)
    monkeypatch.setattr("mixop.bo.eigen.NOISE_FACTOR", -1.0)
    with pytest.raises(ConvergenceError) as info:
        lambda1(ctx_p3, ZERO, EigenOptions(method="descent"))
    assert info.value.code == "line_search_stalled"
    report = info.value.report
    assert isinstance(report, EigenReport)
    assert not report.converged
    assert report.iterations == 0
    assert report.rayleigh_history == [pytest.approx(report.lambda1)]


@pytest.mark.slow
def test_fine_mesh_descent_matches_dense() -> None:
    ctx = build_context(build_space(128, 2.0, 0.5))
    dense = lambda1(ctx, ZERO)
    descent = lambda1(ctx, ZERO, EigenOptions(method="descent", tol_eig=1e-10))
    assert dense.lambda1 > math.pi**2
    assert descent.lambda1 == pytest.approx(dense.lambda1, abs=1e-6)
    shifted = lambda1(ctx, WeightFn.const(5.0))
    assert shifted.lambda1 == pytest.approx(dense.lambda1 + 5.0, abs=1e-10 * dense.lambda1)
