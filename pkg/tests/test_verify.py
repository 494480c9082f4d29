import math
from typing import Any, Dict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixop.bo.config import ProblemSpec, parse_spec
from mixop.bo.errors import ConfigError, F5ContradictionError
from mixop.bo.forms import FormContext, build_context
from mixop.bo.mesh import build_space, from_function, lp_norm, zeros
from mixop.bo.minimize import minimize
from mixop.bo.nonlinearity import logistic_model, power_model
from mixop.bo.verify import (
    SUMMARY_COLUMNS,
    auto_degiorgi,
    degiorgi_trace,
    existence_threshold,
    infer_f5,
    necessity_bound,
    observe_existence,
    parameter_sweep,
    run_verify,
)


def _spec(**overrides: Any) -> ProblemSpec:
    doc: Dict[str, Any] = {"p": 2.0, "s": 0.5, "n_cells": 32, "solve": {"starts": 3, "seed": 2}}
    doc.update(overrides)
    return parse_spec(doc)


def test_degiorgi_trace_of_zero_vanishes_immediately(ctx_p2: FormContext) -> None:
    trace = degiorgi_trace(ctx_p2, zeros(ctx_p2.space), 0.5, 5)
    assert trace.k_vanish == 0
    assert np.all(trace.uk == 0.0)
    assert trace.strictly_decreasing
    assert trace.ratios == [None] * 6


def test_degiorgi_first_level_is_the_scaled_norm(ctx_p3: FormContext) -> None:
    u = from_function(ctx_p3.space, lambda x: 3.0 * np.sin(np.pi * x))
    delta = 0.25
    trace = degiorgi_trace(ctx_p3, u, delta, 6)
    expected = delta ** (3.0 / 2.0) * lp_norm(u, 3.0) ** 3
    assert trace.uk[0] == pytest.approx(expected, rel=1e-12)
    assert trace.eta == 2.0**12
    np.testing.assert_allclose(trace.levels[:3], [0.0, 0.5, 0.75])
    doc = trace.to_document()
    assert doc["Uk"] == trace.uk.tolist() and len(doc["recursion_ratios"]) == 7


@given(
    amplitude=st.floats(min_value=0.01, max_value=20.0),
    delta=st.floats(min_value=0.01, max_value=0.99),
)
@settings(max_examples=40, deadline=None)
def test_degiorgi_levels_never_increase(amplitude: float, delta: float) -> None:
    ctx = build_context(build_space(8, 2.0, 0.5), 3, 3)
    u = from_function(ctx.space, lambda x: amplitude * x * (1.0 - x))
    trace = degiorgi_trace(ctx, u, delta, 8)
    assert np.all(np.diff(trace.uk) <= 0.0)


def test_degiorgi_rejects_bad_input(ctx_p2: FormContext) -> None:
    u = from_function(ctx_p2.space, lambda x: x * (1.0 - x))
    with pytest.raises(ValueError, match="delta"):
        degiorgi_trace(ctx_p2, u, 1.0, 5)
    with pytest.raises(ValueError, match="K must"):
        degiorgi_trace(ctx_p2, u, 0.5, 2)
    with pytest.raises(ValueError, match="nonnegative"):
        degiorgi_trace(ctx_p2, u.scaled(-1.0), 0.5, 5)


def test_auto_degiorgi_halves_until_levels_vanish(ctx_p2: FormContext) -> None:
    u = from_function(ctx_p2.space, lambda x: 12.0 * x * (1.0 - x))
    trace = auto_degiorgi(ctx_p2, u, delta=0.5, K=12)
    # max u = 3, so the scaled profile first fits below 1 at delta = 0.25
    assert trace.delta == pytest.approx(0.25)
    assert trace.k_vanish is not None and trace.strictly_decreasing


def test_auto_degiorgi_on_power_solution(ctx_p2: FormContext) -> None:
    report = minimize(ctx_p2, power_model(2.0, 0.5))
    trace = auto_degiorgi(ctx_p2, report.u_star.positive_part())
    assert trace.k_vanish is not None
    assert trace.strictly_decreasing
    assert 0.0 < trace.delta <= 0.5


def test_infer_f5() -> None:
    assert infer_f5(power_model(2.0, 0.5), -math.inf)
    assert infer_f5(logistic_model(2.0, 3.0), 1.0)
    assert not infer_f5(logistic_model(2.0, -1.0), 5.0)
    with pytest.raises(F5ContradictionError) as info:
        infer_f5(logistic_model(2.0, -1.0), -1.0)
    assert info.value.code == "f5_contradiction"


def test_necessity_bound(ctx_p2: FormContext) -> None:
    u = from_function(ctx_p2.space, lambda x: np.sin(np.pi * x))
    assert necessity_bound(ctx_p2, power_model(2.0, 0.5), u) == -math.inf
    m = logistic_model(2.0, 100.0)
    assert necessity_bound(ctx_p2, m, u) < 0.0
    assert necessity_bound(ctx_p2, logistic_model(2.0, 0.0), u) > math.pi**2


def test_run_verify_power_model() -> None:
    report = run_verify(_spec(nonlinearity={"family": "power", "theta": 0.5}))
    assert report.status == "ok"
    assert report.observed_exists and report.consistent
    assert report.verdict is not None and report.verdict.predict_exists
    assert report.checks["smp"] == "pass"
    assert report.checks["uniqueness"] == "pass"
    assert report.checks["degiorgi"] == "pass"
    assert report.checks["necessity"] == "pass"
    assert report.f5_inferred is True
    assert report.linf_bound > 0.0
    assert "history" not in report.to_document()["solution"]


def test_run_verify_logistic_above_and_below_threshold() -> None:
    above = run_verify(_spec(nonlinearity={"family": "logistic", "lambda_lin": 40.0}))
    assert above.status == "ok"
    assert above.observed_exists and above.verdict is not None
    assert above.verdict.predict_exists
    assert above.checks["necessity"] == "pass"
    assert above.degiorgi is not None and above.degiorgi.k_vanish is not None

    below = run_verify(_spec(nonlinearity={"family": "logistic", "lambda_lin": 15.0}))
    assert below.status == "ok"
    assert not below.observed_exists
    assert below.verdict is not None and not below.verdict.predict_exists
    assert below.checks["smp"] == "skipped"
    assert below.checks["uniqueness"] == "skipped"
    assert "necessity" not in below.checks
    assert below.consistent


def test_summary_row_has_every_column() -> None:
    report = run_verify(_spec(nonlinearity={"family": "logistic", "lambda_lin": 15.0}))
    row = report.summary_row("lambda_lin", 15.0)
    assert list(row) == SUMMARY_COLUMNS
    assert row["param"] == "lambda_lin" and row["value"] == 15.0
    assert row["predict_exists"] is False and row["consistent"] is True


def test_parameter_sweep_rejects_bad_requests() -> None:
    spec = _spec()
    with pytest.raises(ConfigError, match="unknown sweep parameter"):
        parameter_sweep(spec, "theta", [0.5])
    with pytest.raises(ConfigError, match="at least one"):
        parameter_sweep(spec, "s", [])
    with pytest.raises(ConfigError, match="s=1.5"):
        parameter_sweep(spec, "s", [0.5, 1.5])


def test_parameter_sweep_keeps_value_order() -> None:
    spec = _spec(nonlinearity={"family": "logistic"})
    rows = parameter_sweep(spec, "lambda_lin", [15.0, 45.0])
    assert [r["value"] for r in rows] == [15.0, 45.0]
    assert [r["observed_exists"] for r in rows] == [False, True]
    assert all(r["consistent"] for r in rows)


def test_observe_existence_uses_the_energy_sign() -> None:
    assert observe_existence(_spec(nonlinearity={"family": "logistic", "lambda_lin": 40.0}))
    assert not observe_existence(_spec(nonlinearity={"family": "logistic", "lambda_lin": 10.0}))


def test_existence_threshold_needs_logistic_family() -> None:
    with pytest.raises(ValueError, match="logistic"):
        existence_threshold(_spec())


@pytest.mark.slow
def test_existence_threshold_recovers_first_eigenvalue() -> None:
    result = existence_threshold(_spec(nonlinearity={"family": "logistic"}))
    assert result.lower < result.upper
    assert result.upper - result.lower <= 1e-3 or result.iterations == 20
    assert result.relative_error <= 1e-2


@pytest.mark.slow
def test_fine_mesh_threshold_and_lambda_sweep() -> None:
    spec = _spec(n_cells=128, nonlinearity={"family": "logistic"})
    result = existence_threshold(spec)
    assert result.relative_error <= 2e-2
    lam = result.lambda1_L
    values = [lam * (1.0 + 0.05 * k) for k in range(-5, 6)]
    observed = [observe_existence(spec.with_param("lambda_lin", v)) for v in values]
    mismatches = [v for v, seen in zip(values, observed) if seen != (v > lam)]
    # only the grid point at the threshold itself may go either way
    assert len(mismatches) <= 1
    assert all(abs(v - lam) <= 0.05 * lam for v in mismatches)


@pytest.mark.parametrize(
    "p, model",
    [(3.0, power_model(3.0, 0.5)), (2.0, logistic_model(2.0, 40.0))],
    ids=["power-p3", "logistic-p2"],
)
def test_degiorgi_trace_of_computed_solutions(p: float, model: Any) -> None:
    ctx = build_context(build_space(32, p, 0.5))
    report = minimize(ctx, model)
    u = report.u_star.positive_part()
    trace = auto_degiorgi(ctx, u, delta=0.5, K=12)
    assert trace.k_vanish is not None and trace.k_vanish <= 12
    assert trace.strictly_decreasing
    expected = trace.delta ** (p / (p - 1.0)) * lp_norm(u, p) ** p
    assert trace.uk[0] == pytest.approx(expected, rel=1e-10)
