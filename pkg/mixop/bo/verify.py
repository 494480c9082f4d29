"""Consistency checks for one problem, bundled into a reproducible report.

:func:`run_verify` chains the existence predicate, a multi-start solve, the
positivity and uniqueness checks, the De Giorgi level trace and the (f5)
inference.  Every check ends with a status of ``pass``, ``fail`` or
``skipped``; component failures are recorded instead of raised so that a
report is always produced.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import structlog

from .config import SWEEP_PARAMS, ProblemSpec
from .eigen import (
    ExistenceVerdict,
    WeightFn,
    existence_predicate,
    lambda1,
    rayleigh,
)
from .errors import ConfigError, ConvergenceError, F5ContradictionError, InconsistencyError
from .forms import FormContext
from .mesh import CoeffVec, FloatArray, constant, integrate, values_at_quadrature
from .minimize import MultiStartResult, SolveReport, minimize, multi_start
from .nonlinearity import NonlinearityModel, asymptotics
from .utils import format_extended

logger = structlog.get_logger(__name__)

SUMMARY_COLUMNS = [
    "param",
    "value",
    "p",
    "s",
    "n_cells",
    "lambda_lin",
    "lambda1_L",
    "lambda_a0",
    "lambda_ainf",
    "predict_exists",
    "observed_exists",
    "uniqueness",
    "smp_pass",
    "linf_bound",
    "degiorgi_delta",
    "k_vanish",
    "f5_inferred",
    "consistent",
]

NEGATIVE_TOL = 1e-10
THRESHOLD_TOL = 1e-3
THRESHOLD_MAX_ITERS = 20
THRESHOLD_HALF_WIDTH = 2.0


# -- De Giorgi levels -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeGiorgiTrace:
    """Truncation energies ``U_k = ‖(ũ - C_k)⁺‖_p^p`` at levels ``C_k = 1 - 2^-k``."""

    delta: float
    levels: FloatArray
    u_tilde: CoeffVec
    uk: FloatArray
    eta: float
    k_vanish: Optional[int]
    ratios: List[Optional[float]] = field(default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        """``U_k`` drops strictly until it first vanishes."""
        head = self.uk if self.k_vanish is None else self.uk[: self.k_vanish + 1]
        return bool(np.all(np.diff(head) < 0.0))

    def to_document(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "levels": self.levels.tolist(),
            "Uk": self.uk.tolist(),
            "eta": self.eta,
            "k_vanish": self.k_vanish,
            "strictly_decreasing": self.strictly_decreasing,
            "recursion_ratios": self.ratios,
        }


def degiorgi_trace(
    ctx: FormContext, u_star: CoeffVec, delta: float, K: int  # noqa: N803
) -> DeGiorgiTrace:
    """Level trace of ``ũ = δ^(1/(p-1)) u_star`` for ``k = 0..K``.

    ``U_k`` is computed with the shared quadrature applied to the positive
    parts, so it is nonincreasing in ``k`` for every input.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if K < 3:
        raise ValueError(f"K must be >= 3, got {K}")
    p = ctx.p
    scale = max(1.0, u_star.max_abs())
    if np.min(u_star.values, initial=0.0) < -NEGATIVE_TOL * scale:
        raise ValueError("u_star must be nonnegative")
    u_tilde = CoeffVec(u_star.space, delta ** (1.0 / (p - 1.0)) * np.maximum(u_star.values, 0.0))
    uq = values_at_quadrature(u_tilde)
    levels = 1.0 - 2.0 ** -np.arange(K + 1, dtype=np.float64)
    uk = np.array(
        [integrate(ctx.space, np.maximum(uq - c_k, 0.0) ** p) for c_k in levels]
    )
    eta = 2.0 ** (p + p * p)
    zero = np.flatnonzero(uk == 0.0)
    k_vanish = int(zero[0]) if zero.size else None
    ratios: List[Optional[float]] = [None]
    for k in range(1, K + 1):
        prev = uk[k - 1]
        ratios.append(
            float(uk[k] / (eta ** (k - 1) * prev ** (1.0 + p))) if prev > 0.0 else None
        )
    return DeGiorgiTrace(
        delta=delta,
        levels=levels,
        u_tilde=u_tilde,
        uk=uk,
        eta=eta,
        k_vanish=k_vanish,
        ratios=ratios,
    )


def auto_degiorgi(
    ctx: FormContext,
    u_star: CoeffVec,
    delta: float = 0.5,
    K: int = 12,  # noqa: N803
    max_halvings: int = 10,
) -> DeGiorgiTrace:
    """Halve ``delta`` until ``U_k`` vanishes within ``K`` levels.

    Returns the first successful trace, or the last attempt.
    """
    trace = degiorgi_trace(ctx, u_star, delta, K)
    for _ in range(max_halvings):
        if trace.k_vanish is not None:
            break
        delta *= 0.5
        logger.warning("degiorgi_halving", delta=delta)
        trace = degiorgi_trace(ctx, u_star, delta, K)
    return trace


# -- (f5) and necessity -----------------------------------------------------


def infer_f5(m: NonlinearityModel, lambda_a0: float) -> bool:
    """``λ₁(L - a0) < 0`` forces (f5); otherwise report the direct root search.

    Raises :class:`F5ContradictionError` if the two disagree.
    """
    direct = asymptotics(m).rho_f is not None
    if lambda_a0 < 0.0:
        if not direct:
            raise F5ContradictionError(
                f"lambda1(L - a0) = {lambda_a0} < 0 but f(x, t) is not positive near t = 0"
            )
        return True
    return direct


def necessity_bound(ctx: FormContext, m: NonlinearityModel, u: CoeffVec) -> float:
    """Upper bound ``γ(u)`` for ``λ₁(L - a0)``, with ``-∞`` when ``a0`` is infinite."""
    data = asymptotics(m)
    if np.any(data.a0 == math.inf):
        return -math.inf
    return rayleigh(ctx, WeightFn(data.x, -data.a0), u)


# -- orchestration ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VerifyReport:
    spec: ProblemSpec
    lambda1_L: float
    verdict: Optional[ExistenceVerdict]
    multi: Optional[MultiStartResult]
    solution: Optional[SolveReport]
    observed_exists: bool
    checks: Dict[str, str]
    linf_bound: float
    degiorgi: Optional[DeGiorgiTrace]
    necessity: Optional[float]
    f5_inferred: Optional[bool]
    consistent: bool
    errors: List[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if "eigen" in self.errors or "solve" in self.errors:
            return "not_converged"
        if not self.consistent or "fail" in self.checks.values():
            return "inconsistent"
        return "ok"

    def to_document(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "spec": self.spec.resolved(),
            "lambda1_L": format_extended(self.lambda1_L),
            "predicate": None if self.verdict is None else self.verdict.to_document(),
            "uniqueness": None if self.multi is None else self.multi.to_document(),
            "solution": None
            if self.solution is None
            else {k: v for k, v in self.solution.to_document().items() if k != "history"},
            "observed_exists": self.observed_exists,
            "checks": self.checks,
            "linf_bound": self.linf_bound,
            "degiorgi": None if self.degiorgi is None else self.degiorgi.to_document(),
            "necessity_bound": None
            if self.necessity is None
            else format_extended(self.necessity),
            "f5_inferred": self.f5_inferred,
            "consistent": self.consistent,
            "errors": self.errors,
        }

    def summary_row(self, param: str = "", value: Any = "") -> Dict[str, Any]:
        verdict = self.verdict
        return {
            "param": param,
            "value": value,
            "p": self.spec.p,
            "s": self.spec.s,
            "n_cells": self.spec.n_cells,
            "lambda_lin": self.spec.nonlinearity.lambda_lin,
            "lambda1_L": format_extended(self.lambda1_L),
            "lambda_a0": "" if verdict is None else format_extended(verdict.lambda_a0),
            "lambda_ainf": "" if verdict is None else format_extended(verdict.lambda_ainf),
            "predict_exists": "" if verdict is None else verdict.predict_exists,
            "observed_exists": self.observed_exists,
            "uniqueness": self.checks.get("uniqueness", "skipped"),
            "smp_pass": self.checks.get("smp", "skipped"),
            "linf_bound": self.linf_bound,
            "degiorgi_delta": "" if self.degiorgi is None else self.degiorgi.delta,
            "k_vanish": ""
            if self.degiorgi is None or self.degiorgi.k_vanish is None
            else self.degiorgi.k_vanish,
            "f5_inferred": "" if self.f5_inferred is None else self.f5_inferred,
            "consistent": self.consistent,
        }


def _status(ok: Optional[bool]) -> str:
    if ok is None:
        return "skipped"
    return "pass" if ok else "fail"


def run_verify(spec: ProblemSpec) -> VerifyReport:
    """Run every check for one problem and collect the outcomes."""
    ctx = spec.build_context()
    m = spec.build_model()
    eopts = spec.eigen_options()
    errors: List[str] = []
    checks: Dict[str, str] = {}
    log = logger.bind(p=spec.p, s=spec.s, n_cells=spec.n_cells, family=m.family)

    try:
        lam_l = lambda1(ctx, WeightFn.const(0.0), eopts).lambda1
    except ConvergenceError as exc:
        errors.append("eigen")
        lam_l = exc.report.lambda1 if exc.report is not None else math.nan
        log.warning("lambda1_failed", code=exc.code)

    verdict: Optional[ExistenceVerdict] = None
    try:
        verdict = existence_predicate(ctx, m, eopts, base=lam_l if math.isfinite(lam_l) else None)
    except ConvergenceError as exc:
        errors.append("eigen")
        log.warning("predicate_failed", code=exc.code)

    multi = multi_start(ctx, m, spec.solve.starts, spec.solve.seed, spec.solver_options())
    if not any(r.converged for r in multi.reports):
        errors.append("solve")
    nontrivial = multi.nontrivial()
    observed = bool(nontrivial)
    solution: Optional[SolveReport] = None
    if nontrivial:
        solution = min(nontrivial, key=lambda r: r.energy)
    elif multi.reports:
        solution = min(multi.reports, key=lambda r: r.residual_inf)

    checks["smp"] = _status(
        all(float(np.min(r.u_star.values)) > 0.0 for r in nontrivial) if nontrivial else None
    )
    if multi.verdict == "unique":
        checks["uniqueness"] = "pass"
    elif multi.verdict == "multiple":
        checks["uniqueness"] = "fail"
    else:
        checks["uniqueness"] = "skipped"

    linf = 0.0 if solution is None else solution.linf
    trace: Optional[DeGiorgiTrace] = None
    necessity: Optional[float] = None
    if solution is not None:
        trace = auto_degiorgi(
            ctx,
            solution.u_star.positive_part(),
            spec.verify.delta,
            spec.verify.levels,
            spec.verify.max_halvings,
        )
        checks["degiorgi"] = _status(trace.k_vanish is not None and trace.strictly_decreasing)
    if observed and solution is not None:
        necessity = necessity_bound(ctx, m, solution.u_star)
        checks["necessity"] = _status(necessity < 0.0)

    f5: Optional[bool] = None
    if verdict is not None:
        try:
            f5 = infer_f5(m, verdict.lambda_a0)
            checks["f5"] = "pass"
        except F5ContradictionError as exc:
            errors.append(exc.code)
            checks["f5"] = "fail"

    if verdict is None:
        consistent = False
    elif verdict.sharp:
        consistent = verdict.predict_exists == observed
    else:
        consistent = observed or not verdict.predict_exists

    report = VerifyReport(
        spec=spec,
        lambda1_L=lam_l,
        verdict=verdict,
        multi=multi,
        solution=solution,
        observed_exists=observed,
        checks=checks,
        linf_bound=linf,
        degiorgi=trace,
        necessity=necessity,
        f5_inferred=f5,
        consistent=consistent,
        errors=errors,
    )
    log.info("verify_done", status=report.status, consistent=consistent, observed=observed)
    return report


def _verify_with(args: tuple[ProblemSpec, str, float]) -> Dict[str, Any]:
    spec, name, value = args
    return run_verify(spec.with_param(name, value)).summary_row(name, value)


def parameter_sweep(
    spec: ProblemSpec, name: str, values: Sequence[float], workers: int = 1
) -> List[Dict[str, Any]]:
    """One summary row per value, in the order of ``values``.

    Every value is validated before any run starts.  With ``workers > 1`` the
    instances run in separate processes.
    """
    if name not in SWEEP_PARAMS:
        raise ConfigError(
            f"unknown sweep parameter {name!r}; expected one of {', '.join(SWEEP_PARAMS)}"
        )
    if not values:
        raise ConfigError("sweep needs at least one value")
    for value in values:
        spec.with_param(name, value)
    jobs = [(spec, name, float(v)) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_verify_with, jobs))
    return [_verify_with(job) for job in jobs]


def lambda_sweep(spec: ProblemSpec, values: Sequence[float]) -> List[VerifyReport]:
    """Full reports for each ``lambda_lin`` value."""
    return [run_verify(spec.with_param("lambda_lin", v)) for v in values]


# -- existence threshold ----------------------------------------------------


@dataclass(frozen=True)
class ThresholdResult:
    lambda_star: float
    lambda1_L: float
    lower: float
    upper: float
    iterations: int

    @property
    def relative_error(self) -> float:
        return abs(self.lambda_star - self.lambda1_L) / abs(self.lambda1_L)


def observe_existence(spec: ProblemSpec) -> bool:
    """A single descent from the constant 1 start reaches negative energy.

    ``E(0) = 0``, so a negative energy proves that the minimizer is nontrivial.
    Best-so-far iterates of unconverged runs count as well.
    """
    ctx = spec.build_context()
    m = spec.build_model()
    try:
        report = minimize(ctx, m, constant(ctx.space, 1.0), spec.solver_options())
    except ConvergenceError as exc:
        if exc.report is None:
            return False
        report = exc.report
    return bool(report.energy < 0.0 and report.is_nontrivial)


def existence_threshold(spec: ProblemSpec) -> ThresholdResult:
    """Bisect the existence boundary in ``lambda_lin`` around ``λ₁(L)``.

    Needs the logistic family, where existence holds exactly for ``λ > λ₁(L)``
    at ``p = 2``.  Raises :class:`InconsistencyError` when the bracket
    ``[λ₁ - 2, λ₁ + 2]`` does not straddle the observed boundary.
    """
    if spec.nonlinearity.family != "logistic":
        raise ValueError("existence_threshold needs the logistic family")
    ctx = spec.build_context()
    lam_l = lambda1(ctx, WeightFn.const(0.0), spec.eigen_options()).lambda1
    lo, hi = lam_l - THRESHOLD_HALF_WIDTH, lam_l + THRESHOLD_HALF_WIDTH
    if observe_existence(spec.with_param("lambda_lin", lo)) or not observe_existence(
        spec.with_param("lambda_lin", hi)
    ):
        raise InconsistencyError(f"existence boundary not bracketed by [{lo}, {hi}]")
    iterations = 0
    while hi - lo > THRESHOLD_TOL and iterations < THRESHOLD_MAX_ITERS:
        mid = 0.5 * (lo + hi)
        if observe_existence(spec.with_param("lambda_lin", mid)):
            hi = mid
        else:
            lo = mid
        iterations += 1
        logger.debug("threshold_bisect", lower=lo, upper=hi)
    result = ThresholdResult(
        lambda_star=0.5 * (lo + hi),
        lambda1_L=lam_l,
        lower=lo,
        upper=hi,
        iterations=iterations,
    )
    logger.info("existence_threshold", lambda_star=result.lambda_star, lambda1_L=lam_l)
    return result
