"""Direct-method solver: minimize the discrete energy over the P1 space.

    E(u) = Q(u)/p - ∫_Ω F(x, u⁺) dx

``F`` is extended by 0 for negative arguments, so the potential only sees
``u⁺``.  The iteration is steepest descent with Armijo backtracking and
Barzilai–Borwein trial steps.  By default the descent direction is the
gradient in the discrete H¹₀ inner product (one tridiagonal solve per step).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import structlog
from scipy.linalg import solve_banded

from .errors import ConvergenceError
from .forms import FormContext, load_vector, q_form_with_gradient
from .mesh import CoeffVec, FloatArray, constant, integrate, values_at_quadrature
from .nonlinearity import NonlinearityModel, eval_F

logger = structlog.get_logger(__name__)

Metric = Literal["sobolev", "euclidean"]

C_ARMIJO = 1e-4
BACKTRACK = 0.5
STEP_MIN = 1e-14
GROWTH_LIMIT = 1e6
TRIVIALITY_FACTOR = 10.0
NOISE_FACTOR = 1e-14
DEFAULT_START = 0.1


def default_tol_res(p: float) -> float:
    return 1e-8 if p == 2.0 else 1e-6


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and limits for :func:`minimize` and :func:`multi_start`."""

    tol_res: Optional[float] = None
    max_iters: int = 20000
    step_min: float = STEP_MIN
    metric: Metric = "sobolev"
    tol_unique: float = 1e-5
    growth_limit: float = GROWTH_LIMIT

    def resolved_tol(self, p: float) -> float:
        return default_tol_res(p) if self.tol_res is None else self.tol_res

    def __post_init__(self) -> None:
        if self.tol_res is not None and not self.tol_res > 0.0:
            raise ValueError(f"tol_res must be positive, got {self.tol_res}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class IterationRecord:
    energy: float
    step: float
    residual: float


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one descent run.

    ``history`` holds one record per accepted step.  Its energies are
    nonincreasing up to the line-search noise floor: a step may raise ``E`` by
    at most ``NOISE_FACTOR * max(1, |E|, Q/p)`` when it also lowers the residual.
    """

    u_star: CoeffVec
    energy: float
    energy_start: float
    residual_inf: float
    tol_res: float
    iterations: int
    converged: bool
    is_nontrivial: bool
    min_interior_value: float
    status: str = "converged"
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def linf(self) -> float:
        return self.u_star.max_abs()

    def to_document(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "converged": self.converged,
            "energy": self.energy,
            "energy_start": self.energy_start,
            "residual_inf": self.residual_inf,
            "tol_res": self.tol_res,
            "iterations": self.iterations,
            "is_nontrivial": self.is_nontrivial,
            "min_interior_value": self.min_interior_value,
            "linf": self.linf,
            "history": [[r.energy, r.step, r.residual] for r in self.history],
        }


def _energy_parts(
    ctx: FormContext, m: NonlinearityModel, u: CoeffVec
) -> Tuple[float, float, FloatArray]:
    """``(E(u), Q(u)/p, ∇E(u))``."""
    p = ctx.p
    q, grad_q = q_form_with_gradient(ctx, u)
    uq = np.maximum(values_at_quadrature(u), 0.0)
    potential = integrate(ctx.space, eval_F(m, ctx.space.quad_points, uq))
    grad = grad_q / p - load_vector(ctx, m, u)
    return q / p - potential, q / p, grad


def energy(ctx: FormContext, m: NonlinearityModel, u: CoeffVec) -> float:
    """``E(u) = Q(u)/p - ∫ F(x, u⁺)``."""
    return _energy_parts(ctx, m, u)[0]


def energy_identity_gap(ctx: FormContext, m: NonlinearityModel, u: CoeffVec) -> float:
    """``Q(u) - ∫ f(x, u) u``: the weak formulation tested with ``u`` itself."""
    q, _ = q_form_with_gradient(ctx, u)
    return q - float(load_vector(ctx, m, u) @ u.values)


class SobolevMetric:
    """Riesz map of the discrete H¹₀ inner product (or the identity)."""

    def __init__(self, ctx: FormContext, metric: Metric) -> None:
        self.metric = metric
        n, h = ctx.space.dim, ctx.space.h
        self._banded = np.zeros((3, n))
        self._banded[0, 1:] = -1.0 / h
        self._banded[1, :] = 2.0 / h
        self._banded[2, :-1] = -1.0 / h

    def apply_inverse(self, g: FloatArray) -> FloatArray:
        if self.metric == "euclidean":
            return g.copy()
        return np.asarray(solve_banded((1, 1), self._banded, g))

    def inner(self, a: FloatArray, b: FloatArray) -> float:
        if self.metric == "euclidean":
            return float(a @ b)
        ab = self._banded
        ka = ab[1] * a
        ka[:-1] += ab[0, 1:] * a[1:]
        ka[1:] += ab[2, :-1] * a[:-1]
        return float(ka @ b)


def _report(
    ctx: FormContext,
    m: NonlinearityModel,
    values: FloatArray,
    energy_value: float,
    energy_start: float,
    residual_value: float,
    tol: float,
    iterations: int,
    status: str,
    history: List[IterationRecord],
) -> SolveReport:
    u = CoeffVec(ctx.space, values)
    if np.any(values < 0.0):
        u_pos = u.positive_part()
        e_pos, _, g_pos = _energy_parts(ctx, m, u_pos)
        r_pos = float(np.max(np.abs(g_pos))) / ctx.space.h
        if e_pos <= energy_value and r_pos <= max(tol, residual_value):
            u, energy_value, residual_value = u_pos, e_pos, r_pos
    converged = residual_value <= tol
    if status == "converged" and not converged:
        status = "not_converged"
    return SolveReport(
        u_star=u,
        energy=energy_value,
        energy_start=energy_start,
        residual_inf=residual_value,
        tol_res=tol,
        iterations=iterations,
        converged=converged,
        is_nontrivial=u.max_abs() > TRIVIALITY_FACTOR * tol,
        min_interior_value=float(np.min(u.values)),
        status=status,
        history=history,
    )


def minimize(
    ctx: FormContext,
    m: NonlinearityModel,
    u0: Optional[CoeffVec] = None,
    opts: SolverOptions = SolverOptions(),
) -> SolveReport:
    """Minimize ``E`` from ``u0`` (default: the constant 0.1 interpolant).

    Raises :class:`ConvergenceError` with the best-so-far report attached
    (codes ``max_iters_exceeded``, ``line_search_stalled``,
    ``energy_diverging``).
    """
    space = ctx.space
    tol = opts.resolved_tol(ctx.p)
    start = constant(space, DEFAULT_START) if u0 is None else u0
    precond = SobolevMetric(ctx, opts.metric)

    u = np.array(start.values, dtype=np.float64)
    e, q_scaled, g = _energy_parts(ctx, m, CoeffVec(space, u))
    e_start = e
    res = float(np.max(np.abs(g))) / space.h
    history: List[IterationRecord] = []

    def fail(code: str, message: str) -> ConvergenceError:
        report = _report(ctx, m, u, e, e_start, res, tol, len(history), code, history)
        logger.warning("solve_failed", code=code, iterations=len(history), residual=res)
        return ConvergenceError(message, code=code, report=report)

    direction = -precond.apply_inverse(g)
    scale = float(np.max(np.abs(direction))) or 1.0
    alpha = min(1.0, 0.1 * max(float(np.max(np.abs(u))), 1.0) / scale)

    for _ in range(opts.max_iters):
        if res <= tol:
            break
        direction = -precond.apply_inverse(g)
        slope = float(g @ direction)
        noise = NOISE_FACTOR * max(1.0, abs(e), abs(q_scaled))
        step = alpha
        while True:
            trial = u + step * direction
            if float(np.max(np.abs(trial))) > opts.growth_limit:
                raise fail("energy_diverging", "iterate exceeded the growth limit")
            e_t, q_t, g_t = _energy_parts(ctx, m, CoeffVec(space, trial))
            res_t = float(np.max(np.abs(g_t))) / space.h
            if e_t <= e + C_ARMIJO * step * slope:
                break
            if e_t <= e + noise and res_t < res:
                break
            step *= BACKTRACK
            if step < opts.step_min:
                raise fail("line_search_stalled", "no admissible step above step_min")
        s = trial - u
        y = g_t - g
        sy = float(s @ y)
        alpha = precond.inner(s, s) / sy if sy > 0.0 else 2.0 * step
        alpha = float(np.clip(alpha, 1e-12, 1e12))
        u, e, q_scaled, g, res = trial, e_t, q_t, g_t, res_t
        history.append(IterationRecord(energy=e, step=step, residual=res))
        logger.debug("descent_step", it=len(history), energy=e, step=step, residual=res)

    if res > tol:
        raise fail("max_iters_exceeded", f"residual {res:.3e} above {tol:.1e}")
    report = _report(ctx, m, u, e, e_start, res, tol, len(history), "converged", history)
    logger.info(
        "solve_converged",
        iterations=report.iterations,
        energy=report.energy,
        residual=report.residual_inf,
        nontrivial=report.is_nontrivial,
    )
    return report


@dataclass(frozen=True, eq=False)
class MultiStartResult:
    """Reports of every start plus the uniqueness verdict."""

    reports: List[SolveReport]
    failures: List[str]
    verdict: str
    max_pairwise_distance: Optional[float]

    @property
    def unique(self) -> bool:
        return self.verdict == "unique"

    def nontrivial(self) -> List[SolveReport]:
        return [r for r in self.reports if r.converged and r.is_nontrivial]

    def to_document(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "max_pairwise_distance": self.max_pairwise_distance,
            "failures": self.failures,
            "runs": [
                {k: v for k, v in r.to_document().items() if k != "history"}
                for r in self.reports
            ],
        }


def random_starts(ctx: FormContext, k: int, seed: int) -> List[CoeffVec]:
    """``k`` starts with nodal values i.i.d. uniform on (0, 1]."""
    rng = np.random.default_rng(seed)
    return [CoeffVec(ctx.space, 1.0 - rng.random(ctx.space.dim)) for _ in range(k)]


def multi_start(
    ctx: FormContext,
    m: NonlinearityModel,
    k: int,
    seed: int,
    opts: SolverOptions = SolverOptions(),
) -> MultiStartResult:
    """Run :func:`minimize` from ``k`` random positive starts and compare results.

    Agreement of all converged nontrivial runs is evidence of uniqueness, not
    a proof: descent only certifies local minimizers.
    """
    if k < 2:
        raise ValueError(f"multi_start needs k >= 2, got {k}")
    reports: List[SolveReport] = []
    failures: List[str] = []
    for idx, u0 in enumerate(random_starts(ctx, k, seed)):
        try:
            reports.append(minimize(ctx, m, u0, opts))
        except ConvergenceError as exc:
            failures.append(exc.code)
            if exc.report is not None:
                reports.append(exc.report)
            logger.warning("start_failed", start=idx, code=exc.code)

    good = [r for r in reports if r.converged and r.is_nontrivial]
    distance: Optional[float] = None
    if len(good) >= 2:
        distance = max(
            float(np.max(np.abs(a.u_star.values - b.u_star.values)))
            for a, b in itertools.combinations(good, 2)
        )
        verdict = "unique" if distance <= opts.tol_unique else "multiple"
    elif any(r.converged for r in reports) and not good:
        verdict = "inconclusive: only trivial minimizer"
    else:
        verdict = "inconclusive"
    logger.info("multi_start_done", k=k, verdict=verdict, distance=distance)
    return MultiStartResult(
        reports=reports, failures=failures, verdict=verdict, max_pairwise_distance=distance
    )
