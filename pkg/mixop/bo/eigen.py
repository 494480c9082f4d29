"""First eigenvalue of ``L_{p,s} + a`` and the Brezis–Oswald quantities.

``λ₁(L + a)`` is the minimum of the Rayleigh quotient

    γ(u) = (Q(u) + ∫ a|u|^p) / ∫ |u|^p

over the P1 space.  At ``p = 2`` it is computed from the dense generalized
symmetric eigenproblem; for every ``p`` it can also be computed by projected
descent on the unit ``L^p`` sphere.  The two paths share one quadrature, so
at ``p = 2`` they agree up to the descent tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import structlog
from scipy.linalg import eigh

from .errors import ConvergenceError
from .forms import FormContext, assemble_p2, j_p, q_form_with_gradient, weighted_mass
from .mesh import (
    CoeffVec,
    FloatArray,
    constant,
    integrate,
    lp_norm,
    pair_with_hats,
    values_at_quadrature,
)
from .minimize import C_ARMIJO, BACKTRACK, NOISE_FACTOR, STEP_MIN, Metric, SobolevMetric
from .nonlinearity import NonlinearityModel, asymptotics
from .utils import format_extended

logger = structlog.get_logger(__name__)

Method = Literal["auto", "dense", "descent"]


@dataclass(frozen=True, eq=False)
class WeightFn:
    """Weight ``a`` sampled on an increasing grid of [0, 1]; may hold ±inf samples."""

    grid: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.shape != values.shape or grid.ndim != 1 or grid.size < 2:
            raise ValueError("weight grid and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0.0) or grid[0] > 0.0 or grid[-1] < 1.0:
            raise ValueError("weight grid must increase and cover [0, 1]")
        if np.any(np.isnan(values)):
            raise ValueError("weight samples must not be NaN")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def const(cls, value: float) -> "WeightFn":
        return cls(np.array([0.0, 1.0]), np.array([value, value], dtype=np.float64))

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def shifted(self, c: float) -> "WeightFn":
        return WeightFn(self.grid, self.values + c)

    def negated(self) -> "WeightFn":
        return WeightFn(self.grid, -self.values)

    def at(self, x: FloatArray) -> FloatArray:
        if not self.is_bounded:
            raise ValueError("cannot evaluate an extended-valued weight pointwise")
        return np.asarray(np.interp(x, self.grid, self.values), dtype=np.float64)


@dataclass(frozen=True)
class EigenOptions:
    tol_eig: Optional[float] = None
    max_iters: int = 10_000
    method: Method = "auto"
    metric: Metric = "sobolev"

    def resolved_method(self, p: float) -> Literal["dense", "descent"]:
        if self.method == "auto":
            return "dense" if p == 2.0 else "descent"
        return self.method

    def resolved_tol(self, method: str) -> float:
        if self.tol_eig is not None:
            return self.tol_eig
        return 1e-10 if method == "dense" else 1e-8


@dataclass(frozen=True, eq=False)
class EigenReport:
    """Smallest eigenvalue with its nonnegative, ``L^p``-normalized eigenfunction.

    ``rayleigh_history`` is nonincreasing up to ``NOISE_FACTOR * max(1, |γ|)`` per
    step for descent runs.
    """

    lambda1: float
    e1: Optional[CoeffVec]
    iterations: int
    converged: bool
    method: str
    lambda2: Optional[float] = None
    rayleigh_history: List[float] = field(default_factory=list)

    def to_document(self) -> Dict[str, Any]:
        return {
            "lambda1": format_extended(self.lambda1),
            "lambda2": None if self.lambda2 is None else format_extended(self.lambda2),
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "rayleigh_history": self.rayleigh_history,
        }


def _weight_term(
    ctx: FormContext, a: WeightFn, u: CoeffVec
) -> Tuple[float, float, FloatArray, FloatArray]:
    """``∫a|u|^p``, ``∫|u|^p`` and their gradients."""
    space, p = ctx.space, ctx.p
    uq = values_at_quadrature(u)
    aq = a.at(space.quad_points)
    powered = np.abs(uq) ** p
    jq = j_p(uq, p)
    weighted = integrate(space, aq * powered)
    plain = integrate(space, powered)
    return (
        weighted,
        plain,
        p * pair_with_hats(space, aq * jq),
        p * pair_with_hats(space, jq),
    )


def rayleigh(ctx: FormContext, a: WeightFn, u: CoeffVec) -> float:
    """``(Q(u) + ∫ a|u|^p) / ‖u‖_p^p``; rejects ``u ≡ 0`` and unbounded weights."""
    return _rayleigh_with_gradient(ctx, a, u)[0]


def _rayleigh_with_gradient(
    ctx: FormContext, a: WeightFn, u: CoeffVec
) -> Tuple[float, FloatArray]:
    if not a.is_bounded:
        raise ValueError("rayleigh needs a bounded weight")
    if not np.any(u.values != 0.0):
        raise ValueError("rayleigh quotient is undefined for u = 0")
    q, grad_q = q_form_with_gradient(ctx, u)
    weighted, plain, grad_w, grad_plain = _weight_term(ctx, a, u)
    value = (q + weighted) / plain
    grad = (grad_q + grad_w - value * grad_plain) / plain
    return value, grad


def _normalized(u: CoeffVec, p: float) -> CoeffVec:
    vals = u.values if float(np.sum(u.values)) >= 0.0 else -u.values
    return CoeffVec(u.space, vals / lp_norm(u, p))


def _dense(ctx: FormContext, a: WeightFn) -> EigenReport:
    space = ctx.space
    mats = assemble_p2(ctx)
    lhs = mats.stiffness + weighted_mass(space, a.at(space.quad_points))
    lhs = 0.5 * (lhs + lhs.T)
    mass = 0.5 * (mats.mass + mats.mass.T)
    n_wanted = min(2, space.dim)
    w, v = eigh(lhs, mass, subset_by_index=[0, n_wanted - 1])
    e1 = _normalized(CoeffVec(space, v[:, 0]), 2.0)
    lam2 = float(w[1]) if n_wanted > 1 else None
    logger.debug("dense_eigensolve", n=space.dim, lambda1=float(w[0]), lambda2=lam2)
    return EigenReport(
        lambda1=float(w[0]),
        e1=e1,
        iterations=1,
        converged=True,
        method="dense",
        lambda2=lam2,
        rayleigh_history=[float(w[0])],
    )


def _descent(
    ctx: FormContext, a: WeightFn, opts: EigenOptions, start: Optional[CoeffVec]
) -> EigenReport:
    space, p = ctx.space, ctx.p
    tol = opts.resolved_tol("descent")
    metric = SobolevMetric(ctx, opts.metric)
    u = _normalized(constant(space, 1.0) if start is None else start, p)
    value, grad = _rayleigh_with_gradient(ctx, a, u)
    history = [value]
    alpha = 1.0 / (float(np.max(np.abs(metric.apply_inverse(grad)))) or 1.0)
    quiet = 0

    for it in range(1, opts.max_iters + 1):
        direction = -metric.apply_inverse(grad)
        slope = float(grad @ direction)
        noise = NOISE_FACTOR * max(1.0, abs(value))
        step = alpha
        while True:
            trial = CoeffVec(space, u.values + step * direction)
            v_t, g_t = _rayleigh_with_gradient(ctx, a, trial)
            if v_t <= value + C_ARMIJO * step * slope or v_t <= value + noise:
                break
            step *= BACKTRACK
            if step < STEP_MIN:
                report = EigenReport(
                    lambda1=value,
                    e1=u,
                    iterations=it - 1,
                    converged=False,
                    method="descent",
                    rayleigh_history=history,
                )
                raise ConvergenceError(
                    "Rayleigh descent found no admissible step above the minimum step",
                    code="line_search_stalled",
                    report=report,
                )
        new_u = _normalized(trial, p)
        v_t, g_t = _rayleigh_with_gradient(ctx, a, new_u)
        s = new_u.values - u.values
        y = g_t - grad
        sy = float(s @ y)
        alpha = metric.inner(s, s) / sy if sy > 0.0 else 2.0 * step
        alpha = float(np.clip(alpha, 1e-12, 1e12))
        change = abs(v_t - value)
        u, value, grad = new_u, v_t, g_t
        history.append(value)
        # two quiet iterations in a row guard against a single short step
        quiet = quiet + 1 if change < tol else 0
        if quiet >= 2:
            logger.debug("eigen_descent_done", iterations=it, lambda1=value)
            return EigenReport(
                lambda1=value,
                e1=u,
                iterations=it,
                converged=True,
                method="descent",
                rayleigh_history=history,
            )

    report = EigenReport(
        lambda1=value,
        e1=u,
        iterations=opts.max_iters,
        converged=False,
        method="descent",
        rayleigh_history=history,
    )
    raise ConvergenceError(
        f"Rayleigh descent did not settle within {opts.max_iters} iterations",
        code="not_converged",
        report=report,
    )


def lambda1(
    ctx: FormContext,
    a: WeightFn,
    opts: EigenOptions = EigenOptions(),
    start: Optional[CoeffVec] = None,
) -> EigenReport:
    """Smallest eigenvalue of ``L_{p,s} + a`` for a bounded weight ``a``.

    ``start`` only affects the descent path (default: constant 1 interpolant).
    """
    if not a.is_bounded:
        raise ValueError("lambda1 needs a bounded weight; use lambda1_bo for ±inf")
    method = opts.resolved_method(ctx.p)
    if method == "dense":
        report = _dense(ctx, a)
    else:
        report = _descent(ctx, a, opts, start)
    logger.info("lambda1", method=method, value=report.lambda1, n_cells=ctx.space.n_cells)
    return report


def _extended_value(a_ext: WeightFn) -> Optional[float]:
    """``±∞`` when the extended weight decides ``λ₁`` symbolically, else ``None``."""
    vals = a_ext.values
    if np.any(vals == -math.inf):
        return -math.inf
    if np.all(vals == math.inf):
        return math.inf
    if np.any(vals == math.inf):
        raise ValueError(
            "weight is +inf on part of the domain only; the support-restricted "
            "eigenvalue is not computed"
        )
    return None


def weighted_eigen(
    ctx: FormContext, a_ext: WeightFn, opts: EigenOptions = EigenOptions()
) -> EigenReport:
    """Like :func:`lambda1` but accepts the extended weights of :func:`lambda1_bo`.

    Infinite results carry no eigenfunction.
    """
    extended = _extended_value(a_ext)
    if extended is None:
        return lambda1(ctx, a_ext, opts)
    logger.info("lambda1_extended", value=format_extended(extended))
    return EigenReport(
        lambda1=extended, e1=None, iterations=0, converged=True, method="extended"
    )


def lambda1_bo(
    ctx: FormContext,
    a_ext: WeightFn,
    opts: EigenOptions = EigenOptions(),
    base: Optional[float] = None,
) -> float:
    """``λ₁(L + a_ext)`` for ``a_ext = -a0`` or ``-a_inf`` (extended real result).

    A ``-∞`` sample marks a set of positive measure where the quotient is
    unbounded below, so the value is ``-∞``; ``a_ext ≡ +∞`` gives ``+∞``.
    Weights that are ``+∞`` on part of Ω only are rejected.  When ``base``
    holds ``λ₁(L)``, a constant finite weight is resolved by the shift
    ``λ₁(L + c) = λ₁(L) + c``.
    """
    extended = _extended_value(a_ext)
    if extended is not None:
        return extended
    if base is not None and np.all(a_ext.values == a_ext.values[0]):
        return base + float(a_ext.values[0])
    return lambda1(ctx, a_ext, opts).lambda1


@dataclass(frozen=True)
class ExistenceVerdict:
    """``λ₁(L - a0) < 0 < λ₁(L - a_inf)``; an equivalence only when ``sharp``."""

    lambda_a0: float
    lambda_ainf: float
    predict_exists: bool
    sharp: bool

    def to_document(self) -> Dict[str, Any]:
        return {
            "lambda_a0": format_extended(self.lambda_a0),
            "lambda_ainf": format_extended(self.lambda_ainf),
            "predict_exists": self.predict_exists,
            "sharp": self.sharp,
        }


def asymptotic_weights(m: NonlinearityModel) -> Tuple[WeightFn, WeightFn]:
    """``(-a0, -a_inf)`` as weights on the model's sample grid."""
    data = asymptotics(m)
    return WeightFn(data.x, -data.a0), WeightFn(data.x, -data.a_inf)


def existence_predicate(
    ctx: FormContext,
    m: NonlinearityModel,
    opts: EigenOptions = EigenOptions(),
    base: Optional[float] = None,
) -> ExistenceVerdict:
    """Evaluate the eigenvalue condition for the existence of a positive solution.

    ``base`` is an already computed ``λ₁(L)``, see :func:`lambda1_bo`.
    """
    minus_a0, minus_ainf = asymptotic_weights(m)
    lam_a0 = lambda1_bo(ctx, minus_a0, opts, base)
    lam_ainf = lambda1_bo(ctx, minus_ainf, opts, base)
    verdict = ExistenceVerdict(
        lambda_a0=lam_a0,
        lambda_ainf=lam_ainf,
        predict_exists=lam_a0 < 0.0 < lam_ainf,
        sharp=ctx.p == 2.0,
    )
    logger.info("existence_predicate", **verdict.to_document())
    return verdict
