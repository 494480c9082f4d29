"""Parametric sublinear nonlinearities and their asymptotic data.

The family is

    f(x, t) = c(x)·t^θ + λ·t^(p-1) - b(x)·t^(q-1),     t >= 0,

with bounded nonnegative coefficients ``c`` and ``b``, ``0 <= θ < p-1`` and
``q > p``.  Every member has ``t ↦ f(x, t)/t^(p-1)`` strictly decreasing as
soon as ``c`` or ``b`` is nonzero, and its limits at 0 and ∞ (``a0`` and
``a_inf``) are available in closed form.  Arbitrary callables are not
accepted because their asymptotic data could not be computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union, overload

import numpy as np
import numpy.typing as npt
import structlog
from scipy.optimize import brentq

from .utils import format_extended

FloatArray = npt.NDArray[np.float64]
ArrayOrFloat = Union[float, FloatArray]

logger = structlog.get_logger(__name__)

RHO_CAP = 1.0
DEFAULT_SAMPLES = 65


@dataclass(frozen=True, eq=False)
class Coefficient:
    """Bounded nonnegative coefficient given by samples on a uniform grid of [0, 1].

    A single sample denotes a constant.  Between samples the coefficient is
    linear, so a coefficient that is zero at two adjacent samples vanishes on
    the whole sub-interval.
    """

    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.atleast_1d(np.array(self.values, dtype=np.float64))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficient samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient samples must be finite (bounded coefficient)")
        if np.any(arr < 0.0):
            raise ValueError("coefficient samples must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def const(cls, value: float) -> "Coefficient":
        return cls(np.array([value], dtype=np.float64))

    @property
    def is_constant(self) -> bool:
        return self.values.size == 1 or bool(np.all(self.values == self.values[0]))

    @property
    def grid(self) -> FloatArray:
        if self.values.size == 1:
            return np.array([0.0, 1.0])
        return np.linspace(0.0, 1.0, self.values.size)

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    def is_zero(self) -> bool:
        return not bool(np.any(self.values > 0.0))

    def __call__(self, x: ArrayOrFloat) -> ArrayOrFloat:
        if self.values.size == 1:
            out = np.full(np.shape(x), self.values[0])
        else:
            out = np.interp(x, self.grid, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def to_document(self) -> Union[float, list[float]]:
        if self.is_constant:
            return float(self.values[0])
        return [float(v) for v in self.values]


@dataclass(frozen=True, eq=False)
class NonlinearityModel:
    """``f(x,t) = c(x)t^θ + λt^(p-1) - b(x)t^(q-1)`` for the exponent ``p``."""

    p: float
    c_coeff: Coefficient
    theta: float
    lambda_lin: float
    b_coeff: Coefficient
    q_exp: float
    family: str = field(default="general")

    def __post_init__(self) -> None:
        if not self.p > 1.0:
            raise ValueError(f"p must be > 1, got {self.p}")
        if not 0.0 <= self.theta < self.p - 1.0:
            raise ValueError(
                f"theta must satisfy 0 <= theta < p-1 = {self.p - 1.0}, got {self.theta}"
            )
        if not self.q_exp > self.p:
            raise ValueError(f"q must exceed p = {self.p}, got {self.q_exp}")
        if not math.isfinite(self.lambda_lin):
            raise ValueError("lambda_lin must be finite")
        if _vanishes_on_interval(self.c_coeff, self.b_coeff):
            raise ValueError(
                "f4 violated: c and b vanish together on a sub-interval, so "
                "f(x,t)/t^(p-1) is constant there"
            )

    def sample_points(self, n: int = DEFAULT_SAMPLES) -> FloatArray:
        """Uniform samples of [0, 1] merged with the coefficient breakpoints."""
        pts = np.union1d(np.linspace(0.0, 1.0, n), self.c_coeff.grid)
        return np.union1d(pts, self.b_coeff.grid)

    def to_document(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "p": self.p,
            "theta": self.theta,
            "lambda_lin": self.lambda_lin,
            "q": self.q_exp,
            "c": self.c_coeff.to_document(),
            "b": self.b_coeff.to_document(),
        }


def _vanishes_on_interval(c: Coefficient, b: Coefficient) -> bool:
    pts = np.union1d(c.grid, b.grid)
    total = np.asarray(c(pts)) + np.asarray(b(pts))
    zero = total <= 0.0
    return bool(np.any(zero[:-1] & zero[1:]))


def power_model(p: float, theta: float, c: float = 1.0) -> NonlinearityModel:
    """``f = c·t^θ``: a0 ≡ +∞, a_inf ≡ 0."""
    return NonlinearityModel(
        p=p,
        c_coeff=Coefficient.const(c),
        theta=theta,
        lambda_lin=0.0,
        b_coeff=Coefficient.const(0.0),
        q_exp=p + 1.0,
        family="power",
    )


def logistic_model(
    p: float, lambda_lin: float, b: float = 1.0, q: Optional[float] = None
) -> NonlinearityModel:
    """``f = λt^(p-1) - b·t^(q-1)``: a0 ≡ λ, a_inf ≡ -∞.  ``q`` defaults to ``p + 2``."""
    return NonlinearityModel(
        p=p,
        c_coeff=Coefficient.const(0.0),
        theta=0.0,
        lambda_lin=lambda_lin,
        b_coeff=Coefficient.const(b),
        q_exp=p + 2.0 if q is None else q,
        family="logistic",
    )


def _check_t(t: ArrayOrFloat) -> None:
    if np.any(np.asarray(t) < 0.0):
        raise ValueError("t must be nonnegative")


def _out(value: Any) -> ArrayOrFloat:
    return float(value) if np.ndim(value) == 0 else np.asarray(value, dtype=np.float64)


@overload
def eval_f(m: NonlinearityModel, x: float, t: float) -> float: ...


@overload
def eval_f(m: NonlinearityModel, x: ArrayOrFloat, t: FloatArray) -> FloatArray: ...


def eval_f(m: NonlinearityModel, x: ArrayOrFloat, t: ArrayOrFloat) -> ArrayOrFloat:
    """``f(x, t)`` for ``t >= 0`` (vectorized over ``x`` and ``t``)."""
    _check_t(t)
    t_arr = np.asarray(t, dtype=np.float64)
    value = (
        np.asarray(m.c_coeff(x)) * t_arr**m.theta
        + m.lambda_lin * t_arr ** (m.p - 1.0)
        - np.asarray(m.b_coeff(x)) * t_arr ** (m.q_exp - 1.0)
    )
    return _out(value)


def eval_F(m: NonlinearityModel, x: ArrayOrFloat, t: ArrayOrFloat) -> ArrayOrFloat:  # noqa: N802
    """Primitive ``F(x, t) = ∫_0^t f(x, τ) dτ`` in closed form."""
    _check_t(t)
    t_arr = np.asarray(t, dtype=np.float64)
    value = (
        np.asarray(m.c_coeff(x)) * t_arr ** (m.theta + 1.0) / (m.theta + 1.0)
        + m.lambda_lin * t_arr**m.p / m.p
        - np.asarray(m.b_coeff(x)) * t_arr**m.q_exp / m.q_exp
    )
    return _out(value)


def eval_f_ratio(m: NonlinearityModel, x: ArrayOrFloat, t: ArrayOrFloat) -> ArrayOrFloat:
    """``f(x, t)/t^(p-1)`` for ``t > 0``."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr <= 0.0):
        raise ValueError("t must be positive")
    value = (
        np.asarray(m.c_coeff(x)) * t_arr ** (m.theta - m.p + 1.0)
        + m.lambda_lin
        - np.asarray(m.b_coeff(x)) * t_arr ** (m.q_exp - m.p)
    )
    return _out(value)


def growth_constant(m: NonlinearityModel) -> float:
    """Constant ``C`` with ``|f(x,t)| <= C(1 + t^(q-1))``."""
    return m.c_coeff.sup + abs(m.lambda_lin) + m.b_coeff.sup


@dataclass(frozen=True, eq=False)
class AsymptoticData:
    """Samples of ``a0``/``a_inf`` plus ``c_f`` and ``rho_f`` (``None`` when (f5) fails)."""

    x: FloatArray
    a0: FloatArray
    a_inf: FloatArray
    c_f: float
    rho_f: Optional[float]

    def to_document(self) -> Dict[str, Any]:
        def _summary(arr: FloatArray) -> Any:
            if np.all(arr == arr[0]):
                return format_extended(float(arr[0]))
            return [format_extended(float(v)) for v in arr]

        return {
            "a0": _summary(self.a0),
            "a_inf": _summary(self.a_inf),
            "c_f": self.c_f,
            "rho_f": self.rho_f,
        }


def _rho_at(m: NonlinearityModel, x: float) -> Optional[float]:
    def ratio(t: float) -> float:
        return float(eval_f_ratio(m, x, t))

    if ratio(RHO_CAP) > 0.0:
        return RHO_CAP
    c = float(m.c_coeff(x))
    if c <= 0.0 and m.lambda_lin <= 0.0:
        return None
    t_lo = 1e-12
    while ratio(t_lo) <= 0.0:
        t_lo *= 1e-6
        if t_lo < 1e-290:
            return None
    return float(brentq(ratio, t_lo, RHO_CAP, xtol=1e-14, rtol=1e-12))


def asymptotics(m: NonlinearityModel, x: Optional[FloatArray] = None) -> AsymptoticData:
    """Closed-form ``a0``, ``a_inf`` and the derived ``c_f``, ``rho_f``.

    ``a0(x) = +∞`` where ``c(x) > 0`` and ``λ`` elsewhere; ``a_inf(x) = -∞``
    where ``b(x) > 0`` and ``λ`` elsewhere.  ``rho_f`` is found by bracketing
    the root of ``f(x, ·)`` on (0, 1] at every sample and is capped at 1.
    """
    xs = m.sample_points() if x is None else np.asarray(x, dtype=np.float64)
    c = np.asarray(m.c_coeff(xs))
    b = np.asarray(m.b_coeff(xs))
    a0 = np.where(c > 0.0, math.inf, m.lambda_lin)
    a_inf = np.where(b > 0.0, -math.inf, m.lambda_lin)
    c_f = float(np.max(np.abs(np.asarray(eval_f(m, xs, np.ones_like(xs))))))
    rhos = [_rho_at(m, float(xv)) for xv in xs]
    rho_f: Optional[float] = None
    if all(r is not None for r in rhos):
        rho_f = float(min(r for r in rhos if r is not None))
    logger.debug("asymptotics", family=m.family, c_f=c_f, rho_f=rho_f)
    return AsymptoticData(x=xs, a0=a0, a_inf=a_inf, c_f=c_f, rho_f=rho_f)
