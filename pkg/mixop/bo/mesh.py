"""Uniform P1 finite-element space on Ω = (0, 1) with zero exterior values.

A discrete function is stored by its values at the interior nodes
``x_i = i·h`` (``i = 1..n_cells-1``).  The values at ``x = 0`` and ``x = 1``
are zero and the function is identically zero outside ``[0, 1]``, which is
the discrete counterpart of functions vanishing on ``ℝ \\ Ω``.

All integrals over Ω use one shared rule: 5-point Gauss–Legendre on every
cell (see :data:`QUAD_ORDER`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Tuple, Union, overload

import numpy as np
import numpy.typing as npt
import pandas as pd
from numpy.polynomial.legendre import leggauss

FloatArray = npt.NDArray[np.float64]

QUAD_ORDER = 5
MIN_CELLS = 4


def _frozen(values: npt.ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def gauss_on_unit(order: int) -> Tuple[FloatArray, FloatArray]:
    """Gauss–Legendre points and weights mapped to ``[0, 1]``."""
    pts, wts = leggauss(order)
    return _frozen(0.5 * (pts + 1.0)), _frozen(0.5 * wts)


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Uniform mesh of ``n_cells`` cells carrying the exponents ``p`` and ``s``."""

    n_cells: int
    p: float
    s: float
    h: float = field(init=False)
    nodes: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "h", 1.0 / self.n_cells)
        object.__setattr__(
            self, "nodes", _frozen(np.arange(1, self.n_cells) / self.n_cells)
        )

    @property
    def dim(self) -> int:
        """Number of interior nodes (degrees of freedom)."""
        return self.n_cells - 1

    @cached_property
    def all_nodes(self) -> FloatArray:
        """Node coordinates including the two boundary nodes."""
        return _frozen(np.arange(self.n_cells + 1) / self.n_cells)

    @cached_property
    def quad_unit(self) -> Tuple[FloatArray, FloatArray]:
        return gauss_on_unit(QUAD_ORDER)

    @cached_property
    def quad_points(self) -> FloatArray:
        """Physical quadrature points, shape ``(n_cells, QUAD_ORDER)``."""
        xi, _ = self.quad_unit
        left = self.all_nodes[:-1]
        return _frozen(left[:, None] + self.h * xi[None, :])

    @cached_property
    def quad_weights(self) -> FloatArray:
        """Physical quadrature weights, shape ``(n_cells, QUAD_ORDER)``."""
        _, w = self.quad_unit
        return _frozen(np.broadcast_to(self.h * w, (self.n_cells, w.size)))

    def same_as(self, other: "FeSpace") -> bool:
        return (
            self.n_cells == other.n_cells and self.p == other.p and self.s == other.s
        )


@dataclass(frozen=True, eq=False)
class CoeffVec:
    """Interior nodal values of a continuous piecewise-linear function."""

    space: FeSpace
    values: FloatArray

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.shape != (self.space.dim,):
            raise ValueError(
                f"values has shape {values.shape}, expected ({self.space.dim},)"
            )
        object.__setattr__(self, "values", values)

    def full_values(self) -> FloatArray:
        """Nodal values including the zero boundary values."""
        return np.concatenate(([0.0], self.values, [0.0]))

    def scaled(self, factor: float) -> "CoeffVec":
        return CoeffVec(self.space, factor * self.values)

    def with_values(self, values: npt.ArrayLike) -> "CoeffVec":
        return CoeffVec(self.space, np.asarray(values, dtype=np.float64))

    def positive_part(self) -> "CoeffVec":
        return CoeffVec(self.space, np.maximum(self.values, 0.0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def build_space(n_cells: int, p: float, s: float) -> FeSpace:
    """Build the uniform P1 space on (0, 1).

    Raises ``ValueError`` for ``n_cells < 4``, ``p <= 1`` or ``s`` outside (0, 1).
    """
    if int(n_cells) != n_cells or n_cells < MIN_CELLS:
        raise ValueError(
            f"mesh too coarse: n_cells={n_cells} (need an integer >= {MIN_CELLS})"
        )
    if not p > 1.0:
        raise ValueError(f"p must be > 1, got {p}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    return FeSpace(n_cells=int(n_cells), p=float(p), s=float(s))


def zeros(space: FeSpace) -> CoeffVec:
    return CoeffVec(space, np.zeros(space.dim))


def constant(space: FeSpace, value: float) -> CoeffVec:
    """Interpolant of the constant ``value`` (ramping to 0 in the boundary cells)."""
    return CoeffVec(space, np.full(space.dim, float(value)))


def from_function(space: FeSpace, fn: Callable[[FloatArray], npt.ArrayLike]) -> CoeffVec:
    """Nodal interpolant of ``fn``."""
    return CoeffVec(space, np.asarray(fn(space.nodes), dtype=np.float64))


@overload
def evaluate(u: CoeffVec, x: float) -> float: ...


@overload
def evaluate(u: CoeffVec, x: FloatArray) -> FloatArray: ...


def evaluate(u: CoeffVec, x: Union[float, FloatArray]) -> Union[float, FloatArray]:
    """Piecewise-linear interpolation of ``u``; zero for ``x`` outside (0, 1)."""
    out = np.interp(x, u.space.all_nodes, u.full_values(), left=0.0, right=0.0)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=np.float64)


def values_at_quadrature(u: CoeffVec) -> FloatArray:
    """Values of ``u`` at the shared quadrature points, shape ``(n_cells, 5)``."""
    full = u.full_values()
    xi, _ = u.space.quad_unit
    return full[:-1, None] * (1.0 - xi[None, :]) + full[1:, None] * xi[None, :]


def integrate(space: FeSpace, integrand: FloatArray) -> float:
    """Integrate quadrature-point samples over Ω with the shared rule."""
    return float(np.sum(space.quad_weights * integrand))


def pair_with_hats(space: FeSpace, integrand: FloatArray) -> FloatArray:
    """Return ``∫_Ω g φ_i dx`` for every interior hat ``φ_i``.

    ``integrand`` holds ``g`` at the quadrature points.
    """
    xi, _ = space.quad_unit
    weighted = space.quad_weights * integrand
    to_left = weighted @ (1.0 - xi)
    to_right = weighted @ xi
    acc = np.zeros(space.n_cells + 1)
    acc[:-1] += to_left
    acc[1:] += to_right
    return acc[1:-1]


def lp_norm(u: CoeffVec, q: float) -> float:
    """``(∫_Ω |u|^q dx)^(1/q)`` with per-cell 5-point Gauss quadrature."""
    if not q >= 1.0:
        raise ValueError(f"q must be >= 1, got {q}")
    total = integrate(u.space, np.abs(values_at_quadrature(u)) ** q)
    return float(total ** (1.0 / q))


def interpolate_to(u: CoeffVec, finer: FeSpace) -> CoeffVec:
    """Prolongate ``u`` onto ``finer``; exact when the meshes are nested."""
    if finer.n_cells % u.space.n_cells != 0:
        raise ValueError(
            f"target mesh ({finer.n_cells} cells) is not a refinement of "
            f"{u.space.n_cells} cells"
        )
    return CoeffVec(finer, evaluate(u, finer.nodes))


def profile_frame(u: CoeffVec) -> pd.DataFrame:
    """Profile table with columns ``x,value`` including the boundary rows."""
    return pd.DataFrame({"x": u.space.all_nodes, "value": u.full_values()})
