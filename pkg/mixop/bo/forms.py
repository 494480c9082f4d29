"""Local and nonlocal p-Dirichlet forms on the P1 space.

For ``u`` vanishing outside Ω = (0, 1) the form

    Q(u) = ∫_Ω |u'|^p dx + ∬_{ℝ×ℝ} |u(x) - u(y)|^p |x - y|^(-1-ps) dx dy

splits into the interior double integral over Ω×Ω and the exterior tail
``2 ∫_Ω |u(x)|^p ω(x) dx`` with ``ω(x) = (x^(-ps) + (1-x)^(-ps))/(ps)``.
The interior double integral is summed over pairs of cells:

* identical cells: ``u(x) - u(y)`` is the slope times ``x - y``, which gives a
  closed form;
* cells sharing a vertex: the integrand is homogeneous around the vertex, so
  the radial factor is exact and the angular factor uses a rule of order
  ``diag_order``;
* separated cells ``i = j + m``: along each line ``τ = ξ - η`` of local
  coordinates the difference is linear, and its ``p``-th power is integrated
  exactly.  The remaining integral over ``τ`` uses order ``diag_order`` for
  ``m <= 3`` and ``far_order`` beyond.

``|t|^p`` is only smooth at 0 when ``p`` is an even integer.  Otherwise every
one-dimensional rule is split where its linear argument changes sign.  Each
piece is halved and each half is graded toward its outer end, so power-type
endpoint factors become smooth.

In the two boundary cells the tail's singular factor is integrated exactly.
Every energy has a matching gradient with respect to the nodal values built
on the same nodes.  The forms carry no 1/2 factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import structlog

from .mesh import (
    CoeffVec,
    FeSpace,
    FloatArray,
    gauss_on_unit,
    pair_with_hats,
    values_at_quadrature,
)
from .nonlinearity import NonlinearityModel, eval_f

logger = structlog.get_logger(__name__)

IntArray = npt.NDArray[np.intp]
Rule = Tuple[FloatArray, FloatArray]

DEFAULT_DIAG_ORDER = 6
DEFAULT_FAR_ORDER = 4
MIN_ORDER = 3
NEAR_GAP = 3
CLOSE_RATIO = 0.1
SEGMENT_ORDER = 6

_SEGMENT_T, _SEGMENT_W = gauss_on_unit(SEGMENT_ORDER)

# Nodal values of a pair are ordered (u_i, u_{i+1}, u_j, u_{j+1}).  On each
# half of τ ∈ [-1, 1] the differences at both ends of the line ξ - η = τ are
# (c0 + τ c1) · values.
_A = np.array([1.0, 0.0, -1.0, 0.0])
_B = np.array([0.0, 1.0, 0.0, -1.0])
_DA = np.array([-1.0, 1.0, 0.0, 0.0])
_DB = np.array([0.0, 0.0, -1.0, 1.0])
_HALVES = (
    ((-1.0, 0.0), (_A, _DB), (_B, _DA)),
    ((0.0, 1.0), (_A, _DA), (_B, _DB)),
)


def j_p(t: Union[float, FloatArray], p: float) -> Union[float, FloatArray]:
    """``J_p(t) = |t|^(p-2) t`` in sign form, with ``J_p(0) = 0``."""
    out = np.sign(t) * np.abs(t) ** (p - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def segment_mean(
    z0: FloatArray, z1: FloatArray, p: float
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """Mean of ``|z|^p`` along the segment from ``z0`` to ``z1`` and its two partials.

    Uses the divided difference of ``Φ(z) = |z|^p z/(p+1)``.  Ends closer than
    ``CLOSE_RATIO`` of their size fall back to a Gauss rule, which never sees
    a sign change there.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    dz = z1 - z0
    pow0, pow1 = np.abs(z0) ** p, np.abs(z1) ** p
    close = np.abs(dz) <= CLOSE_RATIO * np.maximum(np.abs(z0), np.abs(z1))
    safe = np.where(close, 1.0, dz)
    mean = (pow1 * z1 - pow0 * z0) / ((p + 1.0) * safe)
    d0 = (mean - pow0) / safe
    d1 = (pow1 - mean) / safe
    if np.any(close):
        t, w = _SEGMENT_T, _SEGMENT_W
        zc = z0[close][:, None] * (1.0 - t) + z1[close][:, None] * t
        jz = p * j_p(zc, p)
        mean[close] = np.abs(zc) ** p @ w
        d0[close] = (jz * (1.0 - t)) @ w
        d1[close] = (jz * t) @ w
    return mean, d0, d1


def _crossing(
    z_lo: FloatArray, z_hi: FloatArray, lo: float, hi: float
) -> FloatArray:
    """Zero of the linear function with end values ``z_lo``, ``z_hi`` on ``[lo, hi]``.

    Rows without a strict sign change get ``lo``, which adds an empty piece.
    """
    change = z_lo * z_hi < 0.0
    denom = np.where(change, z_lo - z_hi, 1.0)
    return np.where(change, lo + (hi - lo) * z_lo / denom, lo)


def _graded(
    lo: FloatArray, hi: FloatArray, breaks: FloatArray, sigma: FloatArray, weights: FloatArray
) -> Tuple[FloatArray, FloatArray]:
    """Per-row rule on ``[lo, hi]`` split at ``breaks``, shape ``(rows, 2(nb+1)k)``.

    Each piece is halved; the half with outer end ``e`` and midpoint ``c`` uses
    ``t = e + (c - e)σ²``, so a factor ``|t - e|^α`` becomes ``σ^(2α+1)``.
    """
    lo_col = np.asarray(lo, dtype=np.float64)[:, None]
    hi_col = np.asarray(hi, dtype=np.float64)[:, None]
    inner = np.sort(np.clip(breaks, lo_col, hi_col), axis=1)
    edges = np.concatenate([lo_col, inner, hi_col], axis=1)
    ends = np.stack([edges[:, :-1], edges[:, 1:]], axis=-1)
    half = 0.5 * np.diff(edges, axis=1)[..., None] * np.array([1.0, -1.0])
    nodes = ends[..., None] + half[..., None] * sigma**2
    wts = 2.0 * np.abs(half)[..., None] * sigma * weights
    rows = edges.shape[0]
    return nodes.reshape(rows, -1), wts.reshape(rows, -1)


def _slopes(full: FloatArray, h: float) -> FloatArray:
    return np.diff(full) / h


def _slopes_adjoint(g: FloatArray, h: float) -> FloatArray:
    """Transpose of the slope map restricted to interior nodes."""
    acc = np.zeros(g.size + 1)
    acc[1:] += g / h
    acc[:-1] -= g / h
    return acc[1:-1]


def _basis_matrix(space: FeSpace, xi: FloatArray) -> FloatArray:
    """Dense evaluation matrix from interior nodal values to cell points."""
    n_cells, k = space.n_cells, xi.size
    mat = np.zeros((n_cells, k, space.dim))
    for cell in range(n_cells):
        if cell >= 1:
            mat[cell, :, cell - 1] = 1.0 - xi
        if cell <= n_cells - 2:
            mat[cell, :, cell] = xi
    return mat.reshape(n_cells * k, space.dim)


def _slope_matrix(space: FeSpace) -> FloatArray:
    mat = np.zeros((space.n_cells, space.dim))
    for cell in range(space.n_cells):
        if cell >= 1:
            mat[cell, cell - 1] = -1.0 / space.h
        if cell <= space.n_cells - 2:
            mat[cell, cell] = 1.0 / space.h
    return mat


@dataclass(frozen=True, eq=False)
class PairGroup:
    """Separated cell pairs ``i = j + gap`` that share one Gauss rule."""

    nodes: IntArray
    gap: FloatArray
    rule: Rule

    @property
    def size(self) -> int:
        return int(self.gap.size)


@dataclass(frozen=True, eq=False)
class FormContext:
    """Quadrature data for evaluating the forms on one space."""

    space: FeSpace
    diag_order: int = DEFAULT_DIAG_ORDER
    far_order: int = DEFAULT_FAR_ORDER
    diag_rule: Rule = field(init=False)
    far_rule: Rule = field(init=False)

    def __post_init__(self) -> None:
        for name in ("diag_order", "far_order"):
            order = getattr(self, name)
            if int(order) != order or order < MIN_ORDER:
                raise ValueError(f"{name} must be an integer >= {MIN_ORDER}, got {order}")
        object.__setattr__(self, "diag_rule", gauss_on_unit(self.diag_order))
        object.__setattr__(self, "far_rule", gauss_on_unit(self.far_order))

    @property
    def p(self) -> float:
        return self.space.p

    @property
    def ps(self) -> float:
        return self.space.p * self.space.s

    @property
    def smooth(self) -> bool:
        """``|t|^p`` is a polynomial, so no rule is split at sign changes."""
        return self.p % 2.0 == 0.0

    @cached_property
    def identical_const(self) -> float:
        """``∬_{K×K} |x-y|^α`` with ``α = p-1-ps``, per unit slope."""
        alpha = self.p - 1.0 - self.ps
        h = self.space.h
        return 2.0 * h ** (alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0))

    @cached_property
    def touching_radial(self) -> float:
        """Exact radial factor ``∫_0^h r^(p-ps) dr`` around the shared vertex."""
        expo = self.p - self.ps + 1.0
        return self.space.h**expo / expo

    @cached_property
    def boundary_tail_const(self) -> float:
        """Exact ``2∫_0^h (x/h)^p x^(-ps)/(ps) dx`` for the boundary cells."""
        h, ps = self.space.h, self.ps
        return 2.0 * h ** (1.0 - ps) / ((self.p - ps + 1.0) * ps)

    @cached_property
    def unit_nodes(self) -> Rule:
        """The unsplit graded rule of order ``diag_order`` on ``[0, 1]``."""
        t, w = _graded(np.zeros(1), np.ones(1), np.empty((1, 0)), *self.diag_rule)
        return t[0], w[0]

    @cached_property
    def tail_point_weights(self) -> FloatArray:
        """Tail weights on the unsplit cell rule, shape ``(n_cells, k)``."""
        xi, w = self.unit_nodes
        rows = self.space.n_cells
        return _tail_weights(self, np.broadcast_to(xi, (rows, xi.size)), w)

    @cached_property
    def pair_groups(self) -> Tuple[PairGroup, PairGroup]:
        """Separated pairs up to ``NEAR_GAP`` cells apart, then the rest."""
        j, i = np.triu_indices(self.space.n_cells, k=2)
        gap = i - j
        nodes = np.stack([i, i + 1, j, j + 1], axis=1)
        near = gap <= NEAR_GAP
        return (
            PairGroup(nodes[near], gap[near].astype(np.float64), self.diag_rule),
            PairGroup(nodes[~near], gap[~near].astype(np.float64), self.far_rule),
        )


def build_context(
    space: FeSpace,
    diag_order: int = DEFAULT_DIAG_ORDER,
    far_order: int = DEFAULT_FAR_ORDER,
) -> FormContext:
    return FormContext(space=space, diag_order=diag_order, far_order=far_order)


@dataclass(frozen=True, eq=False)
class GradientVec:
    """Derivative of a discrete energy in the directions of the interior hats."""

    space: FeSpace
    values: FloatArray

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def normalized_inf(self) -> float:
        """``max_i |r_i| / ∫φ_i``, a mesh-independent residual size."""
        return self.max_abs() / self.space.h


def _unit_rule(ctx: FormContext, z_start: FloatArray, z_end: FloatArray) -> Rule:
    """Graded rule on ``[0, 1]`` per row, split where ``z`` changes sign."""
    rows = z_start.size
    if ctx.smooth:
        breaks = np.empty((rows, 0))
    else:
        breaks = _crossing(z_start, z_end, 0.0, 1.0)[:, None]
    return _graded(np.zeros(rows), np.ones(rows), breaks, *ctx.diag_rule)


def _tail_weights(ctx: FormContext, xi: FloatArray, w: FloatArray) -> FloatArray:
    """``2 h w ω(x)`` without the factors integrated exactly in the boundary cells."""
    space, ps = ctx.space, ctx.ps
    x = space.all_nodes[:-1, None] + space.h * xi
    left = x ** (-ps)
    right = (1.0 - x) ** (-ps)
    left[0] = 0.0
    right[-1] = 0.0
    return 2.0 * space.h * w * (left + right) / ps


def _pair_rule(
    ctx: FormContext, group: PairGroup, half: tuple, vals: Optional[FloatArray] = None
) -> Rule:
    """Nodes in ``τ`` and kernel weights for one half of every pair in ``group``."""
    (lo, hi), lo_coef, hi_coef = half
    rows = group.size
    if vals is None or ctx.smooth:
        breaks = np.empty((rows, 0))
    else:
        breaks = np.stack(
            [
                _crossing(vals @ (c0 + lo * c1), vals @ (c0 + hi * c1), lo, hi)
                for c0, c1 in (lo_coef, hi_coef)
            ],
            axis=1,
        )
    tau, w = _graded(np.full(rows, lo), np.full(rows, hi), breaks, *group.rule)
    kernel = (group.gap[:, None] + tau) ** (-1.0 - ctx.ps) * (1.0 - np.abs(tau))
    return tau, 2.0 * ctx.space.h ** (1.0 - ctx.ps) * w * kernel


# -- local part -------------------------------------------------------------


def _local(ctx: FormContext, full: FloatArray) -> Tuple[float, FloatArray]:
    h, p = ctx.space.h, ctx.p
    d = _slopes(full, h)
    value = float(h * np.sum(np.abs(d) ** p))
    grad = _slopes_adjoint(p * h * j_p(d, p), h)
    return value, grad


def local_energy(ctx: FormContext, u: CoeffVec) -> float:
    """``∫_Ω |u'|^p dx``, exact for P1 functions."""
    return _local(ctx, u.full_values())[0]


# -- nonlocal part ----------------------------------------------------------


def _identical(ctx: FormContext, d: FloatArray) -> Tuple[float, FloatArray]:
    p = ctx.p
    value = ctx.identical_const * float(np.sum(np.abs(d) ** p))
    return value, ctx.identical_const * p * j_p(d, p)


def _touching(ctx: FormContext, d: FloatArray) -> Tuple[float, FloatArray]:
    p = ctx.p
    scale = 2.0 * ctx.touching_radial
    left, right = slice(None, -1), slice(1, None)
    value = 0.0
    grad = np.zeros_like(d)
    # the two triangles of the square integrate |a + bt|^p and |b + at|^p
    for lead, trail in ((left, right), (right, left)):
        a, b = d[lead], d[trail]
        t, w = _unit_rule(ctx, a, a + b)
        wt = scale * w * (1.0 + t) ** (-1.0 - ctx.ps)
        z = a[:, None] + b[:, None] * t
        value += float(np.sum(wt * np.abs(z) ** p))
        jz = p * wt * j_p(z, p)
        grad[lead] += np.sum(jz, axis=1)
        grad[trail] += np.sum(jz * t, axis=1)
    return value, grad


def _pairs(ctx: FormContext, full: FloatArray) -> Tuple[float, FloatArray]:
    p = ctx.p
    value = 0.0
    grad = np.zeros_like(full)
    for group in ctx.pair_groups:
        vals = full[group.nodes]
        for half in _HALVES:
            tau, wt = _pair_rule(ctx, group, half, vals)
            _, (a0, a1), (b0, b1) = half
            z_lo = (vals @ a0)[:, None] + (vals @ a1)[:, None] * tau
            z_hi = (vals @ b0)[:, None] + (vals @ b1)[:, None] * tau
            mean, d_lo, d_hi = segment_mean(z_lo, z_hi, p)
            value += float(np.sum(wt * mean))
            g_lo, g_hi = wt * d_lo, wt * d_hi
            g_vals = (
                np.outer(np.sum(g_lo, axis=1), a0)
                + np.outer(np.sum(g_lo * tau, axis=1), a1)
                + np.outer(np.sum(g_hi, axis=1), b0)
                + np.outer(np.sum(g_hi * tau, axis=1), b1)
            )
            np.add.at(grad, group.nodes, g_vals)
    return value, grad[1:-1]


def _tail(ctx: FormContext, full: FloatArray) -> Tuple[float, FloatArray]:
    p = ctx.p
    left, right = full[:-1], full[1:]
    xi, w = _unit_rule(ctx, left, right)
    tw = _tail_weights(ctx, xi, w)
    uq = left[:, None] * (1.0 - xi) + right[:, None] * xi
    cb = ctx.boundary_tail_const
    ends = np.array([full[1], full[-2]])
    value = float(np.sum(tw * np.abs(uq) ** p)) + cb * float(np.sum(np.abs(ends) ** p))
    g = p * tw * j_p(uq, p)
    acc = np.zeros_like(full)
    acc[:-1] += np.sum(g * (1.0 - xi), axis=1)
    acc[1:] += np.sum(g * xi, axis=1)
    grad = acc[1:-1]
    end_grad = cb * p * j_p(ends, p)
    grad[0] += end_grad[0]
    grad[-1] += end_grad[1]
    return value, grad


def _nonlocal(ctx: FormContext, full: FloatArray) -> Tuple[float, FloatArray]:
    h = ctx.space.h
    d = _slopes(full, h)
    v_id, g_id = _identical(ctx, d)
    v_to, g_to = _touching(ctx, d)
    v_pair, grad = _pairs(ctx, full)
    v_tail, g_tail = _tail(ctx, full)
    grad = grad + g_tail + _slopes_adjoint(g_id + g_to, h)
    return v_id + v_to + v_pair + v_tail, grad


def nonlocal_energy(ctx: FormContext, u: CoeffVec) -> float:
    """``∬_{ℝ×ℝ} |u(x)-u(y)|^p |x-y|^(-1-ps) dx dy`` for ``u`` zero off Ω."""
    return _nonlocal(ctx, u.full_values())[0]


def q_form(ctx: FormContext, u: CoeffVec) -> float:
    """``Q_{p,s}(u)``: local plus nonlocal energy."""
    return local_energy(ctx, u) + nonlocal_energy(ctx, u)


def q_form_with_gradient(ctx: FormContext, u: CoeffVec) -> Tuple[float, FloatArray]:
    """``Q(u)`` and its gradient with respect to the interior nodal values."""
    full = u.full_values()
    v_loc, g_loc = _local(ctx, full)
    v_nl, g_nl = _nonlocal(ctx, full)
    return v_loc + v_nl, g_loc + g_nl


def local_pairing(ctx: FormContext, u: CoeffVec) -> FloatArray:
    """``∫ |u'|^(p-2) u' φ_i'`` for every hat ``φ_i``."""
    return _local(ctx, u.full_values())[1] / ctx.p


def nonlocal_pairing(ctx: FormContext, u: CoeffVec) -> FloatArray:
    """``∬ J_p(u(x)-u(y))(φ_i(x)-φ_i(y)) |x-y|^(-1-ps)`` for every hat ``φ_i``."""
    return _nonlocal(ctx, u.full_values())[1] / ctx.p


def load_vector(ctx: FormContext, m: NonlinearityModel, u: CoeffVec) -> FloatArray:
    """``∫_Ω f(x, u⁺) 1_{u>0} φ_i dx`` with the shared 5-point rule."""
    space = ctx.space
    uq = values_at_quadrature(u)
    positive = uq > 0.0
    fq = np.zeros_like(uq)
    if np.any(positive):
        fq[positive] = eval_f(m, space.quad_points[positive], uq[positive])
    return pair_with_hats(space, fq)


def residual(ctx: FormContext, u: CoeffVec, m: NonlinearityModel) -> GradientVec:
    """Weak-form residual tested against every interior hat.

    Entry ``i`` is ``a_local(u, φ_i) + a_nonlocal(u, φ_i) - ∫ f(x, u) φ_i``;
    it equals the partial derivative of ``Q(u)/p - ∫ F(x, u⁺)``.
    """
    _, grad_q = q_form_with_gradient(ctx, u)
    return GradientVec(ctx.space, grad_q / ctx.p - load_vector(ctx, m, u))


# -- p = 2 matrices ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class P2Matrices:
    """Dense matrices of the quadratic forms at ``p = 2``."""

    local: FloatArray
    nonlocal_: FloatArray
    mass: FloatArray

    @property
    def stiffness(self) -> FloatArray:
        return self.local + self.nonlocal_


def _quadratic_blocks(
    a0: FloatArray, a1: FloatArray, b0: FloatArray, b1: FloatArray
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """``(z_lo² + z_lo z_hi + z_hi²)/3 = vᵀ(B0 + τB1 + τ²B2)v`` for ``z = (c0 + τc1)·v``."""

    def sym(x: FloatArray, y: FloatArray) -> FloatArray:
        return 0.5 * (np.outer(x, y) + np.outer(y, x))

    return (
        (sym(a0, a0) + sym(a0, b0) + sym(b0, b0)) / 3.0,
        (2.0 * sym(a0, a1) + sym(a0, b1) + sym(a1, b0) + 2.0 * sym(b0, b1)) / 3.0,
        (sym(a1, a1) + sym(a1, b1) + sym(b1, b1)) / 3.0,
    )


def _pairs_p2(ctx: FormContext) -> FloatArray:
    size = ctx.space.n_cells + 1
    mat = np.zeros((size, size))
    for group in ctx.pair_groups:
        idx = group.nodes
        for half in _HALVES:
            tau, wt = _pair_rule(ctx, group, half)
            _, (a0, a1), (b0, b1) = half
            blocks = _quadratic_blocks(a0, a1, b0, b1)
            local = sum(
                np.sum(wt * tau**k, axis=1)[:, None, None] * block
                for k, block in enumerate(blocks)
            )
            np.add.at(mat, (idx[:, :, None], idx[:, None, :]), local)
    return mat[1:-1, 1:-1]


def assemble_p2(ctx: FormContext) -> P2Matrices:
    """Assemble ``Q(u) = uᵀ(A_loc + A_nl)u`` and the L² mass matrix at ``p = 2``.

    The nonlocal matrix uses the same quadrature as :func:`nonlocal_energy`,
    so both agree up to rounding.
    """
    if ctx.p != 2.0:
        raise ValueError(f"matrix assembly needs p = 2, got p = {ctx.p}")
    space = ctx.space
    h = space.h
    slope = _slope_matrix(space)
    local = h * slope.T @ slope

    t, w = ctx.unit_nodes
    wt = w * (1.0 + t) ** (-1.0 - ctx.ps)
    m0, m1, m2 = float(np.sum(wt)), float(wt @ t), float(wt @ t**2)
    radial = ctx.touching_radial
    touch = np.zeros((space.n_cells, space.n_cells))
    for cell in range(space.n_cells - 1):
        touch[cell, cell] += 2.0 * radial * (m0 + m2)
        touch[cell + 1, cell + 1] += 2.0 * radial * (m0 + m2)
        touch[cell, cell + 1] += 4.0 * radial * m1
        touch[cell + 1, cell] += 4.0 * radial * m1
    touch += ctx.identical_const * np.eye(space.n_cells)
    nonlocal_ = slope.T @ touch @ slope
    nonlocal_ += _pairs_p2(ctx)

    tail_basis = _basis_matrix(space, t)
    nonlocal_ += tail_basis.T @ (ctx.tail_point_weights.ravel()[:, None] * tail_basis)
    nonlocal_[0, 0] += ctx.boundary_tail_const
    nonlocal_[-1, -1] += ctx.boundary_tail_const

    mass = weighted_mass(space, np.ones_like(space.quad_points))
    logger.debug("assembled_p2", n_cells=space.n_cells)
    return P2Matrices(local=local, nonlocal_=nonlocal_, mass=mass)


def weighted_mass(space: FeSpace, weight_at_quadrature: FloatArray) -> FloatArray:
    """``∫ a φ_i φ_j`` with ``a`` given at the shared quadrature points."""
    xi, _ = space.quad_unit
    basis = _basis_matrix(space, xi)
    scaled = (space.quad_weights * weight_at_quadrature).ravel()
    return basis.T @ (scaled[:, None] * basis)


# -- elementary inequalities -----------------------------------------------


def ap_gap(v: npt.ArrayLike, w: npt.ArrayLike, p: float) -> Union[float, FloatArray]:
    """``|v|^p + (p-1)|w|^p - p|w|^(p-2)⟨v, w⟩``, nonnegative for all ``v, w``.

    Vectors run along the last axis, so batches can be passed at once.  The
    term ``|w|^(p-2)⟨v, w⟩`` is 0 when ``w = 0``.
    """
    v_arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    w_arr = np.atleast_1d(np.asarray(w, dtype=np.float64))
    nv = np.linalg.norm(v_arr, axis=-1)
    nw = np.linalg.norm(w_arr, axis=-1)
    inner = np.sum(v_arr * w_arr, axis=-1)
    safe = np.where(nw > 0.0, nw, 1.0)
    cross = np.where(nw > 0.0, safe ** (p - 2.0) * inner, 0.0)
    out = nv**p + (p - 1.0) * nw**p - p * cross
    return float(out) if np.ndim(out) == 0 else out


def picone_gap(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    d: npt.ArrayLike,
    p: float,
) -> Union[float, FloatArray]:
    """``|c-d|^p - J_p(a-b)(c^p/a^(p-1) - d^p/b^(p-1))``, zero iff ``ad = bc``."""
    a_arr, b_arr, c_arr, d_arr = (np.asarray(v, dtype=np.float64) for v in (a, b, c, d))
    if np.any(a_arr <= 0.0) or np.any(b_arr <= 0.0):
        raise ValueError("a and b must be positive")
    if np.any(c_arr < 0.0) or np.any(d_arr < 0.0):
        raise ValueError("c and d must be nonnegative")
    out = np.abs(c_arr - d_arr) ** p - j_p(a_arr - b_arr, p) * (
        c_arr**p / a_arr ** (p - 1.0) - d_arr**p / b_arr ** (p - 1.0)
    )
    return float(out) if np.ndim(out) == 0 else out
