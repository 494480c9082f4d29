import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixop.bo.forms import (
    FormContext,
    ap_gap,
    assemble_p2,
    build_context,
    j_p,
    load_vector,
    local_energy,
    local_pairing,
    nonlocal_energy,
    nonlocal_pairing,
    picone_gap,
    q_form,
    residual,
    segment_mean,
)
from mixop.bo.mesh import CoeffVec, build_space, constant, from_function
from mixop.bo.minimize import energy
from mixop.bo.nonlinearity import logistic_model, power_model


def test_j_p_sign_form() -> None:
    assert j_p(0.0, 1.5) == 0.0
    assert j_p(-2.0, 3.0) == pytest.approx(-4.0)
    np.testing.assert_allclose(j_p(np.array([-1.0, 0.5]), 2.0), [-1.0, 0.5])


def test_picone_gap_random_tuples_are_nonnegative() -> None:
    rng = np.random.default_rng(20240101)
    n = 100_000
    a, b, c, d = (rng.uniform(0.1, 2.0, n) for _ in range(4))
    for p in (1.5, 2.0, 3.0):
        gap = picone_gap(a, b, c, d, p)
        scale = np.abs(c - d) ** p + np.abs(j_p(a - b, p)) * (
            c**p / a ** (p - 1.0) + d**p / b ** (p - 1.0)
        )
        assert np.min(gap / np.maximum(scale, 1.0)) >= -1e-12


def test_picone_gap_vanishes_on_proportional_tuples() -> None:
    rng = np.random.default_rng(7)
    n = 1_000
    a, b = rng.uniform(0.1, 2.0, n), rng.uniform(0.1, 2.0, n)
    t = rng.uniform(0.0, 2.0, n)
    for p in (1.5, 2.0, 3.0):
        gap = picone_gap(a, b, t * a, t * b, p)
        assert np.max(np.abs(gap)) <= 1e-10


def test_picone_gap_rejects_bad_arguments() -> None:
    with pytest.raises(ValueError):
        picone_gap(0.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        picone_gap(1.0, 1.0, -1.0, 1.0, 2.0)


def test_ap_gap_random_pairs_are_nonnegative() -> None:
    rng = np.random.default_rng(99)
    v = rng.normal(size=(100_000, 3))
    w = rng.normal(size=(100_000, 3))
    for p in (1.5, 2.0, 3.5):
        gap = ap_gap(v, w, p)
        nv, nw = np.linalg.norm(v, axis=1), np.linalg.norm(w, axis=1)
        scale = nv**p + (p - 1.0) * nw**p + p * nw ** (p - 1.0) * nv
        assert np.min(gap / np.maximum(scale, 1.0)) >= -1e-12


@given(
    v=st.lists(st.floats(min_value=-10.0, max_value=10.0), min_size=2, max_size=2),
    p=st.sampled_from([1.5, 2.0, 3.5]),
)
@settings(max_examples=100, deadline=None)
def test_ap_gap_with_zero_second_argument(v: list[float], p: float) -> None:
    expected = float(np.linalg.norm(v)) ** p
    assert ap_gap(v, [0.0, 0.0], p) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_local_energy_of_constant_interpolant() -> None:
    ctx = build_context(build_space(10, 3.0, 0.5))
    u = constant(ctx.space, 1.0)
    # only the two boundary cells carry a slope of magnitude 1/h
    assert local_energy(ctx, u) == pytest.approx(2.0 * ctx.space.h ** (1.0 - 3.0), rel=1e-13)


@pytest.mark.parametrize("p, s", [(2.0, 0.5), (3.0, 0.3), (1.5, 0.7)])
def test_q_form_is_p_homogeneous(p: float, s: float) -> None:
    ctx = build_context(build_space(16, p, s))
    u = from_function(ctx.space, lambda x: np.sin(np.pi * x) + 0.3 * x)
    for factor in (0.3, -2.0, 7.5):
        assert q_form(ctx, u.scaled(factor)) == pytest.approx(
            abs(factor) ** p * q_form(ctx, u), rel=1e-12
        )
    assert nonlocal_energy(ctx, u) > 0.0


@pytest.mark.parametrize("p, s", [(2.0, 0.5), (3.0, 0.3), (1.5, 0.7)])
def test_residual_matches_finite_differences(p: float, s: float) -> None:
    ctx = build_context(build_space(32, p, s))
    m = logistic_model(p, 3.0)
    rng = np.random.default_rng(int(10 * p + 100 * s))
    eps = 1e-6
    for _ in range(5):
        u = CoeffVec(ctx.space, 0.2 + 0.8 * rng.random(ctx.space.dim))
        grad = residual(ctx, u, m).values
        fd = np.empty_like(grad)
        for i in range(ctx.space.dim):
            bump = np.zeros(ctx.space.dim)
            bump[i] = eps
            fd[i] = (
                energy(ctx, m, u.with_values(u.values + bump))
                - energy(ctx, m, u.with_values(u.values - bump))
            ) / (2.0 * eps)
        assert np.max(np.abs(fd - grad)) <= 1e-6 * np.max(np.abs(grad))


def test_p2_matrices_reproduce_the_forms(ctx_p2: FormContext) -> None:
    mats = assemble_p2(ctx_p2)
    np.testing.assert_allclose(mats.nonlocal_, mats.nonlocal_.T, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(mats.local, mats.local.T, rtol=1e-14, atol=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(3):
        u = CoeffVec(ctx_p2.space, rng.normal(size=ctx_p2.space.dim))
        vals = u.values
        assert vals @ mats.stiffness @ vals == pytest.approx(q_form(ctx_p2, u), rel=1e-10)
        np.testing.assert_allclose(
            local_pairing(ctx_p2, u), mats.local @ vals, rtol=1e-10, atol=1e-10
        )
        np.testing.assert_allclose(
            nonlocal_pairing(ctx_p2, u), mats.nonlocal_ @ vals, rtol=1e-9, atol=1e-9
        )
    ones = np.ones(ctx_p2.space.dim)
    assert ones @ mats.mass @ ones == pytest.approx(1.0 - 4.0 * ctx_p2.space.h / 3.0, rel=1e-12)
    eig = np.linalg.eigvalsh(mats.nonlocal_)
    assert eig[0] > 0.0


def test_assemble_p2_needs_p_equal_two(ctx_p3: FormContext) -> None:
    with pytest.raises(ValueError, match="p = 2"):
        assemble_p2(ctx_p3)


@pytest.mark.parametrize("p, s", [(2.0, 0.5), (3.0, 0.3), (1.5, 0.7)])
def test_doubling_quadrature_orders_barely_moves_the_energy(p: float, s: float) -> None:
    space = build_space(32, p, s)
    base, doubled = build_context(space, 6, 4), build_context(space, 12, 8)
    rng = np.random.default_rng(int(100 * p + 10 * s))
    for _ in range(10):
        u = CoeffVec(space, rng.uniform(-1.0, 1.0, space.dim))
        ref = nonlocal_energy(doubled, u)
        assert abs(nonlocal_energy(base, u) - ref) < 1e-6 * ref


def test_quadrature_orders_are_validated() -> None:
    space = build_space(16, 2.0, 0.5)
    with pytest.raises(ValueError, match="diag_order"):
        build_context(space, 2, 4)
    with pytest.raises(ValueError, match="far_order"):
        build_context(space, 6, 2.5)


def test_mid_hat_energy_matches_direct_integration() -> None:
    ctx = build_context(build_space(4, 2.0, 0.5))
    u = CoeffVec(ctx.space, np.array([0.0, 1.0, 0.0]))
    kinks = [0.25, 0.5, 0.75]

    def hat(x: float) -> float:
        return max(0.0, 1.0 - 4.0 * abs(x - 0.5))

    def along(r: float) -> float:
        upper = 1.0 - r
        points = [x for x in kinks + [k - r for k in kinks] if 0.0 < x < upper]
        value, _ = quad(
            lambda x: (hat(x) - hat(x + r)) ** 2,
            0.0,
            upper,
            points=points or None,
            epsabs=0.0,
            epsrel=1e-10,
            limit=200,
        )
        return value / r**2

    # |x - y|^-2 at ps = 1, and both orderings of every pair
    interior, _ = quad(along, 0.0, 1.0, points=kinks, epsabs=0.0, epsrel=1e-10, limit=200)
    tail, _ = quad(
        lambda x: hat(x) ** 2 * (1.0 / x + 1.0 / (1.0 - x)), 0.25, 0.75, points=[0.5]
    )
    expected = 2.0 * interior + 2.0 * tail
    assert nonlocal_energy(ctx, u) == pytest.approx(expected, rel=1e-6)


def test_segment_mean_and_partials() -> None:
    p = 1.5
    z0 = np.array([-1.0, 1.0, 0.0, 0.3])
    z1 = np.array([2.0, 1.05, 0.0, -0.2])
    mean, d0, d1 = segment_mean(z0, z1, p)
    for k in range(z0.size):
        direct, _ = quad(
            lambda t: abs(z0[k] + (z1[k] - z0[k]) * t) ** p, 0.0, 1.0, epsabs=0.0, epsrel=1e-12
        )
        assert mean[k] == pytest.approx(direct, rel=1e-10, abs=1e-14)
    assert mean[0] == pytest.approx((2.0**2.5 + 1.0) / 7.5, rel=1e-14)
    eps = 1e-6
    fd0 = (segment_mean(z0 + eps, z1, p)[0] - segment_mean(z0 - eps, z1, p)[0]) / (2 * eps)
    fd1 = (segment_mean(z0, z1 + eps, p)[0] - segment_mean(z0, z1 - eps, p)[0]) / (2 * eps)
    np.testing.assert_allclose(d0, fd0, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(d1, fd1, rtol=1e-6, atol=1e-8)


def test_load_vector_ignores_nonpositive_values(ctx_p2: FormContext) -> None:
    m = power_model(2.0, 0.5)
    u = constant(ctx_p2.space, -1.0)
    np.testing.assert_array_equal(load_vector(ctx_p2, m, u), np.zeros(ctx_p2.space.dim))
    v = constant(ctx_p2.space, 4.0)
    # f = sqrt(4) = 2 on the plateau, hats integrate to h
    interior = load_vector(ctx_p2, m, v)[1:-1]
    np.testing.assert_allclose(interior, 2.0 * ctx_p2.space.h, rtol=1e-13)
