import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.geometry import (
    Annulus,
    Ball,
    DirectionSet,
    ERegion,
    FRegion,
    UnsupportedMethodError,
    WeightPair,
    ball_volume,
    diagonal_flow,
    flow_decomposition,
    project_to_sphere,
    quasi_norm,
    region_contains,
    region_from_dict,
    region_volume,
    weighted_flow,
)

W11 = WeightPair.equal(1, 1)


def weights(k):
    return st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k).map(lambda v: tuple(np.array(v) / sum(v)))


@st.composite
def weight_pairs(draw, max_m=3, max_n=3):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    return WeightPair(draw(weights(m)), draw(weights(n)))


# --- weights ---------------------------------------------------------------


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightPair((0.5, 0.6), (1.0,))
    with pytest.raises(ValueError):
        WeightPair((1.2, -0.2), (1.0,))
    with pytest.raises(ValueError):
        WeightPair((), (1.0,))
    wp = WeightPair((0.25, 0.75), (1.0,))
    assert (wp.m, wp.n, wp.d) == (2, 1, 3)


def test_equal_weights():
    wp = WeightPair.equal(2, 3)
    assert np.allclose(wp.a_arr, 0.5) and np.allclose(wp.b_arr, 1 / 3)
    assert wp.is_equal_weights


# --- quasi-norm and flows --------------------------------------------------


def test_quasi_norm_examples():
    assert quasi_norm([-3.0], [1.0]) == 3.0
    assert quasi_norm([2.0, -3.0], [0.5, 0.5]) == pytest.approx(9.0)
    assert quasi_norm([0.0, 0.0], [0.3, 0.7]) == 0.0


def test_quasi_norm_dimension_mismatch():
    with pytest.raises(ValueError):
        quasi_norm([1.0, 2.0], [1.0])


def test_weighted_flow_examples():
    assert np.allclose(weighted_flow([2.0], [1.0], math.log(2)), [4.0])
    x = np.array([0.3, -1.2, 2.0])
    assert np.array_equal(weighted_flow(x, [1 / 3] * 3, 0.0), x)
    # equal weights act by homothety
    assert np.allclose(weighted_flow(x, [1 / 3] * 3, 0.9), x * math.exp(0.3))


@settings(max_examples=300, deadline=None)
@given(
    w=st.integers(1, 4).flatmap(weights),
    data=st.data(),
    t=st.floats(-5, 5),
)
def test_quasi_norm_homogeneity(w, data, t):
    x = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=len(w), max_size=len(w))))
    lhs = quasi_norm(weighted_flow(x, w, t), w)
    rhs = math.exp(t) * quasi_norm(x, w)
    assert abs(lhs - rhs) <= 1e-9 * max(rhs, 1e-300)


def test_quasi_norm_homogeneity_bulk():
    rng = np.random.default_rng(0)
    for _ in range(10_000 // 500):
        k = rng.integers(1, 5)
        w = rng.random(k) + 0.05
        w /= w.sum()
        x = rng.normal(size=(500, k)) * 3
        t = rng.uniform(-5, 5)
        lhs = quasi_norm(weighted_flow(x, w, t), w)
        rhs = math.exp(t) * quasi_norm(x, w)
        assert np.all(np.abs(lhs - rhs) <= 1e-9 * rhs)


@settings(max_examples=100, deadline=None)
@given(w=st.integers(1, 4).flatmap(weights), s=st.floats(-3, 3), t=st.floats(-3, 3), data=st.data())
def test_flow_group_law(w, s, t, data):
    x = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=len(w), max_size=len(w))))
    a = weighted_flow(weighted_flow(x, w, s), w, t)
    b = weighted_flow(x, w, s + t)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


# --- projection ------------------------------------------------------------


def test_projection_examples():
    assert np.allclose(project_to_sphere([3.0, 4.0], [0.5, 0.5]), [0.6, 0.8])
    u = np.array([0.6, -0.8])
    assert np.allclose(project_to_sphere(u, [0.3, 0.7]), u, atol=1e-12)
    assert np.allclose(project_to_sphere([2.0, 0.0], [2 / 3, 1 / 3]), [1.0, 0.0])


def test_projection_of_origin_fails():
    with pytest.raises(ValueError, match="origin"):
        project_to_sphere([0.0, 0.0], [0.5, 0.5])


@settings(max_examples=200, deadline=None)
@given(w=st.integers(1, 4).flatmap(weights), data=st.data())
def test_projection_unit_and_idempotent(w, data):
    coord = st.one_of(st.just(0.0), st.floats(1e-3, 1e3), st.floats(-1e3, -1e-3))
    x = np.array(data.draw(st.lists(coord, min_size=len(w), max_size=len(w))))
    if not np.any(x):
        return
    u = project_to_sphere(x, w)
    assert abs(np.linalg.norm(u) - 1.0) <= 1e-10
    assert np.allclose(project_to_sphere(u, w), u, atol=1e-9)
    # u lies on the flow orbit of x: same sign pattern, zero coordinates fixed
    assert np.array_equal(np.sign(u), np.sign(x))


# --- diagonal flow ---------------------------------------------------------


def test_diagonal_flow_examples():
    v = np.array([1.0, 1.0])
    assert np.array_equal(diagonal_flow(v, W11, 0.0), v)
    assert np.allclose(diagonal_flow(v, W11, math.log(2)), [2.0, 0.5])
    for t in (-3.0, 0.7, 4.0):
        w = diagonal_flow(v, W11, t)
        assert quasi_norm(w[:1], [1.0]) * quasi_norm(w[1:], [1.0]) == pytest.approx(1.0)


@settings(max_examples=150, deadline=None)
@given(wp=weight_pairs(), t=st.floats(-5, 5), data=st.data())
def test_flow_invariants(wp, t, data):
    v = np.array(data.draw(st.lists(st.floats(0.1, 3.0), min_size=wp.d, max_size=wp.d)))
    signs = np.array(data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=wp.d, max_size=wp.d)))
    v = v * signs
    vt = diagonal_flow(v, wp, t)
    x, y = v[: wp.m], v[wp.m :]
    xt, yt = vt[: wp.m], vt[wp.m :]
    P = quasi_norm(x, wp.a) * quasi_norm(y, wp.b)
    assert quasi_norm(xt, wp.a) * quasi_norm(yt, wp.b) == pytest.approx(P, rel=1e-9)
    assert quasi_norm(yt, wp.b) == pytest.approx(math.exp(-t) * quasi_norm(y, wp.b), rel=1e-9)
    assert np.allclose(project_to_sphere(xt, wp.a), project_to_sphere(x, wp.a), atol=1e-8)
    assert np.allclose(project_to_sphere(yt, wp.b), project_to_sphere(y, wp.b), atol=1e-8)


# --- flow decomposition ----------------------------------------------------


def test_flow_decomposition_examples():
    fd = flow_decomposition(W11, 1.0)
    assert fd.b_min == 1.0
    assert np.allclose(fd.gt_prime, [math.e, 1 / math.e])
    assert np.allclose(fd.gt_dblprime, [1.0, 1.0])
    fd0 = flow_decomposition(WeightPair((0.2, 0.8), (0.5, 0.5)), 0.0)
    for g in (fd0.gt, fd0.gt_prime, fd0.gt_dblprime):
        assert np.allclose(g, 1.0)
    eq = flow_decomposition(WeightPair.equal(2, 3), 2.5)
    assert eq.b_min == pytest.approx(1 / 6)
    assert np.allclose(eq.gt_dblprime, 1.0)


@settings(max_examples=100, deadline=None)
@given(wp=weight_pairs(), t=st.floats(0, 10))
def test_flow_decomposition_invariants(wp, t):
    fd = flow_decomposition(wp, t)
    assert np.allclose(fd.gt_prime * fd.gt_dblprime, fd.gt, rtol=1e-12)
    for g in (fd.gt, fd.gt_prime, fd.gt_dblprime):
        assert abs(np.prod(g) - 1.0) <= 1e-12 * 10
    ex = np.log(fd.gt_dblprime)
    assert np.all(ex[: wp.m] >= -1e-12) and np.all(ex[wp.m :] <= 1e-12)


# --- direction sets --------------------------------------------------------


def test_direction_set_validation():
    with pytest.raises(ValueError):
        DirectionSet.orthants([(1, 1), (1, 1)])
    with pytest.raises(ValueError):
        DirectionSet.box_union([((0.5, 0.0), (0.1, 1.0))])
    A = DirectionSet.orthants([(1, -1), (-1, 1)])
    assert A.measure_fraction() == 0.5
    with pytest.raises(UnsupportedMethodError):
        DirectionSet.box_union([((0, 0), (1, 1))]).measure_fraction()


def test_direction_set_roundtrip_and_reflect():
    A = DirectionSet.box_union([((0.1, -0.4), (0.8, 0.5))])
    assert DirectionSet.from_dict(A.to_dict(), 2) == A
    R = A.reflect([1])
    assert R.boxes[0] == ((0.1, -0.5), (0.8, 0.4))
    P = DirectionSet.positive(2).reflect([0])
    assert P.patterns == ((-1, 1),)


# --- regions ---------------------------------------------------------------


def test_e_region_membership_examples():
    E = ERegion(1.0, 1.0, W11)
    assert region_contains(E, [0.1, 2.0])
    assert not region_contains(E, [0.1, 0.9])
    Ep = ERegion(1.0, 1.0, W11, A=DirectionSet.positive(1))
    assert not region_contains(Ep, [-0.1, 2.0])
    assert region_contains(Ep, [0.1, 2.0])


def test_x_zero_convention():
    assert region_contains(ERegion(2.0, 1.0, W11), [0.0, 2.0])
    assert not region_contains(ERegion(2.0, 1.0, W11, A=DirectionSet.positive(1)), [0.0, 2.0])


def test_half_open_shell():
    E = ERegion(math.log(10), 0.5, W11)
    assert region_contains(E, [0.0, 1.0])
    assert not region_contains(E, [0.0, 10.0])
    assert region_contains(E, [0.0, 9.999])


def test_region_validation():
    with pytest.raises(ValueError):
        ERegion(0.0, 1.0, W11)
    with pytest.raises(ValueError):
        FRegion(1.0, -1.0, W11)
    with pytest.raises(ValueError):
        Annulus(1.5, W11)  # outer must exceed d = 2
    with pytest.raises(ValueError):
        Ball(0.0, W11)
    with pytest.raises(ValueError):
        ERegion(1.0, 1.0, W11, A=DirectionSet.positive(2))


@settings(max_examples=100, deadline=None)
@given(wp=weight_pairs(2, 2), T=st.floats(0.1, 5), dT=st.floats(0, 3), c=st.floats(0.1, 3), seed=st.integers(0, 99))
def test_e_monotone_in_T(wp, T, dT, c, seed):
    pts = np.random.default_rng(seed).normal(size=(200, wp.d)) * 3
    small = ERegion(T, c, wp).contains(pts)
    big = ERegion(T + dT, c, wp).contains(pts)
    assert np.all(big[small])


@settings(max_examples=50, deadline=None)
@given(wp=weight_pairs(2, 2), seed=st.integers(0, 99))
def test_regions_bounded(wp, seed):
    rng = np.random.default_rng(seed)
    for reg in (ERegion(2.0, 1.5, wp), FRegion(1.5, 0.8, wp), Annulus(wp.d + 1.0, wp), Ball(1.7, wp)):
        lo, hi = reg.box()
        pts = rng.uniform(lo * 1.5 - 1, hi * 1.5 + 1, size=(2000, wp.d))
        inside = reg.contains(pts)
        assert np.all((pts[inside] >= lo) & (pts[inside] <= hi))


def test_region_dict_roundtrip():
    wp = WeightPair((0.4, 0.6), (1.0,))
    for reg in (
        ERegion(2.0, 0.5, wp, A=DirectionSet.positive(2)),
        FRegion(1.0, 2.0, wp),
        Annulus(4.0, wp),
        Ball(2.0, wp),
    ):
        assert region_from_dict(reg.to_dict(), wp) == reg


# --- volumes ---------------------------------------------------------------


def test_closed_form_volumes():
    assert region_volume(ERegion(1.0, 1.0, W11)) == (4.0, 0.0)
    assert region_volume(FRegion(1.0, 1.0, W11))[0] == 4.0
    assert region_volume(ERegion(1e-9, 1.0, W11))[0] == pytest.approx(0.0, abs=1e-8)
    assert region_volume(Ball(1.0, WeightPair.equal(2, 1)))[0] == pytest.approx(4 * math.pi / 3)
    wp = WeightPair.equal(1, 2)
    assert region_volume(Annulus(5.0, wp))[0] == pytest.approx(4 * math.pi / 3 * (125 - 27))


def test_half_orthant_volume_and_mc_crosscheck():
    E = ERegion(1.0, 1.0, W11, A=DirectionSet.positive(1))
    assert region_volume(E)[0] == 2.0
    v, se = region_volume(E, "monte_carlo", samples=200_000, seed=3)
    assert abs(v - 2.0) <= 4 * se


def test_box_direction_volume_needs_monte_carlo():
    E = ERegion(1.0, 1.0, WeightPair.equal(2, 1), A=DirectionSet.box_union([((0, 0), (1, 1))]))
    with pytest.raises(UnsupportedMethodError):
        region_volume(E)
    v, se = region_volume(E, "monte_carlo", samples=50_000, seed=1)
    assert v > 0 and se > 0


def test_monte_carlo_is_seeded():
    E = ERegion(2.0, 1.0, W11)
    assert region_volume(E, "monte_carlo", samples=10_000, seed=5) == region_volume(E, "monte_carlo", samples=10_000, seed=5)


def test_ball_volume_formula():
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(4, 2.0) == pytest.approx(math.pi**2 / 2 * 16)
