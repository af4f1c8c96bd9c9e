import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit._rng import rng_for
from latorbit.counting import (
    CountQuery,
    CountReport,
    SandwichResult,
    _window_lengths,
    birkhoff_average,
    birkhoff_indicator_integral,
    count_positive_direct,
    count_region_at,
    count_solutions,
    error_exponent_fit,
    sample_theta,
    sandwich_check,
    schmidt_experiment,
)
from latorbit.geometry import Annulus, Ball, DirectionSet, ERegion, FRegion, WeightPair
from latorbit.lattice import LatticeBasis, ThetaMatrix, apply_flow, enumerate_points, unipotent_lattice

W11 = WeightPair.equal(1, 1)
W21 = WeightPair((0.3, 0.7), (1.0,))
W12 = WeightPair((1.0,), (0.4, 0.6))
SHAPES = [W11, W21, W12]


def literal_count(theta: np.ndarray, c: float, T: float) -> int:
    """m = n = 1 loop straight from the inequalities: 1 <= |q| < e^T, |theta q - p| < c/|q|."""
    n = 0
    for q in range(-math.ceil(math.exp(T)), math.ceil(math.exp(T)) + 1):
        if q == 0 or not (1 <= abs(q) and math.log(abs(q)) < T):
            continue
        tq = theta * q
        for p in range(math.floor(tq - c) - 1, math.ceil(tq + c) + 2):
            if abs(tq - p) < c / abs(q):
                n += 1
    return n


def test_theta_zero_example():
    th = ThetaMatrix([[0.0]], W11)
    assert count_solutions(CountQuery(th, 0.5, math.log(10))) == 18


def test_tiny_c_gives_zero():
    for i in range(10):
        th = sample_theta(31, i, W11)
        assert count_solutions(CountQuery(th, 1e-9, 3.0)) == 0


def test_query_validation():
    th = ThetaMatrix([[0.3]], W11)
    with pytest.raises(ValueError):
        CountQuery(th, 0.0, 1.0)
    with pytest.raises(ValueError):
        CountQuery(th, 1.0, 1.0, orthant_I=(1,))


def test_literal_oracle():
    for i in range(40):
        rng = rng_for(32, i)
        theta, c, T = rng.random(), rng.uniform(0.1, 2.0), rng.uniform(0.5, 5.0)
        got = count_solutions(CountQuery(ThetaMatrix([[theta]], W11), c, T))
        assert got == literal_count(theta, c, T)


def test_direct_counter_matches_positive_orthants():
    for i in range(50):
        wp = SHAPES[i % 3]
        th = sample_theta(33, i, wp)
        rng = rng_for(33, i, 7)
        c, T = rng.uniform(0.3, 2.0), rng.uniform(1.0, 5.0)
        A, B = DirectionSet.positive(wp.m), DirectionSet.positive(wp.n)
        assert count_solutions(CountQuery(th, c, T, A, B)) == count_positive_direct(th, c, T)


def test_reflection_identity():
    for i in range(50):
        wp = SHAPES[i % 3]
        rng = rng_for(34, i)
        th = sample_theta(34, i, wp)
        I = tuple(k for k in range(wp.m) if rng.random() < 0.5)
        J = tuple(k for k in range(wp.n) if rng.random() < 0.5)
        A, B = DirectionSet.positive(wp.m), DirectionSet.positive(wp.n)
        c, T = rng.uniform(0.3, 2.0), rng.uniform(1.0, 5.0)
        masked = count_solutions(CountQuery(th, c, T, A, B, I, J))
        # explicit zeta_I theta eta_J
        zeta = np.diag([-1.0 if k in I else 1.0 for k in range(wp.m)])
        eta = np.diag([-1.0 if k in J else 1.0 for k in range(wp.n)])
        explicit = ThetaMatrix(zeta @ th.entries @ eta, wp)
        assert masked == count_solutions(CountQuery(explicit, c, T, A, B))
        # same count with reflected direction sets on theta itself
        assert masked == count_solutions(CountQuery(th, c, T, A.reflect(I), B.reflect(J)))


@settings(max_examples=30, deadline=None)
@given(
    shape=st.sampled_from(SHAPES),
    seed=st.integers(0, 10_000),
    c=st.floats(0.1, 2.0),
    T=st.floats(0.5, 4.0),
    dc=st.floats(0.0, 1.0),
    dT=st.floats(0.0, 1.0),
)
def test_monotone_in_T_and_c(shape, seed, c, T, dc, dT):
    th = sample_theta(seed, 0, shape)
    base = count_solutions(CountQuery(th, c, T))
    assert count_solutions(CountQuery(th, c + dc, T)) >= base
    assert count_solutions(CountQuery(th, c, T + dT)) >= base


def test_negated_theta_symmetry():
    for i in range(30):
        wp = SHAPES[i % 3]
        th = sample_theta(35, i, wp)
        neg = ThetaMatrix(-th.entries, wp)
        assert count_solutions(CountQuery(th, 1.0, 4.0)) == count_solutions(CountQuery(neg, 1.0, 4.0))


# --- Birkhoff integrals ----------------------------------------------------


def test_window_lengths_by_hand():
    assert _window_lengths(np.array([1.2]), 0.5, 3.0)[0] == pytest.approx(0.5)
    assert _window_lengths(np.array([-0.1]), 0.5, 3.0)[0] == 0.0
    assert _window_lengths(np.array([3.2]), 0.5, 3.0)[0] == pytest.approx(0.3)


def test_birkhoff_integral_on_flowed_square_lattice():
    # points (0, j e^{1.2}), j >= 1, qualify; nothing with x != 0 since |x y| >= 1 > c
    L = apply_flow(LatticeBasis.identity(2, W11), W11, -1.2)
    B = DirectionSet.positive(1)
    logs = 1.2 + np.log(np.arange(1, 10))
    expected = sum(min(l, 3.0) - max(l - 0.5, 0.0) for l in logs)
    assert birkhoff_indicator_integral(L, None, B, 0.5, 0.5, 3.0) == pytest.approx(expected, abs=1e-12)
    # a point with ||y|| = e^{-0.1} alone contributes nothing
    L2 = apply_flow(LatticeBasis.identity(2, W11), W11, 0.1)
    only_first = birkhoff_indicator_integral(L2, None, B, 0.5, 0.5, 0.05)
    assert only_first == 0.0


def test_birkhoff_integral_empty():
    L = unipotent_lattice(ThetaMatrix([[0.5]], W11))
    assert birkhoff_indicator_integral(L, None, None, 0.1, 0.01, 0.05) == 0.0


def test_birkhoff_additivity():
    for i in range(30):
        wp = SHAPES[i % 3]
        rng = rng_for(36, i)
        lat = unipotent_lattice(sample_theta(36, i, wp))
        r, c = rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5)
        T1, T2 = rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)
        whole = birkhoff_indicator_integral(lat, None, None, r, c, T1 + T2)
        first = birkhoff_indicator_integral(lat, None, None, r, c, T1)
        rest = birkhoff_indicator_integral(apply_flow(lat, wp, T1), None, None, r, c, T2)
        assert whole == pytest.approx(first + rest, abs=1e-9)


def test_birkhoff_integral_vs_quadrature():
    for i in range(5):
        lat = unipotent_lattice(sample_theta(37, i, W11))
        reg = ERegion(1.0, 1.0, W11)
        exact = birkhoff_indicator_integral(lat, None, None, 1.0, 1.0, 3.0)
        quad = birkhoff_average(lat, reg, 3.0, method="quadrature", step=1e-3) * 3.0
        assert exact == pytest.approx(quad, abs=0.05)


# --- sandwich --------------------------------------------------------------


def test_sandwich_theta_zero_oracle():
    Z = LatticeBasis.identity(2, W11)
    T = math.log(10)
    res = sandwich_check(Z, None, None, 1.0, 0.5, T)
    assert res.holds and res.lower <= res.middle <= res.upper
    quad = birkhoff_average(Z, ERegion(1.0, 0.5, W11), T, method="quadrature", step=1e-4) * T
    assert res.middle == pytest.approx(quad, abs=1e-3)


def test_sandwich_empty():
    L = unipotent_lattice(ThetaMatrix([[0.5]], W11))
    res = sandwich_check(L, None, None, 0.01, 0.01, 0.02)
    assert (res.lower, res.middle, res.upper, res.holds) == (0, 0.0, 0, True)


def test_sandwich_requires_T_above_r():
    with pytest.raises(ValueError):
        sandwich_check(LatticeBasis.identity(2, W11), None, None, 2.0, 1.0, 2.0)


def test_sandwich_random_instances_with_directions():
    for i in range(40):
        wp = SHAPES[i % 3]
        rng = rng_for(38, i)
        lat = unipotent_lattice(sample_theta(38, i, wp))
        A = DirectionSet.positive(wp.m) if i % 2 else None
        B = DirectionSet.orthants([tuple(rng.choice([-1, 1], wp.n))])
        r = rng.uniform(0.3, 1.5)
        res = sandwich_check(lat, A, B, r, rng.uniform(0.3, 2.0), r + rng.uniform(0.5, 4.0))
        assert res.holds


def test_sandwich_judge_flags_violation():
    assert not SandwichResult.judge(3, 2.5, 10)


# --- time averages for balls, annuli, F --------------------------------------


@pytest.mark.parametrize(
    "reg",
    [Annulus(3.0, W11), Ball(2.0, W11), FRegion(1.0, 1.5, W11), ERegion(1.0, 1.0, W11, None, DirectionSet.positive(1))],
    ids=["annulus", "ball", "F", "E"],
)
def test_exact_time_average_vs_quadrature(reg):
    for i in range(4):
        lat = unipotent_lattice(sample_theta(39, i, W11))
        exact = birkhoff_average(lat, reg, 2.0)
        quad = birkhoff_average(lat, reg, 2.0, method="quadrature", step=2e-4)
        assert exact == pytest.approx(quad, abs=5e-3)


def test_birkhoff_average_bad_method():
    with pytest.raises(ValueError):
        birkhoff_average(LatticeBasis.identity(2, W11), Ball(2.0, W11), 1.0, method="simpson")


# --- Schmidt experiments -----------------------------------------------------


@pytest.mark.parametrize("kind", ["E_plain", "E_positive_orthants", "F", "E_directional"])
@pytest.mark.parametrize("wp", SHAPES, ids=["1x1", "2x1", "1x2"])
def test_incremental_matches_from_scratch(kind, wp):
    A = B = None
    if kind == "E_directional":
        A = DirectionSet.full(wp.m)
        B = DirectionSet.box_union([((0.0,) * wp.n, (1.0,) * wp.n)])
    grid = [1.0, 2.0, 2.5, 3.0, 4.0]
    rep = schmidt_experiment(4, 40, wp, 0.8, grid, kind, A, B, volume_samples=10_000)
    for s in range(4):
        th = sample_theta(40, s, wp)
        scratch = [count_region_at(th, kind, 0.8, T, A, B) for T in grid]
        assert list(rep.counts[s]) == scratch
        if kind == "F":
            # flowed F-region count, minus the q = 0 points that only enter through rounding
            lat = unipotent_lattice(th)
            for T, n in zip(grid, scratch):
                K, _ = enumerate_points(apply_flow(lat, wp, T), FRegion(T, 0.8, wp))
                assert n == np.count_nonzero(np.any(K[:, wp.m :] != 0, axis=1))


def test_directional_positive_matches_positive_kind():
    A, B = DirectionSet.positive(1), DirectionSet.positive(1)
    a = schmidt_experiment(10, 41, W11, 1.0, [3.0, 5.0], "E_positive_orthants")
    b = schmidt_experiment(10, 41, W11, 1.0, [3.0, 5.0], "E_directional", A, B, volume_samples=20_000)
    assert np.array_equal(a.counts, b.counts)
    assert b.predicted[1] == pytest.approx(a.predicted[1], rel=0.05)


def test_report_shape_and_flags():
    rep = schmidt_experiment(3, 42, W12, 1.0, [2.0, 3.0])
    assert rep.counts.shape == (3, 2)
    assert rep.extended_case
    assert np.allclose(rep.predicted, 8 * np.array([2.0, 3.0]))
    rows = list(rep.rows())
    assert len(rows) == 6 and rows[0][:2] == (0, 2.0)
    assert not schmidt_experiment(1, 42, W11, 1.0, [2.0]).extended_case


def test_threads_do_not_change_counts():
    a = schmidt_experiment(6, 43, W11, 1.0, [2.0, 4.0], threads=1)
    b = schmidt_experiment(6, 43, W11, 1.0, [2.0, 4.0], threads=3)
    assert np.array_equal(a.counts, b.counts)


def test_experiment_validation():
    with pytest.raises(ValueError):
        schmidt_experiment(1, 0, W11, 1.0, [3.0, 2.0])
    with pytest.raises(ValueError):
        schmidt_experiment(0, 0, W11, 1.0, [1.0])
    with pytest.raises(ValueError):
        schmidt_experiment(1, 0, W11, 1.0, [1.0], "E_directional")


def _synthetic(errors):
    grid = np.arange(6.0, 15.0)
    pred = 4.0 * grid
    counts = np.atleast_2d(pred + errors(grid))
    return CountReport("E_plain", grid, counts, pred, np.arange(len(counts)))


def test_error_fit_synthetic():
    slope, r2 = error_exponent_fit(_synthetic(np.sqrt))
    assert slope == pytest.approx(0.5, abs=1e-12) and r2 == pytest.approx(1.0)
    slope, _ = error_exponent_fit(_synthetic(lambda g: np.full_like(g, 3.0)))
    assert slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        error_exponent_fit(_synthetic(np.zeros_like))
