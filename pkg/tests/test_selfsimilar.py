import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frozen import K0_3_G_HALF, PROFILE_MOMENTS
from maxagg import selfsimilar as ss
from maxagg.errors import BracketFailure, InsufficientData, InvalidArgument, NoBranchError, SingularPointError


@pytest.fixture(scope="module")
def branches3():
    return ss.find_branches(3.0)


def test_rhs_at_center_of_trivial_solution():
    assert ss.rhs_even_odd(0.5, 0.5, 0.0, 1.0) == pytest.approx((0.0, 2.0), abs=1e-15)


def test_rhs_at_quarter_of_trivial_solution():
    assert ss.rhs_even_odd(0.25, 5 / 8, -0.5, 1.0) == pytest.approx((-1.0, 2.0), rel=1e-14)


@given(st.floats(0.01, 10), st.floats(0.01, 10))
def test_rhs_center_closed_form(a, D):
    dFe, dFo = ss.rhs_even_odd(0.5, a, 0.0, D)
    assert dFe == 0.0
    assert dFo == pytest.approx(8 * D * a * a, rel=1e-13)


@pytest.mark.parametrize("y", [0.0, 1.0])
def test_rhs_singular_endpoints(y):
    with pytest.raises(SingularPointError):
        ss.rhs_even_odd(y, 0.5, 0.0, 1.0)


@pytest.mark.parametrize("kwargs", [dict(D=0), dict(G_half=-1), dict(delta=0.5), dict(rk_tol=0), dict(method="euler")])
def test_shoot_config_validation(kwargs):
    with pytest.raises(InvalidArgument):
        ss.ShootConfig(**kwargs)


def test_trivial_profile():
    p = ss.shoot(ss.ShootConfig(D=1.0, G_half=2.0))
    inner = (p.ys >= 1e-4) & (p.ys <= 1 - 1e-4)
    assert np.max(np.abs(p.values[inner] - 2.0)) < 1e-8
    assert p.N == pytest.approx(2.0, abs=1e-8)
    assert p.m == pytest.approx(1.0, abs=1e-8)
    k0, q = ss.to_normalized(p)
    assert k0 == pytest.approx(2.0, abs=1e-8)
    assert np.max(np.abs(q.values - 2.0)) < 1e-8


@pytest.mark.parametrize("G_half", sorted(PROFILE_MOMENTS))
def test_moments_match_independent_quadrature(G_half):
    N, m = PROFILE_MOMENTS[G_half]
    p = ss.shoot(ss.ShootConfig(G_half=G_half))
    assert p.N == pytest.approx(N, rel=1e-8)
    assert p.m == pytest.approx(m, rel=1e-8)


def test_k0_against_refined_rerun():
    coarse = ss.shoot(ss.ShootConfig(G_half=4.0))
    fine = ss.shoot(ss.ShootConfig(G_half=4.0, rk_tol=1e-12, delta=1e-7))
    assert coarse.k0 == pytest.approx(fine.k0, rel=1e-8)


def test_even_odd_method_agrees_away_from_endpoints():
    a = ss.shoot(ss.ShootConfig(G_half=4.0, delta=1e-3, method="even_odd"))
    b = ss.shoot(ss.ShootConfig(G_half=4.0, delta=1e-3))
    np.testing.assert_allclose(a.values, b.values, rtol=1e-6)
    assert a.N == pytest.approx(b.N, rel=1e-6)


@pytest.mark.parametrize("G_half,expected", [
    (4.0, ss.Shape.SUPERCRITICAL), (3.2, ss.Shape.SUPERCRITICAL), (2.4, ss.Shape.SUPERCRITICAL),
    (1.0, ss.Shape.SUBCRITICAL), (0.6, ss.Shape.SUBCRITICAL),
])
def test_shapes(G_half, expected):
    assert ss.shape_classify(ss.shoot(ss.ShootConfig(G_half=G_half))) is expected


def test_constant_is_trivial_shape():
    assert ss.shape_classify(ss.constant_profile()) is ss.Shape.TRIVIAL


def test_subcritical_has_interior_minimum_and_rises_to_both_ends():
    p = ss.shoot(ss.ShootConfig(G_half=1.0))
    right = np.flatnonzero(p.ys > 0.5)
    k = right[np.argmin(p.values[right])]
    assert p.ys[k] < 1 - p.delta
    # a left maximum sits between the vanishing tail at 0 and the right minimum
    assert p.values[: right[0]].max() > p.values[k]
    assert p.values[-1] > p.values[k]


def test_supercritical_single_right_maximum():
    p = ss.shoot(ss.ShootConfig(G_half=4.0))
    right = p.ys > 0.5
    dG = np.diff(p.values[right])
    assert np.count_nonzero(np.diff(np.sign(dG)) != 0) == 1


@pytest.mark.parametrize("G_half", [0.6, 1.0, 2.4, 4.0])
def test_tail_exponent_and_boundary_identity(G_half):
    p = ss.shoot(ss.ShootConfig(G_half=G_half))
    measured, predicted = ss.tail_exponent_check(p)
    assert abs(measured - predicted) < 0.05
    assert abs(p.G1 - p.N) / p.N < 1e-3


def test_tail_exponent_trivial():
    measured, predicted = ss.tail_exponent_check(ss.constant_profile())
    assert predicted == 0.0
    assert abs(measured) < 1e-12


def test_tail_exponent_positive_on_supercritical_side():
    assert ss.tail_exponent_check(ss.shoot(ss.ShootConfig(G_half=2.4)))[1] > 0


def test_tail_exponent_needs_small_delta():
    with pytest.raises(InsufficientData):
        ss.tail_exponent_check(ss.shoot(ss.ShootConfig(G_half=3.0, delta=1e-2)))


def test_tail_exponent_stable_under_delta_halving():
    a = ss.tail_exponent_check(ss.shoot(ss.ShootConfig(G_half=4.0, delta=1e-6)))[0]
    b = ss.tail_exponent_check(ss.shoot(ss.ShootConfig(G_half=4.0, delta=5e-7)))[0]
    assert abs(a - b) < 1e-3


@given(st.floats(0.3, 6.0))
def test_profile_invariants(G_half):
    p = ss.shoot(ss.ShootConfig(G_half=G_half, n_output=401))
    assert np.all(p.values > 0)
    F = p.F
    assert np.all(np.diff(F) >= -1e-12 * F[1:])
    assert p.N > 0 and p.m > 0
    assert abs(p.G1 - p.N) / p.N < 1e-3


@given(st.floats(0.3, 6.0), st.sampled_from([0.5, 2.0]))
def test_scaling_invariance(s, lam):
    cfg = dict(n_output=401)
    k_a, a = ss.to_normalized(ss.shoot(ss.ShootConfig(D=1.0, G_half=s, **cfg)))
    k_b, b = ss.to_normalized(ss.shoot(ss.ShootConfig(D=1.0 / lam, G_half=lam * s, **cfg)))
    assert np.max(np.abs(a.values - b.values)) <= 10 * 1e-10
    assert k_a == pytest.approx(k_b, rel=1e-12)


@given(st.floats(0.3, 6.0), st.floats(0.01, 0.2))
def test_even_odd_symmetry_about_half(G_half, h):
    # integrate the even/odd system to both sides of 1/2 and compare
    left = ss.even_odd_trajectory(1.0, G_half, 0.5 - h, rk_tol=1e-12)(0.5 - h)
    right = ss.even_odd_trajectory(1.0, G_half, 0.5 + h, rk_tol=1e-12)(0.5 + h)
    scale = max(1.0, abs(left[0]))
    assert abs(left[0] - right[0]) < 1e-9 * scale
    assert abs(left[1] + right[1]) < 1e-9 * scale


def test_sampled_even_odd_parts():
    p = ss.shoot(ss.ShootConfig(G_half=3.0))
    np.testing.assert_allclose(p.ys[::-1], 1 - p.ys, atol=1e-15)
    mid = p.ys.size // 2
    assert p.ys[mid] == 0.5 and p.F_o[mid] == 0.0
    np.testing.assert_allclose(p.F_e + p.F_o, p.F, rtol=1e-12, atol=1e-15)


def test_normalization_preserves_k0():
    p = ss.shoot(ss.ShootConfig(G_half=4.0))
    k0, q = ss.to_normalized(p)
    assert k0 == pytest.approx(p.D * p.N)
    assert q.m == 1.0
    assert q.k0 == pytest.approx(k0, rel=1e-14)


def test_moment_curve_rows():
    assert ss.scan_moment_curve([]) == []
    rows = ss.scan_moment_curve([1.8, 2.0, 2.2])
    N = [r.N for r in rows]
    assert N[1] == pytest.approx(2.0, abs=1e-8)
    assert N[1] <= N[0] and N[1] <= N[2]


def test_moment_curve_records_failures():
    rows = ss.scan_moment_curve([2.0], delta=1e-6, rk_tol=1e-10, n_output=3)
    assert np.isnan(rows[0].N) and rows[0].error


def test_branches_for_k0_3(branches3):
    pair = branches3
    assert pair.G_half_sub < 2 < pair.G_half_super
    assert pair.G_half_sub == pytest.approx(K0_3_G_HALF[0], rel=1e-7)
    assert pair.G_half_super == pytest.approx(K0_3_G_HALF[1], rel=1e-7)
    for p in (pair.subcritical, pair.supercritical):
        assert p.m == pytest.approx(1.0, abs=1e-6)
        assert p.k0 == pytest.approx(3.0, abs=1e-6)
    assert pair.sub_shape is ss.Shape.SUBCRITICAL
    assert pair.super_shape is ss.Shape.SUPERCRITICAL


def test_branches_collapse_at_two():
    pair = ss.find_branches(2.0)
    assert pair.sub_shape is pair.super_shape is ss.Shape.TRIVIAL


@pytest.mark.parametrize("k0", [1.9, 1.5, 0.5])
def test_no_branch_below_two(k0):
    with pytest.raises(NoBranchError):
        ss.find_branches(k0)


def test_bracket_failure_reports_range():
    with pytest.raises(BracketFailure) as info:
        ss.find_branches(3.0, upper_cap=4.5)
    assert info.value.scanned == (2.0, 4.5)
