import math

import numpy as np
import pytest

from rggcross.geometry import ConvexBody, Plane2, kappa, sample_plane_haar, section_volume
from rggcross.stats import McEstimate, agree
from rggcross.stress import WeightKind
from rggcross.theory import (I2, I3, IW, S1, S2, Constants, I2_ball_exact, I3_ball_exact, compute_constants,
                             cov_lower_bound, estimate_c_d, estimate_c_prime_d, predict_moments,
                             section_stress_integral, segments_meet)

N = 200_000


@pytest.mark.parametrize("d", [2, 3, 4])
def test_crossing_constant_caps(d):
    c = estimate_c_d(d, N, 1)
    cap = 2 * math.pi * kappa(d) ** 2
    assert c.value - 4 * c.std_error <= cap
    assert c.value > 0
    cp = estimate_c_prime_d(d, N, 2)
    assert cp.value - 4 * cp.std_error <= 2 * math.pi * kappa(d) * (c.value + 4 * c.std_error)


def test_crossing_constant_is_plane_invariant():
    rng = np.random.default_rng(5)
    a = estimate_c_d(3, N, 7)
    b = estimate_c_d(3, N, 8, L=sample_plane_haar(3, rng))
    assert agree(a, b)


def test_crossing_constant_known_value_d3():
    # reference value from a 10^7-sample run: 3.865 +/- 0.009
    c = estimate_c_d(3, 400_000, 3)
    assert c.within(3.865, other_se=0.009)


def test_segments_meet_closed():
    p = np.array([[0.0, 0.0]])
    assert segments_meet(p, np.array([[1.0, 1.0]]), np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]]))[0]
    assert segments_meet(p, np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]), np.array([[2.0, 1.0]]))[0]
    assert not segments_meet(p, np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.array([[1.0, 1.0]]))[0]


@pytest.mark.parametrize("d", [3, 4, 5])
def test_ball_fiber_integrals_match_closed_forms(d):
    W = ConvexBody.ball(d)
    L = Plane2.coordinate(d)
    assert I2(W, L, N, 11).within(I2_ball_exact(W))
    assert I3(W, L, N, 12).within(I3_ball_exact(W))


def test_ball_closed_forms_d3():
    W = ConvexBody.ball(3)
    r = W.radius
    assert I2_ball_exact(W) == pytest.approx(2 * math.pi * r ** 4)
    assert I3_ball_exact(W) == pytest.approx(16 * math.pi * r ** 5 / 5)


def test_ball_fiber_integrals_are_plane_invariant():
    W = ConvexBody.ball(3)
    rng = np.random.default_rng(2)
    a = I2(W, sample_plane_haar(3, rng), N, 13)
    b = I2(W, sample_plane_haar(3, rng), N, 14)
    assert agree(a, b)


def test_d2_fiber_integrals_are_one():
    W = ConvexBody.cube(2)
    assert I2(W, Plane2.coordinate(2), 10, 0).value == 1.0
    assert I3(W, Plane2.coordinate(2), 10, 0).value == 1.0


def test_cube_axis_aligned_vs_oblique():
    W = ConvexBody.cube(3)
    axis = I2(W, Plane2.coordinate(3), 20_000, 1)
    assert axis.value == 1.0 and axis.std_error == 0.0
    s = 1 / math.sqrt(3)
    L = Plane2(np.array([[s, 1 / math.sqrt(2)], [s, -1 / math.sqrt(2)], [s, 0.0]]))
    ob = I2(W, L, 20_000, 2)
    # the oblique shadow is larger, so fibers are shorter on average
    assert abs(ob.value - 1.0) > 4 * ob.std_error


def test_holder_bracket_positive_for_cube_flat_for_ball():
    rng = np.random.default_rng(9)
    planes = [sample_plane_haar(3, rng) for _ in range(12)]
    cube = np.array([I2(ConvexBody.cube(3), L, 4000, k).value for k, L in enumerate(planes)])
    ball = np.array([I2(ConvexBody.ball(3), L, 4000, k).value for k, L in enumerate(planes)])
    assert cube.var() > 10 * ball.var()


def test_oblique_cube_section_power_is_unbiased():
    # nested estimator of E[sec^2] against a deterministic fine-grid estimate of the same law
    W = ConvexBody.cube(3)
    L = sample_plane_haar(3, np.random.default_rng(4))
    est = I3(W, L, 20_000, 3)
    v = W.sample(np.random.default_rng(5), 3000)
    sec = section_volume(W, L, v @ L.basis, n_samples=20000)
    ref = McEstimate.from_samples(sec ** 2)
    assert agree(est, ref, n_sigma=5)


def test_stress_integrals_bounds_and_jensen():
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    s1 = S1(W, L, WeightKind.INVERSE_SQUARE, N, 21)
    s2 = S2(W, L, WeightKind.INVERSE_SQUARE, N, 22)
    assert s1.within(0.09544, other_se=0.0002)
    assert s2.within(0.011506, other_se=0.0001)
    assert s2.value >= s1.value ** 2


def test_s2_nested_oracle():
    # S2 = E_v[g(v)^2] with g(v) = E_{v1} f(v, v1); estimate g per v with an inner loop
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    rng = np.random.default_rng(31)
    v = W.sample(rng, 400)
    inner = W.sample(rng, 4000)
    d0 = np.linalg.norm(v[:, None] - inner[None], axis=-1)
    dl = np.linalg.norm((v[:, None] - inner[None]) @ L.basis, axis=-1)
    g = ((1 - dl / d0) ** 2).mean(axis=1)
    ref = McEstimate.from_samples(g ** 2)
    assert agree(S2(W, L, WeightKind.INVERSE_SQUARE, N, 32), ref, n_sigma=5)


def test_section_stress_integral_reference():
    W = ConvexBody.ball(3)
    K = section_stress_integral(W, Plane2.coordinate(3), WeightKind.INVERSE_SQUARE, N, 41)
    assert K.within(0.09768, other_se=0.0002)


def test_iw_small_delta_limit():
    # interior v: IW / delta^(2d+2) -> c_d * sec(v|L)
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    est = IW(np.zeros(3), W, L, 0.01, 400_000, 51)
    target = 3.865 * 2 * W.radius
    assert est.value / 0.01 ** 8 == pytest.approx(target, rel=0.06)
    with pytest.raises(ValueError):
        IW(np.zeros(3), W, L, 0.0, 10, 0)


def test_iw_vanishes_far_outside():
    W = ConvexBody.ball(3)
    est = IW(np.array([5.0, 0, 0]), W, Plane2.coordinate(3), 0.05, 10_000, 1)
    assert est.value == 0.0


def test_cov_lower_bound_formula():
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    c = McEstimate(3.865, 0.0, 1)
    got = cov_lower_bound(W, L, WeightKind.INVERSE_SQUARE, 1000, 0.1, 50_000, 3, c_d=c)
    K = section_stress_integral(W, L, WeightKind.INVERSE_SQUARE, 50_000, 3)
    assert got.value == pytest.approx(1000 ** 5 / 16 * 0.1 ** 8 * 3.865 * K.value)


@pytest.fixture(scope="module")
def constants3():
    return compute_constants(ConvexBody.ball(3), Plane2.coordinate(3), 50_000, 7)


def test_compute_constants_deterministic_and_roundtrip(constants3):
    again = compute_constants(ConvexBody.ball(3), Plane2.coordinate(3), 50_000, 7)
    assert again == constants3
    assert Constants.from_record(constants3.to_record()) == constants3


def test_compute_constants_d2():
    C = compute_constants(ConvexBody.ball(2), Plane2.coordinate(2), 10_000, 1)
    assert C.I2.value == 1.0 and C.I3.value == 1.0 and C.S1.value == 0.0


def test_predictions_scale_and_structure(constants3):
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    p1 = predict_moments(W, L, 1000, 0.1, constants3)
    p2 = predict_moments(W, L, 2000, 0.1, constants3)
    assert p2.e_cr / p1.e_cr == pytest.approx(16)
    assert p2.e_stress / p1.e_stress == pytest.approx(4)
    assert p2.var_stress / p1.var_stress == pytest.approx(8)
    assert p1.var_cr_lb < p1.var_cr_ub
    assert 0 < p1.corr_lb <= 1
    assert p1.e_cr == pytest.approx(constants3.c_d.value * 1000 ** 4 * 0.1 ** 8 * constants3.I2.value / 8)
    assert p1.full_add_one_cost["var_cr_lb"] == pytest.approx(16 * p1.var_cr_lb)
    with pytest.raises(ValueError):
        predict_moments(W, L, 1000, 0.1, constants3, w=WeightKind.UNIT)


def test_predictions_d2_have_no_variance_bounds():
    C = compute_constants(ConvexBody.ball(2), Plane2.coordinate(2), 10_000, 1)
    p = predict_moments(ConvexBody.ball(2), Plane2.coordinate(2), 1000, 0.05, C)
    assert p.var_cr_lb is None and p.var_cr_ub is None and p.corr_lb is None
    assert p.e_stress == 0.0
