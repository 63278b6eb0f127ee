import math

import numpy as np
import pytest
from scipy import stats

from rggcross.geometry import (BodyKind, ConvexBody, Plane2, kappa, project, sample_plane_haar,
                               section_volume, section_volume_mc)


@pytest.mark.parametrize("d,expected", [(0, 1.0), (1, 2.0), (2, math.pi), (3, 4 * math.pi / 3),
                                        (4, math.pi ** 2 / 2)])
def test_kappa_closed_forms(d, expected):
    assert kappa(d) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_ball_has_unit_volume(d):
    W = ConvexBody.ball(d)
    assert kappa(d) * W.radius ** d == pytest.approx(1.0, rel=1e-13)
    assert W.volume == 1.0


def test_body_validation():
    with pytest.raises(ValueError):
        ConvexBody(BodyKind.BALL, 1)
    assert ConvexBody.cube(3).circumradius == pytest.approx(math.sqrt(3) / 2)


@pytest.mark.parametrize("kind", ["ball", "cube"])
def test_samples_lie_in_body(kind, rng):
    W = ConvexBody(BodyKind(kind), 3)
    pts = W.sample(rng, 5000)
    assert pts.shape == (5000, 3)
    assert np.all(W.contains(pts))
    assert W.sample(rng).shape == (3,)


def test_ball_radial_law_chi_square(rng):
    # |X| / r ~ U^(1/d), so (|X| / r)^d is uniform on [0, 1]
    W = ConvexBody.ball(3)
    u = (np.linalg.norm(W.sample(rng, 20000), axis=1) / W.radius) ** 3
    counts, _ = np.histogram(u, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_ball_sample_is_isotropic(rng):
    pts = ConvexBody.ball(4).sample(rng, 40000)
    second = pts.T @ pts / len(pts)
    r = ConvexBody.ball(4).radius
    # E[x_i^2] = r^2 / (d + 2)
    assert np.allclose(np.diag(second), r * r / 6, rtol=0.03)
    assert np.allclose(second - np.diag(np.diag(second)), 0, atol=0.01)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_haar_plane_is_orthonormal(d, rng):
    for _ in range(20):
        L = sample_plane_haar(d, rng)
        assert np.allclose(L.basis.T @ L.basis, np.eye(2), atol=1e-12)
        P = L.perp
        assert P.shape == (d, d - 2)
        assert np.allclose(np.hstack([L.basis, P]).T @ np.hstack([L.basis, P]), np.eye(d), atol=1e-12)


def test_haar_plane_projector_mean(rng):
    # E[P_L] = (2/d) I for the orthogonal projector onto a Haar plane
    d = 4
    acc = np.zeros((d, d))
    n = 4000
    for _ in range(n):
        b = sample_plane_haar(d, rng).basis
        acc += b @ b.T
    assert np.allclose(acc / n, 2 / d * np.eye(d), atol=0.03)


def test_haar_d2_is_identity(rng):
    assert np.array_equal(sample_plane_haar(2, rng).basis, np.eye(2))
    with pytest.raises(ValueError):
        sample_plane_haar(1, rng)


def test_plane_validation():
    with pytest.raises(ValueError):
        Plane2(np.ones((3, 2)))
    with pytest.raises(ValueError):
        Plane2(np.ones(3))
    L = Plane2.coordinate(3)
    assert L.is_axis_aligned()
    assert L == Plane2(np.array([[1.0, 0], [0, 1], [0, 0]]))
    assert not L.basis.flags.writeable


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(np.zeros((4, 2)), Plane2.coordinate(3))


def test_rotated_plane_preserves_projected_distances(rng):
    L = sample_plane_haar(3, rng)
    R = L.rotated(0.7)
    p = rng.standard_normal((10, 3))
    a = project(p, L)
    b = project(p, R)
    da = np.linalg.norm(a[:, None] - a[None], axis=-1)
    db = np.linalg.norm(b[:, None] - b[None], axis=-1)
    assert np.allclose(da, db)


def test_ball_section_closed_form():
    W = ConvexBody.ball(3)
    L = Plane2.coordinate(3)
    r = W.radius
    assert section_volume(W, L, [0.0, 0.0]) == pytest.approx(2 * r)
    assert section_volume(W, L, [0.3, 0.0]) == pytest.approx(2 * math.sqrt(r * r - 0.09))
    assert section_volume(W, L, [r + 1e-3, 0.0]) == 0.0
    W4 = ConvexBody.ball(4)
    q = np.array([0.1, 0.2])
    assert section_volume(W4, Plane2.coordinate(4), q) == pytest.approx(
        math.pi * (W4.radius ** 2 - 0.05))


def test_section_d2_is_indicator():
    W = ConvexBody.ball(2)
    L = Plane2.coordinate(2)
    assert section_volume(W, L, [0.0, 0.0]) == 1.0
    assert section_volume(W, L, [1.0, 0.0]) == 0.0
    assert section_volume(ConvexBody.cube(2), L, [0.4, -0.4]) == 1.0


def test_cube_axis_aligned_section():
    W = ConvexBody.cube(3)
    L = Plane2.coordinate(3)
    v = section_volume(W, L, np.array([[0.1, 0.2], [0.6, 0.0]]))
    assert np.array_equal(v, [1.0, 0.0])


def test_oblique_cube_section_mc_matches_geometry(rng):
    # plane spanned by e1 and (e2 + e3)/sqrt(2): the fiber over q = (0, 0) is the
    # segment along (e2 - e3)/sqrt(2), of length sqrt(2) inside the cube
    s = 1 / math.sqrt(2)
    L = Plane2(np.array([[1.0, 0.0], [0.0, s], [0.0, s]]))
    W = ConvexBody.cube(3)
    est = section_volume_mc(W, L, [0.0, 0.0], 20000, rng)
    assert est.within(math.sqrt(2))
    assert section_volume(W, L, [0.0, 0.0], n_samples=20000) == pytest.approx(math.sqrt(2), rel=0.02)


def test_ball_section_mc_agrees_with_closed_form(rng):
    W = ConvexBody.ball(4)
    L = sample_plane_haar(4, rng)
    q = np.array([0.2, -0.1])
    est = section_volume_mc(W, L, q, 50000, rng)
    assert est.within(section_volume(W, L, q))
