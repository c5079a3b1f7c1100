import math

import numpy as np
import pytest

import oracles
from tangent_accel.exceptions import ManifoldError
from tangent_accel.geometry import random_tangent_in_ball, random_unit_tangent
from tangent_accel.manifolds import (
    SPD,
    Euclidean,
    Hyperbolic,
    Sphere,
    expm_sym,
    logm_spd,
    make_euclidean,
    make_hyperbolic,
    make_spd,
    make_sphere,
    minkowski,
    spd_eigh,
    spd_sectional_curvature,
)

MANIFOLDS = [Sphere(3), Sphere(20), Hyperbolic(3), Hyperbolic(8), SPD(2), SPD(4), Euclidean(5)]


def _radius(M):
    return 1.0 if isinstance(M, (Sphere, SPD)) else 2.0


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_exp_log_roundtrip(M, rng):
    for _ in range(30):
        x = M.random_point(rng)
        s = random_tangent_in_ball(M, x, _radius(M), rng)
        y = M.exp(x, s)
        M.check_point(y)
        np.testing.assert_allclose(M.log(x, y), s, atol=1e-9)
        assert M.dist(x, y) == pytest.approx(M.norm(x, s), abs=1e-10)


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_transport_isometry_and_inverse(M, rng):
    for _ in range(30):
        x = M.random_point(rng)
        s = random_tangent_in_ball(M, x, _radius(M), rng)
        u, v = random_unit_tangent(M, x, rng), random_unit_tangent(M, x, rng)
        y = M.exp(x, s)
        Pu, Pv = M.transport(x, s, u), M.transport(x, s, v)
        M.check_tangent(y, Pu)
        assert M.inner(y, Pu, Pv) == pytest.approx(M.inner(x, u, v), abs=1e-10)
        np.testing.assert_allclose(M.transport_inverse(x, s, Pu), u, atol=1e-10)


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_dexp_matches_finite_differences(M, rng):
    h = 1e-6
    for _ in range(20):
        x = M.random_point(rng)
        s = random_tangent_in_ball(M, x, _radius(M), rng)
        sd = random_unit_tangent(M, x, rng)
        fd = (M.exp(x, s + h * sd) - M.exp(x, s - h * sd)) / (2 * h)
        np.testing.assert_allclose(M.dexp(x, s, sd), fd, atol=2e-8)


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_dexp_adjoint(M, rng):
    for _ in range(20):
        x = M.random_point(rng)
        s = random_tangent_in_ball(M, x, _radius(M), rng)
        y = M.exp(x, s)
        sd = random_unit_tangent(M, x, rng)
        w = random_unit_tangent(M, y, rng)
        lhs = M.inner(y, M.dexp(x, s, sd), w)
        rhs = M.inner(x, sd, M.dexp_adjoint(x, s, w))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_sphere_quarter_circle():
    M = Sphere(3)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    np.testing.assert_allclose(M.exp(e1, 0.5 * math.pi * e2), e2, atol=1e-15)
    assert M.curvature_bounds() == (1, 1, 1, 0)


def test_sphere_dexp_gap_equality():
    M = Sphere(3)
    x = np.eye(3)[0]
    s = 0.25 * np.eye(3)[1]
    sd = np.eye(3)[2]
    gap = np.linalg.norm(M.dexp(x, s, sd) - M.transport(x, s, sd))
    assert gap == pytest.approx(oracles.SPHERE_GAP_025, rel=1e-12)


def test_hyperbolic_basics(rng):
    M = Hyperbolic(4)
    x = np.eye(4)[0]
    np.testing.assert_array_equal(M.exp(x, np.zeros(4)), x)
    for _ in range(10000):
        y = M.random_point(rng)
        v = random_unit_tangent(M, y, rng)
        assert minkowski(v, v) > 0
    s = 0.3 * np.eye(4)[1]
    sd = np.eye(4)[2]
    assert M.norm(M.exp(x, s), M.dexp(x, s, sd)) == pytest.approx(oracles.SINH_03 / 0.3, rel=1e-12)
    assert M.curvature_bounds() == (-1, -1, 1, 0)


def test_hyperbolic_rejects_bad_points():
    M = Hyperbolic(3)
    with pytest.raises(ManifoldError):
        M.check_point(np.array([-1.0, 0.0, 0.0]))
    with pytest.raises(ManifoldError):
        M.check_point(np.array([2.0, 0.0, 0.0]))


def test_spd_identity_cases(rng):
    M = SPD(3)
    I = np.eye(3)
    X = rng.standard_normal((3, 3))
    X = 0.5 * (X + X.T)
    np.testing.assert_allclose(M.exp(I, X), expm_sym(X), atol=1e-13)
    Y = rng.standard_normal((3, 3))
    Y = 0.5 * (Y + Y.T)
    assert M.inner(I, X, Y) == pytest.approx(np.sum(X * Y), rel=1e-13)
    M2 = SPD(2)
    assert M2.dist(np.eye(2), np.diag([math.e, 1 / math.e])) == pytest.approx(oracles.SPD_DIST_DIAG,
                                                                           rel=1e-14)


def test_spd_inner_is_affine_invariant(rng):
    M = SPD(3)
    P = M.random_point(rng)
    G = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    X, Y = random_unit_tangent(M, P, rng), random_unit_tangent(M, P, rng)
    lhs = M.inner(G @ P @ G.T, G @ X @ G.T, G @ Y @ G.T)
    assert lhs == pytest.approx(M.inner(P, X, Y), rel=1e-10)


def test_spd_rejects_degenerate():
    with pytest.raises(ManifoldError):
        spd_eigh(np.diag([1.0, 0.0]))
    with pytest.raises(ManifoldError):
        logm_spd(np.diag([1.0, -1.0]))


def test_euclidean_flat(rng):
    M = Euclidean(4)
    x, s, sd = rng.standard_normal((3, 4))
    np.testing.assert_array_equal(M.exp(x, s) - x, s)
    np.testing.assert_array_equal(M.dexp(x, s, sd), sd)
    assert M.curvature_bounds() == (0, 0, 0, 0)


def test_factories():
    assert isinstance(make_sphere(4), Sphere) and make_sphere(4).dim == 3
    assert isinstance(make_hyperbolic(4), Hyperbolic) and make_hyperbolic(4).dim == 3
    assert isinstance(make_spd(3), SPD) and make_spd(3).dim == 6
    assert isinstance(make_euclidean(2), Euclidean) and make_euclidean(2).dim == 2


def test_spd_sectional_curvature_oracles(rng):
    r = 1 / math.sqrt(2)
    X = np.diag([r, -r])
    Y = np.array([[0.0, r], [r, 0.0]])
    assert spd_sectional_curvature(np.eye(2), X, Y) == pytest.approx(oracles.SPD_TIGHT_CURVATURE,
                                                                     abs=1e-12)
    assert spd_sectional_curvature(np.eye(3), np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0])) == 0.0
    with pytest.raises(ValueError):
        spd_sectional_curvature(np.eye(2), X, 2 * X)
