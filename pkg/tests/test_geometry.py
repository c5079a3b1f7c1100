import math

import numpy as np
import pytest

from tangent_accel.exceptions import ManifoldError
from tangent_accel.geometry import (
    CurvatureProfile,
    orthonormal_tangent_basis,
    random_tangent_in_ball,
    random_unit_tangent,
    sinc_ratio,
    sinhc_ratio,
    split_tangent,
)
from tangent_accel.manifolds import SPD, Euclidean, Hyperbolic, Sphere

MANIFOLDS = [Sphere(3), Sphere(10), Hyperbolic(3), Hyperbolic(6), SPD(2), SPD(3), Euclidean(4)]


def test_curvature_profile_validation():
    c = CurvatureProfile.from_bounds(-0.5, 0.0)
    assert c.as_tuple() == (-0.5, 0.0, 0.5, 0.0)
    assert c.injectivity_guard == math.inf
    assert CurvatureProfile.from_bounds(1, 1).injectivity_guard == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        CurvatureProfile(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        CurvatureProfile(-1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        CurvatureProfile(0.0, 0.0, 0.0, -1.0)


@pytest.mark.parametrize("t", [0.0, 1e-9, 1e-5, 9.9e-5, 1e-4, 1e-3, 0.5, 2.0])
def test_sinc_ratios_continuous(t):
    ref_s = math.sin(t) / t if t > 0 else 1.0
    ref_h = math.sinh(t) / t if t > 0 else 1.0
    assert sinc_ratio(t) == pytest.approx(ref_s, rel=1e-14)
    assert sinhc_ratio(t) == pytest.approx(ref_h, rel=1e-14)


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_basis_orthonormal(M, rng):
    for _ in range(100):
        x = M.random_point(rng)
        B = orthonormal_tangent_basis(M, x)
        assert len(B) == M.dim
        G = np.array([[M.inner(x, a, b) for b in B] for a in B])
        np.testing.assert_allclose(G, np.eye(M.dim), atol=1e-10)
        for v in B:
            M.check_tangent(x, v)


def test_sphere_basis_at_e1():
    M = Sphere(5)
    x = np.eye(5)[0]
    B = orthonormal_tangent_basis(M, x)
    assert len(B) == 4
    assert all(abs(v @ x) < 1e-15 for v in B)


def test_spd_basis_at_identity():
    M = SPD(2)
    B = orthonormal_tangent_basis(M, np.eye(2))
    assert len(B) == 3
    G = np.array([[np.sum(a * b) for b in B] for a in B])
    np.testing.assert_allclose(G, np.eye(3), atol=1e-12)
    assert all(np.allclose(v, v.T) for v in B)


def test_basis_rejects_non_point():
    with pytest.raises(ManifoldError):
        orthonormal_tangent_basis(Sphere(3), np.array([1.0, 1.0, 0.0]))


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_ball_sampling(M, rng):
    x = M.random_point(rng)
    for _ in range(50):
        s = random_tangent_in_ball(M, x, 0.7, rng)
        M.check_tangent(x, s)
        assert M.norm(x, s) <= 0.7 + 1e-12
    u = random_unit_tangent(M, x, rng)
    assert M.norm(x, u) == pytest.approx(1.0, abs=1e-12)


def test_ball_radius_zero_gives_zero():
    M = Sphere(4)
    x = np.eye(4)[0]
    s = random_tangent_in_ball(M, x, 0.0, np.random.default_rng(3))
    assert np.all(s == 0)


def test_ball_sampling_mean_norm():
    M = Sphere(3)
    x = np.eye(3)[0]
    rng = np.random.default_rng(0)
    norms = [np.linalg.norm(random_tangent_in_ball(M, x, 1.0, rng)) for _ in range(100000)]
    assert abs(np.mean(norms) - 2.0 / 3.0) < 0.01


def test_ball_sampling_deterministic():
    M = Hyperbolic(4)
    x = M.random_point(np.random.default_rng(1))
    a = random_tangent_in_ball(M, x, 1.0, np.random.default_rng(42))
    b = random_tangent_in_ball(M, x, 1.0, np.random.default_rng(42))
    assert a.tobytes() == b.tobytes()


def test_ball_sampling_rejects_negative_radius():
    M = Sphere(3)
    with pytest.raises(ValueError):
        random_tangent_in_ball(M, np.eye(3)[0], -1.0, np.random.default_rng(0))


@pytest.mark.parametrize("M", MANIFOLDS, ids=repr)
def test_split_tangent(M, rng):
    x = M.random_point(rng)
    s = random_unit_tangent(M, x, rng)
    sd = random_unit_tangent(M, x, rng)
    par, perp = split_tangent(M, x, s, sd)
    np.testing.assert_allclose(par + perp, sd, atol=1e-12)
    assert abs(M.inner(x, perp, s)) < 1e-12
