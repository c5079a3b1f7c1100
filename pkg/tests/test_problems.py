import math

import numpy as np
import pytest

from tangent_accel.exceptions import ConfigError
from tangent_accel.manifolds import Sphere
from tangent_accel.problems import (
    PROBLEMS,
    build_problem,
    distsq_region_constants,
    estimate_lipschitz,
    initial_point,
    parse_spectrum,
)
from tangent_accel.pullback import ProblemDef


def test_parse_spectrum():
    np.testing.assert_allclose(parse_spectrum("linspace:0:1", 3), [0, 0.5, 1])
    np.testing.assert_allclose(parse_spectrum("geomspace:1:100", 3), [1, 10, 100])
    np.testing.assert_allclose(parse_spectrum("1,2,3", 3), [1, 2, 3])
    for bad in ("cubic:0:1", "1,2", "a,b,c", "linspace:x:1"):
        with pytest.raises(ConfigError):
            parse_spectrum(bad, 3)


def test_rayleigh_eigenvector_is_critical():
    prob = build_problem("rayleigh_sphere", n=3, spectrum="1,2,3")
    np.testing.assert_array_equal(prob.riemannian_grad(np.eye(3)[2]), np.zeros(3))
    assert prob.f_low == 1.0
    assert (prob.lipschitz_L, prob.lipschitz_rho) == (4.0, 8.0)


def test_rayleigh_rotated_matches_spectrum():
    prob = build_problem("rayleigh_sphere", n=6, rotate=True, seed=3)
    A = prob.info["A"]
    np.testing.assert_allclose(np.linalg.eigvalsh(A), prob.info["spectrum"], atol=1e-12)
    x = prob.info["eigvecs"][:, 2]
    assert np.linalg.norm(prob.riemannian_grad(x)) < 1e-12


def test_distsq_minimizer():
    prob = build_problem("distsq_hyperbolic", n=5)
    y = prob.info["y_star"]
    assert prob.cost(y) == 0.0
    assert np.linalg.norm(prob.riemannian_grad(y)) < 1e-14
    assert not prob.has_constants
    assert build_problem("distsq_hyperbolic", n=5, region_radius=1.0).has_constants


def test_region_constants():
    L, rho = distsq_region_constants(1.0, 1.0)
    assert L == pytest.approx(1.0 / math.tanh(1.0))
    L0, rho0 = distsq_region_constants(1e-6, 1.0)
    assert L0 == pytest.approx(1.0) and rho0 < 1e-5
    assert distsq_region_constants(2.0, 0.5)[0] < distsq_region_constants(2.0, 1.0)[0]


def test_karcher_single_matrix_mean():
    from tangent_accel.accel import derive_params, tagd
    A = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
    prob = build_problem("karcher_spd", d=3, matrices=[A], region_radius=3.0)
    assert prob.cost(A) < 1e-25
    x0 = np.eye(3)
    p = derive_params(prob.lipschitz_L, prob.lipschitz_rho, prob.manifold.curvature, 1e-8)
    tr = tagd(prob, p, x0)
    assert tr.converged
    np.testing.assert_allclose(tr.result_point, A, atol=1e-7)


def test_karcher_rejects_bad_matrices():
    with pytest.raises(ConfigError):
        build_problem("karcher_spd", d=2, matrices=[np.diag([1.0, -1.0])])
    with pytest.raises(ConfigError):
        build_problem("karcher_spd", d=2, matrices=[np.array([[1.0, 2.0], [0.0, 1.0]])])


def test_build_problem_errors():
    with pytest.raises(ConfigError):
        build_problem("nope")
    with pytest.raises(ConfigError):
        build_problem("rayleigh_sphere", bogus=1)
    with pytest.raises(ConfigError):
        build_problem("quadratic_euclidean", n=2, spectrum="-1,1")
    assert set(PROBLEMS) == {"rayleigh_sphere", "karcher_spd", "distsq_hyperbolic",
                             "quadratic_euclidean"}


def test_initial_points(rng):
    prob = build_problem("rayleigh_sphere", n=9)
    x = initial_point(prob, "saddle")
    np.testing.assert_array_equal(x, np.eye(9)[4])
    prob.manifold.check_point(initial_point(prob, "near_min", rng))
    with pytest.raises(ConfigError):
        initial_point(build_problem("quadratic_euclidean"), "saddle")
    for name in PROBLEMS:
        p = build_problem(name)
        p.manifold.check_point(initial_point(p, "random", rng))
        p.manifold.check_point(initial_point(p, "near_min", rng))


def test_estimate_quadratic():
    prob = build_problem("quadratic_euclidean", n=2, spectrum="1,4")
    L, rho = estimate_lipschitz(prob, 1.0, 200, np.random.default_rng(0))
    assert 4.0 <= L <= 6.0
    assert rho < 1e-4


def _dense_sphere_lipschitz(A, samples, rng):
    """Sampled sup of |P^-1 grad f(y) - grad f(x)| / t with hand-written sphere formulas."""
    n = A.shape[0]
    X = rng.standard_normal((samples, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    U = rng.standard_normal((samples, n))
    U -= np.sum(U * X, axis=1, keepdims=True) * X
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    t = rng.uniform(1e-3, 1.0, (samples, 1))
    Y = np.cos(t) * X + np.sin(t) * U
    Vy = -np.sin(t) * X + np.cos(t) * U

    def grad(Z):
        AZ = Z @ A
        return 2 * (AZ - np.sum(Z * AZ, axis=1, keepdims=True) * Z)

    W = grad(Y)
    a = np.sum(W * Vy, axis=1, keepdims=True)
    back = W - a * Vy + a * U
    return float(np.max(np.linalg.norm(back - grad(X), axis=1) / t[:, 0]))


def test_estimate_rayleigh_dense_oracle():
    prob = build_problem("rayleigh_sphere", n=3, spectrum="0,1,0")
    true = _dense_sphere_lipschitz(prob.info["A"], 400000, np.random.default_rng(5))
    L, _ = estimate_lipschitz(prob, 1.0, 500, np.random.default_rng(0))
    assert true <= L <= 1.5 * true


def test_estimate_constant():
    M = Sphere(4)
    prob = ProblemDef(M, lambda x: 1.0, lambda x: np.zeros(4), 1.0, name="const")
    assert estimate_lipschitz(prob, 1.0, 50, np.random.default_rng(0)) == (0.0, 0.0)
