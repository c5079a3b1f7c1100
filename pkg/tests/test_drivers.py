import math

import numpy as np
import pytest

from tangent_accel.accel import (
    GRAD_STEP,
    PERTURBED_TSS,
    TSS,
    backtracking_tagd,
    derive_params,
    ptagd,
    rgd,
    tagd,
)
from tangent_accel.accel.drivers import guess_pairs
from tangent_accel.exceptions import GiveUp
from tangent_accel.manifolds import Euclidean
from tangent_accel.problems import build_problem, initial_point
from tangent_accel.pullback import ProblemDef


def _rayleigh(n=50):
    prob = build_problem("rayleigh_sphere", n=n)
    return prob, derive_params(prob.lipschitz_L, prob.lipschitz_rho, prob.manifold.curvature, 1e-3)


def _check_trace(tr, T):
    ts = [r.t for r in tr.records] + [tr.t]
    for r, nxt in zip(tr.records, ts[1:]):
        assert nxt - r.t == (1 if r.case == GRAD_STEP else T)
    f = tr.f_values()
    assert np.all(f[1:] <= f[:-1] + 1e-9 * np.maximum(1, np.abs(f[:-1])))


def test_tagd_rayleigh_practical():
    prob, p = _rayleigh()
    x0 = initial_point(prob, "random", np.random.default_rng(7))
    tr = tagd(prob, p, x0)
    assert tr.status == "converged"
    assert tr.result_grad_norm <= 1e-3
    assert np.linalg.norm(prob.riemannian_grad(tr.result_point)) == pytest.approx(tr.result_grad_norm)
    _check_trace(tr, p.T_inner)
    assert tr.invariants["total_violations"] == 0
    assert tr.counters.gradient_queries <= 2 * tr.t + 1


def test_tagd_already_critical():
    prob, p = _rayleigh(6)
    x0 = prob.info["eigvecs"][:, 0]
    tr = tagd(prob, p, x0)
    assert tr.t == 0 and tr.records == [] and tr.result_f == prob.cost(x0)


def test_tagd_case1_decrease_quadratic():
    prob = build_problem("quadratic_euclidean", n=10)
    p = derive_params(prob.lipschitz_L, prob.lipschitz_rho, prob.manifold.curvature, 1e-3,
                      mode="theory", b_max=10.0)
    x0 = prob.info["y_star"] + 3.0
    tr = tagd(prob, p, x0)
    assert tr.status == "converged"
    f = tr.f_values()
    steps = [i for i, r in enumerate(tr.records) if r.case == GRAD_STEP]
    assert steps
    for i in steps:
        assert f[i] - f[i + 1] >= 7 / 8 * p.ell * p.M_mom**2 - 1e-12
    assert 7 / 8 * p.ell * p.M_mom**2 >= p.E_thresh / p.T_inner
    assert tr.invariants["total_violations"] == 0


def test_ptagd_saddle_escape():
    prob, _ = _rayleigh(20)
    M = prob.manifold
    x0 = initial_point(prob, "saddle")
    assert np.linalg.norm(prob.riemannian_grad(x0)) < 1e-14
    p = derive_params(prob.lipschitz_L, prob.lipschitz_rho, M.curvature, 1e-3, d=M.dim,
                      delta=0.05, Delta_f=1.0)
    tr = ptagd(prob, p, x0, 0.05, 1.0, np.random.default_rng(0))
    assert tr.records[0].case == PERTURBED_TSS
    assert tr.records[1].f_value <= prob.cost(x0) - p.E_thresh / 2
    assert tr.certificate["second_order_ok"]
    assert tr.result_f - prob.f_low < 1e-6
    assert tr.invariants["total_violations"] == 0


def test_ptagd_near_minimum():
    prob, _ = _rayleigh(10)
    M = prob.manifold
    x0 = prob.info["eigvecs"][:, 0]
    p = derive_params(prob.lipschitz_L, prob.lipschitz_rho, M.curvature, 1e-3, d=M.dim,
                      delta=0.05, Delta_f=1.0)
    tr = ptagd(prob, p, x0, 0.05, 1.0, np.random.default_rng(0))
    assert [r.case for r in tr.records] == [PERTURBED_TSS]
    assert tr.certificate["lambda_min"] >= -math.sqrt(p.rho_hat * p.eps)
    assert tr.certificate["lambda_min"] == pytest.approx(2 * (1 / 9), abs=1e-5)


def test_ptagd_validates_before_work():
    prob, p = _rayleigh(5)
    x0 = initial_point(prob, "saddle")
    with pytest.raises(ValueError):
        ptagd(prob, p, x0, 1.5, 1.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        ptagd(prob, p, x0, 0.05, 1e-9, np.random.default_rng(0))


def test_guess_pairs_diagonal_order():
    assert list(guess_pairs(2)) == [(0, 0, 0), (1, 0, 1), (1, 1, 0), (2, 0, 2), (2, 1, 1), (2, 2, 0)]


def test_backtracking_with_true_constants_matches_tagd():
    prob, _ = _rayleigh(20)
    x0 = initial_point(prob, "random", np.random.default_rng(2))
    L, rh = prob.lipschitz_L, prob.lipschitz_rho + prob.lipschitz_L
    run = backtracking_tagd(prob, x0, L, rh, 2.0, 1e-3)
    p = derive_params(L, prob.lipschitz_rho, prob.manifold.curvature, 1e-3)
    ref = tagd(prob, p, x0)
    assert run.budget["diagonal"] == 0
    assert run.t == ref.t
    np.testing.assert_array_equal(run.result_point, ref.result_point)


def test_backtracking_recovers_from_low_guess():
    prob = build_problem("quadratic_euclidean", n=10, spectrum="linspace:0.1:1")
    x0 = initial_point(prob, "random", np.random.default_rng(0))
    run = backtracking_tagd(prob, x0, 0.05, 0.05, 2.0, 1e-4, t_cap=300)
    assert [a["status"] for a in run.attempts] == ["truncated", "converged"]
    assert run.budget["diagonal"] == 1
    assert run.result_grad_norm <= 1e-4


def test_backtracking_gives_up():
    prob, _ = _rayleigh(10)
    x0 = initial_point(prob, "random", np.random.default_rng(2))
    with pytest.raises(GiveUp) as err:
        backtracking_tagd(prob, x0, 1.0, 1.0, 2.0, 1e-3, p_max=1, t_cap=1)
    assert len(err.value.attempts) == 3


def test_backtracking_validates():
    prob, _ = _rayleigh(4)
    with pytest.raises(ValueError):
        backtracking_tagd(prob, np.eye(4)[0], 1.0, 1.0, 1.0, 1e-3)
    with pytest.raises(ValueError):
        backtracking_tagd(prob, np.eye(4)[0], 0.0, 1.0, 2.0, 1e-3)


def test_rgd_isotropic_one_step():
    lam = 3.0
    prob = ProblemDef(Euclidean(4), lambda y: 0.5 * lam * float(y @ y), lambda y: lam * y, 0.0,
                      lam, lam, name="iso")
    tr = rgd(prob, np.ones(4), 1e-10, 1 / lam, 10)
    assert tr.t == 1 and tr.result_f == 0.0


def test_rgd_decrease_checked():
    prob, _ = _rayleigh(30)
    x0 = initial_point(prob, "random", np.random.default_rng(1))
    tr = rgd(prob, x0, 1e-3, 1 / prob.lipschitz_L, 10**5)
    assert tr.status == "converged"
    assert tr.invariants["checks"]["rgd_decrease"] == tr.t
    assert tr.invariants["total_violations"] == 0
    assert tr.counters.gradient_queries == tr.t + 1


def test_rgd_max_iters():
    prob, _ = _rayleigh(30)
    x0 = initial_point(prob, "random", np.random.default_rng(1))
    tr = rgd(prob, x0, 1e-12, 1 / prob.lipschitz_L, 5)
    assert tr.status == "max_iters" and tr.t == 5 and not tr.converged
