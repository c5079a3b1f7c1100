import math

import pytest

import oracles
from tangent_accel.accel.params import (
    PRACTICAL_C,
    THEORY_C,
    ball_radius,
    check_param_relations,
    derive_params,
    params_from_pullback_constants,
)
from tangent_accel.exceptions import AssumptionViolation
from tangent_accel.geometry import CurvatureProfile

SPHERE = CurvatureProfile(1.0, 1.0, 1.0, 0.0)
FLAT = CurvatureProfile(0.0, 0.0, 0.0, 0.0)


def test_worked_example():
    p = derive_params(1.0, 1.0, SPHERE, 0.01, c=5)
    for key, val in oracles.PARAMS_EXAMPLE.items():
        assert getattr(p, key) == pytest.approx(val, rel=1e-12), key
    assert p.T_inner % 4 == 0 and p.T_inner > 0
    assert p.chi >= p.A
    assert p.chi == pytest.approx(p.T_inner / (math.sqrt(p.kappa) * p.c), rel=1e-15)


def test_assumption_violation_message():
    with pytest.raises(AssumptionViolation) as err:
        derive_params(1.0, 1.0, SPHERE, 0.02, c=5)
    assert oracles.ASSUMPTION_MSG_EPS in str(err.value)
    assert oracles.ASSUMPTION_MSG_BOUND in str(err.value)


def test_assumption_violation_root():
    with pytest.raises(AssumptionViolation):
        params_from_pullback_constants(1.0, 100.0, 10.0, 0.01)


def test_flat_case_ball():
    p = derive_params(1.0, 1.0, FLAT, 0.01, b_max=1e6)
    assert p.b == 1e6
    assert p.rho_hat == 1.0
    assert ball_radius(SPHERE, 1e6) == pytest.approx(1.0 / 12.0)
    assert ball_radius(CurvatureProfile(1.0, 1.0, 1.0, 4.0), 1e6) == pytest.approx(0.25 / 12.0)


def test_second_parameter_set():
    p = derive_params(2.0, 3.0, SPHERE, 1e-3, c=7)
    sk, c, chi = math.sqrt(p.kappa), p.c, p.chi
    assert p.r == pytest.approx(p.eta * p.eps * chi**-5 * c**-8, rel=1e-14)
    assert p.E_thresh == pytest.approx(math.sqrt(p.eps**3 / p.rho_hat) * chi**-5 * c**-7, rel=1e-14)
    assert p.L_dist == pytest.approx(math.sqrt(4 * p.eps / p.rho_hat) * chi**-2 * c**-3, rel=1e-14)
    assert p.M_mom == pytest.approx(p.eps * sk / p.ell / c, rel=1e-14)


def test_default_c():
    assert derive_params(1.0, 1.0, SPHERE, 1e-3, mode="theory").c == THEORY_C
    assert derive_params(1.0, 1.0, SPHERE, 1e-3).c == PRACTICAL_C


def test_perturbed_variant_needs_all_inputs():
    with pytest.raises(ValueError):
        derive_params(1.0, 1.0, SPHERE, 1e-3, d=3)
    with pytest.raises(ValueError):
        derive_params(1.0, 1.0, SPHERE, 1e-3, d=3, delta=1.5, Delta_f=1.0)
    p = derive_params(1.0, 1.0, SPHERE, 1e-3, d=3, delta=0.1, Delta_f=1.0)
    need = math.log2(math.sqrt(3) * p.ell**1.5 / ((p.rho_hat * 1e-3) ** 0.25 * 1e-6 * 0.1))
    assert p.chi >= need


@pytest.mark.parametrize("bad", [{"L": 0.0}, {"rho": -1.0}, {"eps": 0.0}, {"c": 0.0}])
def test_invalid_inputs(bad):
    kw = {"L": 1.0, "rho": 1.0, "eps": 1e-3, "c": 5.0}
    kw.update(bad)
    with pytest.raises(ValueError):
        derive_params(kw["L"], kw["rho"], SPHERE, kw["eps"], c=kw["c"])


def test_identity_item():
    p = derive_params(1.0, 1.0, SPHERE, 0.01, c=5)
    item6 = [r for r in check_param_relations(p) if r.item == 6][0]
    assert item6.passed and abs(item6.residual) <= 1e-12


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-5])
@pytest.mark.parametrize("chi", [1.0, 3.0, 20.0])
def test_theory_mode_all_items(eps, chi):
    p = derive_params(1.0, 1.0, SPHERE, eps, chi_floor=chi, mode="theory")
    rel = check_param_relations(p)
    assert sorted(r.item for r in rel) == list(range(1, 9))
    assert all(r.passed for r in rel), [r for r in rel if not r.passed]


def test_small_c_flags_items():
    p = derive_params(1.0, 1.0, SPHERE, 1e-3, c=1)
    failed = {r.item for r in check_param_relations(p) if not r.passed}
    assert {3, 7} <= failed
