"""Algorithm parameters derived from the problem constants.

Given gradient and Hessian Lipschitz constants (L, rho) of f and the
curvature profile of the manifold, the pullbacks have constants::

    ell = 2 L,   rho_hat = rho + L sqrt(K),   b = min(1/sqrt(K), K/F) / 12

from which the step size, momentum and thresholds follow.  The
universal constant ``c`` defaults to 720 in theory mode, where every
inequality behind the guarantees holds, and to 5 in practical mode.
"""
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

from ..exceptions import AssumptionViolation

THEORY_C = 720.0
PRACTICAL_C = 5.0


@dataclass(frozen=True)
class AlgoParams:
    eps: float
    ell: float
    rho_hat: float
    b: float
    eta: float
    kappa: float
    theta: float
    gamma: float
    s_nce: float
    chi: float
    c: float
    r: float
    T_inner: int
    E_thresh: float
    L_dist: float
    M_mom: float
    mode: str = "practical"
    A: float = 1.0

    def T1(self, f_gap):
        """Outer iteration bound for TAGD given f(x0) - f_low."""
        return max(f_gap, 0.0) / self.E_thresh * self.T_inner

    def T2(self, f_gap):
        """Outer iteration bound for PTAGD given f(x0) - f_low."""
        return (2.0 + 4.0 * max(f_gap, 0.0) / self.E_thresh) * self.T_inner

    def as_dict(self):
        return asdict(self)


def ball_radius(curvature, b_max):
    K, F = curvature.k, curvature.f_bound
    a = 1.0 / math.sqrt(K) if K > 0 else math.inf
    # K/F is infinite when F = 0
    bF = K / F if F > 0 else math.inf
    b = min(a, bF) / 12.0
    return min(b, b_max) if math.isinf(b) else b


def params_from_pullback_constants(ell, rho_hat, b, eps, *, c=None, mode="practical",
                                   chi_floor=1.0, A_extra=None):
    """Parameters from pullback-level constants (ell, rho_hat, b).

    ``A_extra`` is the additional lower bound on chi used by the perturbed
    variant.
    """
    if mode not in ("theory", "practical"):
        raise ValueError(f"mode must be 'theory' or 'practical', got {mode!r}")
    if c is None:
        c = THEORY_C if mode == "theory" else PRACTICAL_C
    for name, val in (("ell", ell), ("rho_hat", rho_hat), ("eps", eps), ("c", c), ("b", b)):
        if not (val > 0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    if chi_floor < 1:
        raise ValueError("chi_floor must be at least 1")

    root = math.sqrt(rho_hat * eps)
    if root > ell / 2:
        raise AssumptionViolation(
            f"sqrt(rho_hat*eps) = {root:.6g} exceeds ell/2 = {ell / 2:.6g}")
    if eps > b * b * rho_hat:
        raise AssumptionViolation(
            f"eps = {eps:.6g} exceeds b^2*rho_hat = {b * b * rho_hat:.6g}")

    eta = 1.0 / (4.0 * ell)
    kappa = ell / root
    theta = 1.0 / (4.0 * math.sqrt(kappa))
    gamma = root / 4.0
    s_nce = math.sqrt(eps / rho_hat) / 32.0

    A = max(chi_floor, math.log2(1.0 / theta))
    if A_extra is not None:
        A = max(math.log2(1.0 / theta), A_extra)
    sk = math.sqrt(kappa)
    T = 4 * math.ceil(sk * A * c / 4.0)
    chi = T / (sk * c)

    r = eta * eps * chi**-5 * c**-8
    E = math.sqrt(eps**3 / rho_hat) * chi**-5 * c**-7
    Ld = math.sqrt(4.0 * eps / rho_hat) * chi**-2 * c**-3
    Mm = eps * sk / ell / c
    return AlgoParams(eps=eps, ell=ell, rho_hat=rho_hat, b=b, eta=eta, kappa=kappa,
                      theta=theta, gamma=gamma, s_nce=s_nce, chi=chi, c=float(c), r=r,
                      T_inner=int(T), E_thresh=E, L_dist=Ld, M_mom=Mm, mode=mode, A=A)


def derive_params(L, rho, curvature, eps, c=None, chi_floor=1.0, d=None, delta=None,
                  Delta_f=None, *, mode="practical", b_max=None):
    """Derive all algorithm parameters from (L, rho), curvature and eps.

    Supplying ``d``, ``delta`` and ``Delta_f`` selects the perturbed
    variant, whose chi must also dominate
    ``log2(sqrt(d) ell^1.5 Delta_f / ((rho_hat eps)^(1/4) eps^2 delta))``.
    """
    for name, val in (("L", L), ("rho", rho), ("eps", eps)):
        if not (val > 0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    ell = 2.0 * L
    rho_hat = rho + L * math.sqrt(curvature.k)
    if b_max is None:
        b_max = 1e6 * math.sqrt(eps / rho_hat)
    b = ball_radius(curvature, b_max)
    A_extra = None
    perturbed = (d, delta, Delta_f)
    if any(v is not None for v in perturbed):
        if any(v is None for v in perturbed):
            raise ValueError("the perturbed variant needs d, delta and Delta_f together")
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        if not Delta_f > 0:
            raise ValueError(f"Delta_f must be positive, got {Delta_f}")
        A_extra = math.log2(math.sqrt(d) * ell**1.5 * Delta_f
                            / ((rho_hat * eps) ** 0.25 * eps**2 * delta))
    return params_from_pullback_constants(ell, rho_hat, b, eps, c=c, mode=mode,
                                          chi_floor=chi_floor, A_extra=A_extra)


class Relation(NamedTuple):
    item: int
    description: str
    passed: bool
    residual: float


def _le(a, b):
    """Residual of a <= b, negative or zero when it holds."""
    return a - b


def check_param_relations(p):
    """Evaluate the eight parameter relations; returns a list of Relation."""
    sk = math.sqrt(p.kappa)
    T, E, Ld, Mm, s = p.T_inner, p.E_thresh, p.L_dist, p.M_mom, p.s_nce
    out = []

    def add(item, desc, residuals, strict=()):
        ok = all(r <= 0 for r in residuals) and all(r < 0 for r in strict)
        out.append(Relation(item, desc, ok, max(list(residuals) + list(strict))))

    add(1, "kappa >= 2 and log2(1/theta) >= 5/2",
        [_le(2.0, p.kappa), _le(2.5, math.log2(1.0 / p.theta))])
    add(2, "eps <= ell*b/2 and 2*ell*M < ell*b/2",
        [_le(p.eps, p.ell * p.b / 2)], strict=[_le(2 * p.ell * Mm, p.ell * p.b / 2)])
    add(3, "r <= L_dist/64 and L_dist <= s <= b/32",
        [_le(p.r, Ld / 64), _le(Ld, s), _le(s, p.b / 32)])
    add(4, "ell*M^2 >= 64E/T and theta*ell*M^2 >= 4E/T",
        [_le(64 * E / T, p.ell * Mm**2), _le(4 * E / T, p.theta * p.ell * Mm**2)])
    add(5, "eps*r + ell*r^2/2 <= E/4",
        [_le(p.eps * p.r + p.ell * p.r**2 / 2, E / 4)])
    lhs6 = Ld**2 / (16 * sk * p.eta * T)
    rel6 = abs(lhs6 - E) / E
    out.append(Relation(6, "L_dist^2/(16 sqrt(kappa) eta T) = E", rel6 <= 1e-12, rel6))
    add(7, "s^2/(2 eta) >= 2E and (gamma - 4 rho_hat s) s^2/2 >= 2E",
        [_le(2 * E, s**2 / (2 * p.eta)), _le(2 * E, (p.gamma - 4 * p.rho_hat * s) * s**2 / 2)])
    add(8, "rho_hat (L_dist + M) <= sqrt(rho_hat eps)",
        [_le(p.rho_hat * (Ld + Mm), math.sqrt(p.rho_hat * p.eps))])
    return out
