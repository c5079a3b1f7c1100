"""Tangent space steps: safeguarded accelerated gradient descent on a pullback.

The inner loop runs capped Nesterov-style momentum on fhat_x inside the
ball of radius b in T_x M.  A failed weak-convexity test between two
iterates (the negative curvature condition) hands control to a short
line probe along the momentum direction.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..exceptions import InvariantBreach
from ..pullback import QueryCounters, pullback_grad, pullback_value

REL_TOL = 1e-9


class ExitCase(str, enum.Enum):
    NCE_EXIT = "NCE_EXIT"
    BALL_EXIT = "BALL_EXIT"
    SMALL_GRAD_EXIT = "SMALL_GRAD_EXIT"
    FULL_RUN = "FULL_RUN"


def _tol(q):
    return REL_TOL * max(1.0, abs(q))


class InvariantMonitor:
    """Counts runtime checks and their failures.

    In strict mode the first failure raises :class:`InvariantBreach`;
    otherwise failures are recorded with their witnesses.
    """

    def __init__(self, strict=True, max_witnesses=20):
        self.strict = strict
        self.checks = {}
        self.violations = {}
        self.witnesses = []
        self.max_witnesses = max_witnesses

    def check(self, name, ok, message="", **witness):
        self.checks[name] = self.checks.get(name, 0) + 1
        if ok:
            return True
        self.violations[name] = self.violations.get(name, 0) + 1
        if len(self.witnesses) < self.max_witnesses:
            self.witnesses.append({"check": name, "message": message, **witness})
        if self.strict:
            raise InvariantBreach(name, message, witness)
        return False

    @property
    def total_violations(self):
        return sum(self.violations.values())

    def summary(self):
        return {"checks": dict(sorted(self.checks.items())),
                "violations": dict(sorted(self.violations.items())),
                "total_violations": self.total_violations}


@dataclass
class TSSOutcome:
    point: np.ndarray
    exit_case: ExitCase
    iterations: int
    hamiltonians: np.ndarray
    counters_delta: QueryCounters
    final_tangent: np.ndarray
    f_value: float
    start_value: float
    path: Optional[List[np.ndarray]] = field(default=None, repr=False)


def ncc_triggers(f_s, f_u, grad_u, s, u, gamma, inner=None):
    """True iff f_s < f_u + <grad_u, s - u> - (gamma/2) |s - u|^2."""
    inner = np.vdot if inner is None else inner
    d = s - u
    return bool(f_s < f_u + inner(grad_u, d) - 0.5 * gamma * inner(d, d))


def capped_theta(s, v, theta, b, inner=None):
    """Momentum parameter keeping u = s + (1 - theta_j) v in the ball of radius 2b."""
    inner = np.vdot if inner is None else inner
    ss, sv, vv = inner(s, s), inner(s, v), inner(v, v)
    R2 = 4.0 * b * b
    amax = 1.0 - theta

    def q(a):
        return ss + 2.0 * a * sv + a * a * vv

    if vv == 0.0 or q(amax) <= R2:
        return theta
    c0 = R2 - ss
    disc = sv * sv + vv * c0
    if c0 < 0 or disc <= 1e-12 * max(1.0, sv * sv, abs(vv * c0)):
        # degenerate quadratic, fall back to bisection on q(a) = R2
        lo, hi = 0.0, amax
        if q(lo) > R2:
            raise InvariantBreach("capped_theta", "no root in [0, 1 - theta]: |s| exceeds 2b",
                                  {"ss": ss, "b": b})
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if q(mid) <= R2:
                lo = mid
            else:
                hi = mid
        alpha = lo
    else:
        sq = math.sqrt(disc)
        alpha = c0 / (sv + sq) if sv >= 0 else (sq - sv) / vv
    if alpha < -1e-10 or alpha > amax + 1e-10:
        raise InvariantBreach("capped_theta", f"root {alpha} outside [0, {amax}]",
                              {"alpha": alpha, "theta": theta})
    return min(max(1.0 - alpha, theta), 1.0)


def _nce_probe(prob, params, x, s, v, f_s, ctr):
    """Returns (tangent, value).  Uses 0 or 3 function queries."""
    M = prob.manifold
    nv = M.norm(x, v)
    if nv == 0.0:
        raise InvariantBreach("nce", "momentum is zero when negative curvature was detected")
    if nv >= params.s_nce:
        return s, f_s
    vd = (params.s_nce / nv) * v
    cands = [s, s + vd, s - vd]
    vals = [pullback_value(prob, x, c, ctr) for c in cands]
    k = 0
    for i in (1, 2):
        if vals[i] < vals[k]:
            k = i
    return cands[k], vals[k]


def nce(prob, params, x, s, v, ctr=None):
    """Negative curvature exploitation: the best of s and s +- s_nce v/|v|."""
    return _nce_probe(prob, params, x, s, v, None, ctr)[0]


def check_improve_or_localize(coords, hamiltonians, params, monitor, max_full=3000):
    """|s_q - s_q'|^2 <= 16 sqrt(kappa) eta (q - q') (E_q' - E_q) for q' <= q.

    ``coords`` holds the iterates in an orthonormal frame, one row each.
    The tolerance is the per-step Hamiltonian slack propagated through
    the Cauchy-Schwarz chain, c (q - q')^2 * 1e-9 * max(1, |E|).  Paths
    longer than ``max_full`` are checked on an evenly spaced subsample.
    """
    n = min(len(coords), len(hamiltonians))
    if n < 2:
        return
    idx = np.arange(n)
    if n > max_full:
        idx = np.unique(np.linspace(0, n - 1, max_full).astype(int))
    S = np.asarray(coords)[idx]
    E = np.asarray(hamiltonians)[idx]
    c = 16.0 * math.sqrt(params.kappa) * params.eta
    sq = np.sum(S * S, axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * S @ S.T, 0.0)
    gap = idx[:, None] - idx[None, :]
    rhs = c * gap * (E[None, :] - E[:, None])
    scale = max(1.0, float(np.max(np.abs(E))))
    # rounding in the Gram expansion scales with |s|^2
    tol = c * gap.astype(float) ** 2 * REL_TOL * scale + 1e-12 * np.max(sq)
    bad = (gap >= 0) & (D2 > rhs + tol)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        monitor.check("improve_or_localize", False,
                      f"{int(np.sum(bad))} pair(s) violate the localization bound",
                      q=int(idx[i]), q_prime=int(idx[j]))
    else:
        monitor.check("improve_or_localize", True)


def tss(prob, params, x, s0=None, ctr=None, *, monitor=None, grad_x=None, f_x=None,
        keep_path=False):
    """Run the tangent space steps from x.

    ``s0`` switches to perturbed mode (no small-gradient exit).
    ``grad_x`` and ``f_x`` let callers pass the gradient and value at the
    origin they already paid for; they are only reused in unperturbed
    mode where the first iterate is the origin.
    """
    M = prob.manifold
    p = params
    ctr = QueryCounters() if ctr is None else ctr
    monitor = InvariantMonitor(strict=(p.mode == "theory")) if monitor is None else monitor
    start = ctr.copy()

    def inner(a, b_):
        return M.inner(x, a, b_)

    def norm(a):
        return math.sqrt(max(inner(a, a), 0.0))

    perturbed = s0 is not None
    if perturbed:
        if norm(s0) > p.r * (1 + 1e-12):
            raise ValueError(f"perturbation norm {norm(s0)} exceeds r = {p.r}")
        s = np.array(s0, dtype=float)
        f_s = pullback_value(prob, x, s, ctr)
        g_cache = None
    else:
        s = M.zero(x)
        f_s = pullback_value(prob, x, s, ctr) if f_x is None else f_x
        g_cache = grad_x
    v = M.zero(x)
    f_start = f_s
    E_hist = [f_s]
    path = [s.copy()]
    T = p.T_inner
    lemma_ok = 2.0 * p.eta * p.gamma <= p.theta * (1 + REL_TOL)
    monitor.check("balls.theta_lower", lemma_ok, "2*eta*gamma > theta")

    def finish(case, s_out, f_out, iters):
        basis = M.basis(x)
        coords = np.array([M.frame_coords(x, basis, q) for q in path])
        check_improve_or_localize(coords, E_hist, p, monitor)
        ctr.retraction_calls += 1
        y = M.exp(x, s_out)
        return TSSOutcome(point=y, exit_case=case, iterations=iters,
                          hamiltonians=np.array(E_hist), counters_delta=ctr - start,
                          final_tangent=s_out, f_value=f_out, start_value=f_start,
                          path=path if keep_path else None)

    for j in range(T):
        nv = norm(v)
        th = capped_theta(s, v, p.theta, p.b, inner)
        ns = norm(s)
        monitor.check("balls.s", ns <= p.b * (1 + REL_TOL), f"|s_{j}| = {ns} > b = {p.b}", j=j)
        monitor.check("balls.theta", p.theta * (1 - REL_TOL) <= th <= 1.0 + REL_TOL,
                      f"theta_j = {th} outside [theta, 1]", j=j)
        if nv == 0.0:
            u = s
            f_u = f_s
            g_u = g_cache if g_cache is not None else pullback_grad(prob, x, u, ctr)
        else:
            u = s + (1.0 - th) * v
            f_u = pullback_value(prob, x, u, ctr)
            g_u = pullback_grad(prob, x, u, ctr)
        g_cache = None
        nu = norm(u)
        monitor.check("balls.u", nu <= 2 * p.b * (1 + REL_TOL), f"|u_{j}| = {nu} > 2b", j=j)

        if ncc_triggers(f_s, f_u, g_u, s, u, p.gamma, inner):
            s_out, f_out = _nce_probe(prob, p, x, s, v, f_s, ctr)
            if ns <= p.L_dist:
                monitor.check("nce_quality", f_out <= E_hist[-1] - 2 * p.E_thresh + _tol(E_hist[-1]),
                              f"NCE value {f_out} above E_j - 2E", j=j)
            return finish(ExitCase.NCE_EXIT, s_out, f_out, j)

        s_new = u - p.eta * g_u
        v_new = s_new - s
        ng_u = norm(g_u)
        f_new = pullback_value(prob, x, s_new, ctr)
        E_new = f_new + inner(v_new, v_new) / (2 * p.eta)
        E_old = E_hist[-1]
        bound = E_old - th / (2 * p.eta) * nv**2 - p.eta / 4 * ng_u**2
        monitor.check("hamiltonian", E_new <= bound + _tol(E_old),
                      f"E_{j + 1} = {E_new!r} exceeds bound {bound!r}", j=j)
        if nv >= p.M_mom:
            monitor.check("hamiltonian.momentum", E_old - E_new >= 4 * p.E_thresh / T - _tol(E_old),
                          f"decrease {E_old - E_new} below 4E/T with |v| >= M", j=j)
        if abs(nu - 2 * p.b) <= 1e-12 * p.b:
            monitor.check("balls.boundary", norm(s_new) > p.b,
                          "|u_j| = 2b but the next iterate stayed in the ball", j=j)
        s, v, f_s = s_new, v_new, f_new
        E_hist.append(E_new)
        path.append(s.copy())

        if norm(s) > p.b:
            return finish(ExitCase.BALL_EXIT, s, f_s, j + 1)
        if not perturbed:
            g_s = pullback_grad(prob, x, s, ctr)
            if norm(g_s) <= p.eps / 2:
                return finish(ExitCase.SMALL_GRAD_EXIT, s, f_s, j + 1)
            if norm(v) == 0.0:
                g_cache = g_s
    return finish(ExitCase.FULL_RUN, s, f_s, T)

