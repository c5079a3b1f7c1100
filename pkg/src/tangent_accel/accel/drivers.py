"""Outer loops: TAGD, its perturbed variant, backtracking over constants, RGD.

Each driver returns a :class:`RunTrace` with one record per outer step.
A record describes the step taken from x_t: the counter t before the
step, the branch, f(x_t), |grad f(x_t)|, the inner exit case and the
cumulative query counts after the step.

Monitoring values f(x_t) stored in the trace are not charged to the
query counters; only the evaluations the algorithm itself needs are.
"""
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..exceptions import AssumptionViolation, BudgetExceeded, GiveUp, InvariantBreach
from ..geometry import random_tangent_in_ball
from ..pullback import QueryCounters, lambda_min_origin, pullback_grad, pullback_value
from .params import ball_radius, params_from_pullback_constants
from .tss import REL_TOL, ExitCase, InvariantMonitor, tss

GRAD_STEP = "GRAD_STEP"
TSS = "TSS"
PERTURBED_TSS = "PERTURBED_TSS"


@dataclass
class TraceRecord:
    t: int
    case: str
    exit_case: Optional[str]
    f_value: float
    grad_norm: float
    E_min: float
    E_max: float
    fq: int
    gq: int
    rq: int
    wall_ms: float = 0.0


@dataclass
class RunTrace:
    records: List[TraceRecord]
    result_point: np.ndarray
    result_f: float
    result_grad_norm: float
    t: int
    counters: QueryCounters
    params: object = None
    status: str = "converged"
    certificate: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)
    invariants: dict = field(default_factory=dict)
    guarantee_shortfalls: dict = field(default_factory=dict)
    tss_iterations: int = 0
    tss_runs: int = 0
    attempts: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status in ("converged", "likely_socp")

    def f_values(self):
        return np.array([r.f_value for r in self.records] + [self.result_f])


class _Recorder:
    """Shared bookkeeping for the outer loops."""

    def __init__(self, prob, params, ctr, monitor, timing):
        self.prob = prob
        self.params = params
        self.ctr = ctr
        self.monitor = monitor
        self.timing = timing
        self.records = []
        self.shortfalls = {}
        self.t0 = time.perf_counter()
        self.tss_iterations = 0
        self.tss_runs = 0

    def guarantee(self, name, ok, message, theory):
        """Decrease guarantees are asserted in theory mode and tallied otherwise."""
        if theory:
            self.monitor.check(name, ok, message)
        elif not ok:
            self.shortfalls[name] = self.shortfalls.get(name, 0) + 1

    def add(self, t, case, exit_case, f, gn, E=None):
        wall = (time.perf_counter() - self.t0) * 1e3 if self.timing else 0.0
        E_min = float(np.min(E)) if E is not None else math.nan
        E_max = float(np.max(E)) if E is not None else math.nan
        self.records.append(TraceRecord(t, case, exit_case, f, gn, E_min, E_max,
                                        self.ctr.function_queries, self.ctr.gradient_queries,
                                        self.ctr.retraction_calls, wall))


def _setup(prob, params, x0, ctr, monitor, strict):
    M = prob.manifold
    x = np.array(x0, dtype=float)
    M.check_point(x)
    ctr = QueryCounters() if ctr is None else ctr
    theory = params is not None and params.mode == "theory"
    if monitor is None:
        monitor = InvariantMonitor(strict=theory if strict is None else strict)
    return M, x, ctr, monitor, theory


def tagd(prob, params, x0, ctr=None, *, monitor=None, strict=None, enforce_budget=None,
         t_limit=None, timing=False):
    """Tangent accelerated gradient descent to an eps-first-order critical point.

    ``t_limit`` truncates the run once the next step would push t past
    it (used by backtracking).  In theory mode the iteration and query
    budgets are enforced and invariant failures raise.
    """
    p = params
    M, x, ctr, monitor, theory = _setup(prob, p, x0, ctr, monitor, strict)
    enforce_budget = theory if enforce_budget is None else enforce_budget
    rec = _Recorder(prob, p, ctr, monitor, timing)
    f0 = fx = float(prob.cost(x))
    T1 = p.T1(f0 - prob.f_low)
    t = 0
    status = "converged"
    pending_case2 = None
    while True:
        g = pullback_grad(prob, x, M.zero(x), ctr)
        gn = M.norm(x, g)
        if pending_case2 is not None and gn > p.eps:
            dec = pending_case2 - fx
            rec.guarantee("case2_decrease", dec >= p.E_thresh - REL_TOL * max(1.0, abs(fx)),
                          f"TSS decreased f by {dec:.3e} < E = {p.E_thresh:.3e}", theory)
        pending_case2 = None
        if gn <= p.eps:
            break
        inc = 1 if gn > 2 * p.ell * p.M_mom else p.T_inner
        if t_limit is not None and t + inc > t_limit:
            status = "truncated"
            break
        if inc == 1:
            x_new = M.exp(x, -p.eta * g)
            ctr.retraction_calls += 1
            f_new = float(prob.cost(x_new))
            dec = fx - f_new
            rec.guarantee("case1_decrease",
                          dec >= 7.0 / 8.0 * p.ell * p.M_mom**2 - REL_TOL * max(1.0, abs(fx)),
                          f"gradient step decreased f by {dec:.3e}", theory)
            rec.add(t, GRAD_STEP, None, fx, gn)
        else:
            out = tss(prob, p, x, None, ctr, monitor=monitor, grad_x=g)
            rec.tss_iterations += out.iterations
            rec.tss_runs += 1
            x_new, f_new = out.point, out.f_value
            pending_case2 = fx
            rec.add(t, TSS, out.exit_case.value, fx, gn, out.hamiltonians)
        monitor.check("outer_monotone", f_new <= fx + REL_TOL * max(1.0, abs(fx)),
                      f"f increased from {fx!r} to {f_new!r}", t=t)
        x, fx = x_new, f_new
        t += inc
        monitor.check("budget.gradient", ctr.gradient_queries <= 2 * t,
                      f"{ctr.gradient_queries} gradient queries after t = {t}")
        monitor.check("budget.function", ctr.function_queries <= 3 * t,
                      f"{ctr.function_queries} function queries after t = {t}")
        if enforce_budget and t > T1:
            raise BudgetExceeded(f"t = {t} exceeds T1 = {T1:.6g}; the Lipschitz constants "
                                 "are probably wrong")
    budget = {"T1": T1, "t": t, "gradient_queries": ctr.gradient_queries,
              "function_queries": ctr.function_queries,
              "gradient_budget": 2 * T1, "function_budget": 3 * T1}
    return RunTrace(rec.records, x, fx, gn, t, ctr.copy(), p, status,
                    certificate={"grad_norm": gn}, budget=budget,
                    invariants=monitor.summary(), guarantee_shortfalls=dict(rec.shortfalls),
                    tss_iterations=rec.tss_iterations, tss_runs=rec.tss_runs)


def ptagd(prob, params, x0, delta, Delta_f, rng, ctr=None, *, monitor=None, strict=None,
          enforce_budget=None, timing=False, certificate_tol=1e-8):
    """Perturbed TAGD: returns a likely second-order critical point.

    When the gradient is small a random perturbation of radius r seeds
    the inner loop; if that fails to decrease f by E/2 the current point
    is returned together with a Hessian eigenvalue certificate.
    """
    p = params
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    f0 = float(prob.cost(np.asarray(x0, dtype=float)))
    need = max(f0 - prob.f_low, math.sqrt(p.eps**3 / p.rho_hat))
    if not Delta_f >= need:
        raise ValueError(f"Delta_f = {Delta_f} must be at least {need}")
    M, x, ctr, monitor, theory = _setup(prob, p, x0, ctr, monitor, strict)
    enforce_budget = theory if enforce_budget is None else enforce_budget
    rec = _Recorder(prob, p, ctr, monitor, timing)
    fx = f0
    T2 = p.T2(f0 - prob.f_low)
    t = 0
    T = p.T_inner
    pending_case2 = None
    while True:
        g = pullback_grad(prob, x, M.zero(x), ctr)
        gn = M.norm(x, g)
        if pending_case2 is not None and gn > p.eps:
            dec = pending_case2 - fx
            rec.guarantee("case2_decrease", dec >= p.E_thresh - REL_TOL * max(1.0, abs(fx)),
                          f"TSS decreased f by {dec:.3e} < E", theory)
        pending_case2 = None
        if gn > 2 * p.ell * p.M_mom:
            x_new = M.exp(x, -p.eta * g)
            ctr.retraction_calls += 1
            f_new = float(prob.cost(x_new))
            rec.add(t, GRAD_STEP, None, fx, gn)
            inc = 1
        elif gn > p.eps:
            out = tss(prob, p, x, None, ctr, monitor=monitor, grad_x=g)
            rec.tss_iterations += out.iterations
            rec.tss_runs += 1
            x_new, f_new = out.point, out.f_value
            pending_case2 = fx
            rec.add(t, TSS, out.exit_case.value, fx, gn, out.hamiltonians)
            inc = T
        else:
            f_here = pullback_value(prob, x, M.zero(x), ctr)
            xi = random_tangent_in_ball(M, x, p.r, rng)
            out = tss(prob, p, x, xi, ctr, monitor=monitor)
            rec.tss_iterations += out.iterations
            rec.tss_runs += 1
            rec.add(t, PERTURBED_TSS, out.exit_case.value, fx, gn, out.hamiltonians)
            monitor.check("budget.gradient", ctr.gradient_queries <= 2 * (t + T),
                          f"{ctr.gradient_queries} gradient queries at t' = {t + T}")
            monitor.check("budget.function", ctr.function_queries <= 4 * (t + T),
                          f"{ctr.function_queries} function queries at t' = {t + T}")
            if f_here - out.f_value < p.E_thresh / 2:
                break
            x_new, f_new = out.point, out.f_value
            inc = T
        monitor.check("outer_monotone", f_new <= fx + REL_TOL * max(1.0, abs(fx)),
                      f"f increased from {fx!r} to {f_new!r}", t=t)
        x, fx = x_new, f_new
        t += inc
        monitor.check("budget.gradient", ctr.gradient_queries <= 2 * (t + T),
                      f"{ctr.gradient_queries} gradient queries at t' = {t + T}")
        monitor.check("budget.function", ctr.function_queries <= 4 * (t + T),
                      f"{ctr.function_queries} function queries at t' = {t + T}")
        if enforce_budget and t + T > T2:
            raise BudgetExceeded(f"t + T = {t + T} exceeds T2 = {T2:.6g}")
    eig = lambda_min_origin(prob, x, tol=certificate_tol, rng=rng, ctr=ctr)
    threshold = -math.sqrt(p.rho_hat * p.eps)
    cert = {"grad_norm": gn, "lambda_min": eig.value, "lambda_residual": eig.residual,
            "lanczos_iterations": eig.iterations, "lanczos_converged": eig.converged,
            "threshold": threshold, "second_order_ok": bool(eig.value >= threshold)}
    budget = {"T2": T2, "t": t, "t_plus_T": t + T, "gradient_queries": ctr.gradient_queries,
              "function_queries": ctr.function_queries,
              "gradient_budget": 2 * T2, "function_budget": 4 * T2}
    return RunTrace(rec.records, x, fx, gn, t, ctr.copy(), p, "likely_socp",
                    certificate=cert, budget=budget, invariants=monitor.summary(),
                    guarantee_shortfalls=dict(rec.shortfalls),
                    tss_iterations=rec.tss_iterations, tss_runs=rec.tss_runs)


def guess_pairs(p_max):
    """Diagonal enumeration (p, m, n) with m + n = p."""
    for p in range(p_max + 1):
        for m in range(p + 1):
            yield p, m, p - m


def backtracking_tagd(prob, x0, L_ini, rho_ini, beta, eps, ctr=None, *, c=None,
                      mode="practical", p_max=40, t_cap=None, b_max=None):
    """TAGD without known constants, by diagonal search over (L, rho_hat) guesses.

    Guess (m, n) on diagonal p = m + n uses L' = L_ini beta^n and
    rho_hat' = rho_ini beta^(2m) and is truncated at T1(L', rho_hat')
    (and at ``t_cap`` if given).  Guesses for which eps is too loose are
    skipped.  Raises :class:`GiveUp` after diagonal ``p_max``.
    """
    if not (L_ini > 0 and rho_ini > 0):
        raise ValueError("L_ini and rho_ini must be positive")
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    ctr = QueryCounters() if ctr is None else ctr
    attempts = []
    for p, m, n in guess_pairs(p_max):
        Lg = L_ini * beta**n
        rg = rho_ini * beta ** (2 * m)
        bm = 1e6 * math.sqrt(eps / rg) if b_max is None else b_max
        b = ball_radius(prob.manifold.curvature, bm)
        entry = {"p": p, "m": m, "n": n, "L": Lg, "rho_hat": rg}
        try:
            params = params_from_pullback_constants(2 * Lg, rg, b, eps, c=c, mode=mode)
        except AssumptionViolation as err:
            entry.update(status="skipped", reason=str(err), queries=0)
            attempts.append(entry)
            continue
        before = ctr.copy()
        f0 = float(prob.cost(np.asarray(x0, dtype=float)))
        limit = params.T1(f0 - prob.f_low)
        if t_cap is not None:
            limit = min(limit, t_cap)
        try:
            run = tagd(prob, params, x0, ctr, strict=False, enforce_budget=False,
                       t_limit=limit)
        except InvariantBreach as err:
            entry.update(status="breach", reason=str(err), queries=(ctr - before).total)
            attempts.append(entry)
            continue
        entry.update(status=run.status, t=run.t, grad_norm=run.result_grad_norm,
                     queries=(ctr - before).total)
        attempts.append(entry)
        if run.status == "converged" and run.result_grad_norm <= eps:
            run.attempts = attempts
            run.counters = ctr.copy()
            run.budget["diagonal"] = p
            return run
    raise GiveUp(f"no guess up to diagonal {p_max} produced an eps-critical point", attempts)


def rgd(prob, x0, eps, step, max_iters, ctr=None, *, strict=True, timing=False):
    """Riemannian gradient descent with a constant step.

    With ``step == 1/L`` each step is checked to decrease f by at least
    |grad f|^2 / (2L).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    M = prob.manifold
    x = np.array(x0, dtype=float)
    M.check_point(x)
    ctr = QueryCounters() if ctr is None else ctr
    monitor = InvariantMonitor(strict=strict)
    rec = _Recorder(prob, None, ctr, monitor, timing)
    L = prob.lipschitz_L
    check = L is not None and abs(step * L - 1.0) < 1e-12
    fx = float(prob.cost(x))
    status = "max_iters"
    k = 0
    while True:
        g = pullback_grad(prob, x, M.zero(x), ctr)
        gn = M.norm(x, g)
        if gn <= eps:
            status = "converged"
            break
        if k >= max_iters:
            break
        x_new = M.exp(x, -step * g)
        ctr.retraction_calls += 1
        f_new = float(prob.cost(x_new))
        if check:
            monitor.check("rgd_decrease", fx - f_new >= gn**2 / (2 * L) - REL_TOL * max(1.0, abs(fx)),
                          f"step {k} decreased f by {fx - f_new:.3e} < |g|^2/2L = {gn**2 / (2 * L):.3e}")
        rec.add(k, GRAD_STEP, None, fx, gn)
        x, fx = x_new, f_new
        k += 1
    return RunTrace(rec.records, x, fx, gn, k, ctr.copy(), None, status,
                    certificate={"grad_norm": gn}, invariants=monitor.summary())
