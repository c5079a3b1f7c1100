"""Experiment runner and verification suites behind the command line.

A run writes two files into its output directory: ``trace.csv`` with one
row per outer step and ``summary.json``.  A verification suite writes
``report.json``.  Both are deterministic for a given configuration and
seed (wall times are zero unless timing is requested).
"""
import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .accel import (
    InvariantMonitor,
    backtracking_tagd,
    check_param_relations,
    derive_params,
    ptagd,
    rgd,
    tagd,
    tss,
)
from .exceptions import AssumptionViolation, BudgetExceeded, ConfigError, GiveUp, InvariantBreach
from .manifolds import SPD, Euclidean, Hyperbolic, Sphere
from .problems import build_problem, estimate_lipschitz, initial_point
from .verify import (
    check_dexp_transport,
    check_initial_acceleration,
    check_jacobi_bounds,
    check_pullback_lipschitz,
    check_singular_values,
    check_spd_curvature,
    hyperbolic_hessian_growth,
)

ALGOS = ("tagd", "ptagd", "rgd", "backtracking")
SUITES = ("geometry", "params", "dynamics")
TRACE_HEADER = ("t", "case", "exit", "f", "grad_norm", "E_min", "E_max", "fq", "gq", "rq", "wall_ms")
OUT_ENV = "TANGENT_ACCEL_OUT"

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_ASSUMPTION = 2
EXIT_BUDGET = 3
EXIT_INVARIANT = 4
EXIT_CONFIG = 5
EXIT_GIVE_UP = 6


def default_out_dir(sub):
    return os.path.join(os.environ.get(OUT_ENV, "runs"), sub)


@dataclass
class RunConfig:
    problem: str = "rayleigh_sphere"
    problem_params: dict = field(default_factory=dict)
    algo: str = "tagd"
    eps: float = 1e-3
    mode: str = "practical"
    c: Optional[float] = None
    seed: int = 0
    delta: float = 0.05
    Delta_f: Optional[float] = None
    start: str = "random"
    L: Optional[float] = None
    rho: Optional[float] = None
    out: Optional[str] = None
    timing: bool = False
    max_iters: int = 10**6
    beta: float = 2.0
    estimate_radius: float = 1.0
    estimate_trials: int = 200

    def validate(self):
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algo {self.algo!r}; choose from {', '.join(ALGOS)}")
        if self.mode not in ("theory", "practical"):
            raise ConfigError(f"mode must be theory or practical, got {self.mode!r}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if (self.L is None) != (self.rho is None):
            raise ConfigError("--L and --rho must be given together")


def _num(v):
    """Shortest round-trip text for a float."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_csv(trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace.records:
        w.writerow([r.t, r.case, r.exit_case or "", _num(r.f_value), _num(r.grad_norm),
                    _num(r.E_min), _num(r.E_max), r.fq, r.gq, r.rq, _num(r.wall_ms)])
    return buf.getvalue()


def _clean(v):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _constants(prob, cfg, rng):
    """(L, rho, source) following the mode gate."""
    if cfg.L is not None:
        if not (cfg.L > 0 and cfg.rho > 0):
            raise ConfigError("--L and --rho must be positive")
        return float(cfg.L), float(cfg.rho), "user"
    if prob.has_constants:
        return prob.lipschitz_L, prob.lipschitz_rho, "problem"
    if cfg.mode == "theory":
        raise ConfigError(f"theory mode needs known constants for {prob.name}; pass --L and "
                          "--rho or a region radius")
    L, rho = estimate_lipschitz(prob, cfg.estimate_radius, cfg.estimate_trials, rng)
    if not (L > 0 and rho > 0):
        raise ConfigError(f"estimated constants are degenerate (L = {L}, rho = {rho})")
    return L, rho, "estimated"


def _execute(cfg, prob, summary):
    rng = np.random.default_rng(cfg.seed)
    M = prob.manifold
    L, rho, source = _constants(prob, cfg, rng)
    summary["constants"] = {"L": L, "rho": rho, "source": source}
    x0 = initial_point(prob, cfg.start, rng)
    f0 = float(prob.cost(x0))
    summary["start_f"] = f0
    if cfg.algo == "rgd":
        return rgd(prob, x0, cfg.eps, 1.0 / L, cfg.max_iters, timing=cfg.timing,
                   strict=cfg.mode == "theory")
    if cfg.algo == "backtracking":
        rho_hat = rho + L * math.sqrt(M.curvature.k)
        return backtracking_tagd(prob, x0, L / 8.0, rho_hat / 16.0, cfg.beta, cfg.eps,
                                 c=cfg.c, mode=cfg.mode)
    if cfg.algo == "tagd":
        params = derive_params(L, rho, M.curvature, cfg.eps, c=cfg.c, mode=cfg.mode)
        summary["params"] = params.as_dict()
        return tagd(prob, params, x0, timing=cfg.timing)
    rho_hat = rho + L * math.sqrt(M.curvature.k)
    need = max(f0 - prob.f_low, math.sqrt(cfg.eps**3 / rho_hat))
    Delta_f = need if cfg.Delta_f is None else cfg.Delta_f
    if not Delta_f >= need:
        raise ConfigError(f"Delta_f = {Delta_f} must be at least f(x0) - f_low = {need}")
    params = derive_params(L, rho, M.curvature, cfg.eps, c=cfg.c, mode=cfg.mode,
                           d=M.dim, delta=cfg.delta, Delta_f=Delta_f)
    summary["params"] = params.as_dict()
    summary["Delta_f"] = Delta_f
    return ptagd(prob, params, x0, cfg.delta, Delta_f, rng, timing=cfg.timing)


def run_experiment(cfg):
    """Run one configuration; returns (exit_code, summary dict).

    Files are written to ``cfg.out`` (default ``$TANGENT_ACCEL_OUT/run``).
    """
    out = cfg.out or default_out_dir("run")
    summary = {"config": asdict(cfg), "status": None, "exit_code": None, "error": None}
    trace = None
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        cfg.validate()
        prob = build_problem(cfg.problem, **cfg.problem_params)
        summary["problem"] = {"name": prob.name, "manifold": repr(prob.manifold),
                              "dim": prob.manifold.dim, "f_low": prob.f_low}
        trace = _execute(cfg, prob, summary)
    except ConfigError as err:
        code, summary["error"] = EXIT_CONFIG, f"ConfigError: {err}"
    except AssumptionViolation as err:
        code, summary["error"] = EXIT_ASSUMPTION, f"AssumptionViolation: {err}"
    except BudgetExceeded as err:
        code, summary["error"] = EXIT_BUDGET, f"BudgetExceeded: {err}"
    except InvariantBreach as err:
        code, summary["error"] = EXIT_INVARIANT, f"InvariantBreach: {err}"
        summary["witness"] = err.witness
    except GiveUp as err:
        code, summary["error"] = EXIT_GIVE_UP, f"GiveUp: {err}"
        summary["attempts"] = err.attempts
    if trace is not None:
        summary.update(status=trace.status, t=trace.t, result_f=trace.result_f,
                       result_grad_norm=trace.result_grad_norm,
                       counters=trace.counters.as_dict(), budget=trace.budget,
                       certificate=trace.certificate, invariants=trace.invariants,
                       guarantee_shortfalls=trace.guarantee_shortfalls,
                       tss_iterations=trace.tss_iterations, tss_runs=trace.tss_runs,
                       outer_steps=len(trace.records))
        if trace.attempts:
            summary["attempts"] = trace.attempts
        if trace.params is not None:
            summary["params"] = trace.params.as_dict()
        if trace.invariants.get("total_violations", 0) > 0:
            code = EXIT_INVARIANT
        elif not trace.converged:
            code = EXIT_NOT_CONVERGED
    summary["exit_code"] = code
    if cfg.timing:
        summary["wall_s"] = time.perf_counter() - t0
    os.makedirs(out, exist_ok=True)
    if trace is not None:
        with open(os.path.join(out, "trace.csv"), "w", newline="") as fh:
            fh.write(trace_csv(trace))
    with open(os.path.join(out, "summary.json"), "w") as fh:
        fh.write(dump_json(summary))
    return code, summary


# verification suites

def _zoo():
    return [Sphere(3), Sphere(10), Sphere(50), Hyperbolic(3), Hyperbolic(10), Hyperbolic(50),
            SPD(2), SPD(3), Euclidean(4)]


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def geometry_suite(trials, seed):
    zoo = _zoo()
    rngs = iter(_streams(seed, 4 * len(zoo) + 8))
    reports = []
    for M in zoo:
        reports.append(check_dexp_transport(M, trials, rng=next(rngs)))
        reports.append(check_singular_values(M, trials, rng=next(rngs)))
        reports.append(check_initial_acceleration(M, trials, rng=next(rngs)))
        if isinstance(M, (Sphere, Hyperbolic)):
            reports.append(check_jacobi_bounds(M, trials, rng=next(rngs)))
    reports.append(check_spd_curvature(10 * trials, rng=next(rngs)))
    base = max(1, trials // 10)
    for name, kw in (("rayleigh_sphere", {"n": 50}), ("quadratic_euclidean", {"n": 5}),
                     ("distsq_hyperbolic", {"n": 5, "region_radius": 2.0}),
                     ("karcher_spd", {"d": 3, "region_radius": 2.0})):
        reps = check_pullback_lipschitz(build_problem(name, **kw), base, rng=next(rngs))
        reports.extend(reps.values())
    reports.append(hyperbolic_hessian_growth(rng=next(rngs)))
    return reports, {"manifolds": [repr(M) for M in zoo]}


def params_suite(trials, seed):
    """Sweep (eps, c, chi_floor) through the parameter relations.

    The identity item is required everywhere; all eight items are
    required for c at least the theory value.
    """
    from .accel.params import THEORY_C
    from .geometry import CurvatureProfile
    curv = CurvatureProfile(1.0, 1.0, 1.0, 0.0)
    rows = []
    violations = 0
    witness = None
    for eps in (1e-2, 3e-3, 1e-3, 1e-4, 1e-6):
        for c in (5.0, 50.0, THEORY_C, 2 * THEORY_C):
            for chi in (1.0, 2.0, 5.0, 10.0, 40.0):
                p = derive_params(2.0, 4.0, curv, eps, c=c, chi_floor=chi,
                                  mode="theory" if c >= THEORY_C else "practical")
                rel = check_param_relations(p)
                need = rel if c >= THEORY_C else [r for r in rel if r.item == 6]
                bad = [r for r in need if not r.passed]
                violations += len(bad)
                if bad and witness is None:
                    witness = {"eps": eps, "c": c, "chi_floor": chi,
                               "failed": [r._asdict() for r in bad]}
                rows.append({"eps": eps, "c": c, "chi_floor": chi, "T": p.T_inner,
                             "passed": [r.item for r in rel if r.passed],
                             "identity_residual": next(r.residual for r in rel if r.item == 6)})
    rep = {"check_name": "param_relations", "trials": len(rows), "violations": violations,
           "passed": violations == 0, "witness": witness or {}, "max_ratio": 0.0, "extra": {}}
    return [rep], {"grid": rows}


DYNAMICS_PROBLEMS = (
    ("rayleigh_sphere", {"n": 50}, ("random", "saddle")),
    ("rayleigh_sphere", {"n": 20, "spectrum": "geomspace:1e-3:1", "rotate": True}, ("random",)),
    ("quadratic_euclidean", {"n": 10}, ("random",)),
    ("distsq_hyperbolic", {"n": 10, "region_radius": 4.0}, ("random",)),
    ("karcher_spd", {"d": 3, "region_radius": 4.0}, ("random",)),
)


def dynamics_suite(trials, seed, min_iterations=10**4):
    """TSS, TAGD and PTAGD on all problems with strict monitors.

    Runs continue over fresh seeds until at least ``min_iterations``
    inner iterations have been checked.
    """
    monitor = InvariantMonitor(strict=False)
    runs = []
    total = 0
    rngs = _streams(seed, 1)
    master = rngs[0]
    rounds = 0
    while total < min_iterations or rounds < max(1, trials // 100):
        for name, kw, starts in DYNAMICS_PROBLEMS:
            prob = build_problem(name, **kw)
            M = prob.manifold
            for start in starts:
                run_seed = int(master.integers(2**31))
                rng = np.random.default_rng(run_seed)
                x0 = initial_point(prob, start, rng)
                L, rho = prob.lipschitz_L, prob.lipschitz_rho
                params = derive_params(L, rho, M.curvature, 1e-3, mode="practical")
                if start == "saddle":
                    f0 = float(prob.cost(x0))
                    pp = derive_params(L, rho, M.curvature, 1e-3, mode="practical", d=M.dim,
                                       delta=0.05, Delta_f=max(f0 - prob.f_low, 1e-3))
                    tr = ptagd(prob, pp, x0, 0.05, max(f0 - prob.f_low, 1e-3), rng,
                               monitor=monitor)
                    algo = "ptagd"
                else:
                    tr = tagd(prob, params, x0, monitor=monitor)
                    algo = "tagd"
                # a standalone TSS from the start point exercises the full inner loop
                out = tss(prob, params, x0, None, monitor=monitor)
                iters = tr.tss_iterations + out.iterations
                total += iters
                runs.append({"problem": name, "params": kw, "start": start, "algo": algo,
                             "seed": run_seed, "status": tr.status, "t": tr.t,
                             "grad_norm": tr.result_grad_norm, "tss_iterations": iters})
        rounds += 1
    theory = build_problem("rayleigh_sphere", n=50)
    x0 = initial_point(theory, "random", np.random.default_rng(seed))
    pt = derive_params(theory.lipschitz_L, theory.lipschitz_rho, theory.manifold.curvature,
                       1e-3, mode="theory")
    tr = tagd(theory, pt, x0, monitor=monitor)
    total += tr.tss_iterations
    runs.append({"problem": "rayleigh_sphere", "params": {"n": 50}, "start": "random",
                 "algo": "tagd-theory", "seed": seed, "status": tr.status, "t": tr.t,
                 "grad_norm": tr.result_grad_norm, "tss_iterations": tr.tss_iterations})
    summ = monitor.summary()
    witness = monitor.witnesses[0] if monitor.witnesses else {}
    ham = summ["checks"].get("hamiltonian", 0)
    rep = {"check_name": "inner_loop_invariants", "trials": total,
           "violations": summ["total_violations"],
           "passed": summ["total_violations"] == 0 and total >= min_iterations,
           "witness": witness, "max_ratio": 0.0,
           "extra": {"hamiltonian_checks": ham, "tss_iterations": total}}
    return [rep], {"runs": runs, "monitor": summ}


def verify_suite(suite, trials=1000, seed=1, out=None):
    """Run a verification suite; returns (exit_code, report dict)."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    fn = {"geometry": geometry_suite, "params": params_suite, "dynamics": dynamics_suite}[suite]
    reports, detail = fn(trials, seed)
    reports = [r if isinstance(r, dict) else r.as_dict() for r in reports]
    total = sum(r["violations"] for r in reports)
    failed = [r for r in reports if not r["passed"]]
    report = {"suite": suite, "trials": trials, "seed": seed, "checks": reports,
              "total_violations": total, "passed": not failed,
              "first_witness": ({"check_name": failed[0]["check_name"], **failed[0]["witness"]}
                                if failed else None),
              "detail": detail}
    out = out or default_out_dir(f"verify-{suite}")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(dump_json(report))
    return (EXIT_OK if not failed else EXIT_INVARIANT), report
