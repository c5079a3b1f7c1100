"""Command line: ``tangent-accel run`` and ``tangent-accel verify``."""
import argparse
import json
import sys

from .exceptions import ConfigError
from .harness import ALGOS, EXIT_CONFIG, SUITES, RunConfig, run_experiment, verify_suite
from .problems import PROBLEMS


def _problem_params(args):
    params = {}
    if args.n is not None:
        params["d" if args.problem == "karcher_spd" else "n"] = args.n
    if args.spectrum is not None:
        params["spectrum"] = args.spectrum
    if args.region_radius is not None:
        params["region_radius"] = args.region_radius
    if args.problem_seed is not None:
        params["seed"] = args.problem_seed
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    return params


def build_parser():
    ap = argparse.ArgumentParser(prog="tangent-accel",
                                 description="Accelerated first- and second-order methods on manifolds.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one optimization experiment")
    run.add_argument("--problem", default="rayleigh_sphere", choices=PROBLEMS)
    run.add_argument("--algo", default="tagd", choices=ALGOS)
    run.add_argument("--eps", type=float, default=1e-3)
    run.add_argument("--mode", default="practical", choices=("theory", "practical"))
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--c", type=float, default=None, help="override the universal constant")
    run.add_argument("--delta", type=float, default=0.05, help="failure probability (ptagd)")
    run.add_argument("--deltaf", type=float, default=None,
                     help="upper bound on f(x0) - f_low (ptagd); defaults to the exact gap")
    run.add_argument("--out", default=None, help="output directory (default $TANGENT_ACCEL_OUT/run)")
    run.add_argument("--n", type=int, default=None, help="problem dimension (matrix size for karcher_spd)")
    run.add_argument("--spectrum", default=None, help="e.g. linspace:0:1, geomspace:1e-3:1 or 1,2,3")
    run.add_argument("--region-radius", type=float, default=None,
                     help="radius of the region carrying the constants (distsq, karcher)")
    run.add_argument("--problem-seed", type=int, default=None, help="seed of the problem instance")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                     help="extra problem parameter, value parsed as JSON when possible")
    run.add_argument("--start", default="random", choices=("random", "saddle", "near_min"))
    run.add_argument("--L", type=float, default=None, help="gradient Lipschitz constant")
    run.add_argument("--rho", type=float, default=None, help="Hessian Lipschitz constant")
    run.add_argument("--max-iters", type=int, default=10**6, help="iteration cap for rgd")
    run.add_argument("--timing", action="store_true", help="record wall times (breaks byte stability)")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True, choices=SUITES)
    ver.add_argument("--trials", type=int, default=1000)
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--out", default=None, help="output directory (default $TANGENT_ACCEL_OUT/verify-<suite>)")
    return ap


def _report(line):
    print(line, file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            params = _problem_params(args)
        except ConfigError as err:
            _report(f"error: {err}")
            return EXIT_CONFIG
        cfg = RunConfig(problem=args.problem, problem_params=params, algo=args.algo,
                        eps=args.eps, mode=args.mode, c=args.c, seed=args.seed,
                        delta=args.delta, Delta_f=args.deltaf, start=args.start, L=args.L,
                        rho=args.rho, out=args.out, timing=args.timing, max_iters=args.max_iters)
        code, summary = run_experiment(cfg)
        if summary["error"]:
            _report(f"error: {summary['error']}")
        else:
            print(f"{cfg.algo} on {cfg.problem}: status={summary['status']} t={summary['t']} "
                  f"f={summary['result_f']:.10g} grad_norm={summary['result_grad_norm']:.3e} "
                  f"gq={summary['counters']['gradient_queries']} "
                  f"fq={summary['counters']['function_queries']} exit={code}")
        return code
    try:
        code, report = verify_suite(args.suite, args.trials, args.seed, args.out)
    except ConfigError as err:
        _report(f"error: {err}")
        return EXIT_CONFIG
    for c in report["checks"]:
        state = "PASS" if c["passed"] else "FAIL"
        print(f"{state} {c['check_name']}: trials={c['trials']} violations={c['violations']} "
              f"max_ratio={c['max_ratio']:.6g}")
    print(f"suite {args.suite}: {report['total_violations']} violation(s), exit={code}")
    if report["first_witness"]:
        _report("first witness: " + json.dumps(report["first_witness"], sort_keys=True, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
