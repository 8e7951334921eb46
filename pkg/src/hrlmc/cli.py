"""Command-line interface.

Subcommands: sample, distance, check, bound, experiment, sweep.  All
randomness flows from --seed / config seeds; re-running any command with the
same arguments writes byte-identical output.  Exit codes: 0 success, 2
assumption-gate failure, 3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, metrics
from .entropy import parse_entropy
from .errors import (
    ConvergenceFailure,
    Divergent,
    EpsOutOfRange,
    HrlmcError,
    InadmissibleRegime,
    InadmissibleStepSize,
    NumericalBreakdown,
    StepOutOfWindow,
)
from .experiments import ExperimentConfig, run_convergence_experiment, run_dimension_sweep
from .sampler import constant_schedule, parse_schedule, run_parallel_chains
from .target import parse_target

_GATE_ERRORS = (InadmissibleStepSize, InadmissibleRegime, StepOutOfWindow, EpsOutOfRange)
_BREAKDOWN_ERRORS = (NumericalBreakdown, ConvergenceFailure, Divergent)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_text(path, text):
    if path in (None, "", "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _cmd_sample(args) -> int:
    target = parse_target(args.target)
    entropy = parse_entropy(args.entropy, dim=target.dim)
    if (args.h is None) == (args.schedule is None):
        raise SystemExit("sample: give exactly one of --h or --schedule")
    schedule = constant_schedule(args.h) if args.h is not None else parse_schedule(args.schedule)
    x0 = (
        np.asarray([float(tok) for tok in args.x0.split(",")])
        if args.x0
        else entropy.interior_point()
    )
    if x0.size == 1 and entropy.dim > 1:
        x0 = np.full(entropy.dim, float(x0[0]))
    trajectories = run_parallel_chains(
        entropy, target, schedule, x0, args.steps, args.seed, args.chains,
        record_every=args.thin, burn_in=args.burn_in, override_gate=args.override_gate,
    )
    p = entropy.dim
    header = "chain,step,h," + ",".join(f"x_{j + 1}" for j in range(p))
    lines = [header]
    for tr in trajectories:
        for i, k in enumerate(tr.steps):
            coords = ",".join(_fmt(v) for v in tr.points[i])
            lines.append(f"{tr.chain_index},{int(k)},{_fmt(tr.step_sizes[i])},{coords}")
    _write_text(args.out, "\n".join(lines) + "\n")
    rejections = sum(tr.rejections for tr in trajectories)
    print(f"sampled {args.chains} chain(s) x {args.steps} steps, {rejections} rejections",
          file=sys.stderr)
    return 0


def _load_cloud(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return data


def _cmd_distance(args) -> int:
    a = _load_cloud(args.a)
    b = _load_cloud(args.b)
    entropy = parse_entropy(args.entropy, dim=a.shape[1])
    est = metrics.w2phi(entropy, a, b, method=args.method, seed=args.seed)
    payload = {
        "value": est.value,
        "method": est.method,
        "n_points": est.n_points,
        "aux": est.aux,
    }
    _write_text(args.out, _json_text(payload))
    if args.out not in (None, "", "-"):
        print(_fmt(est.value))
    return 0


def _cmd_check(args) -> int:
    target = parse_target(args.target)
    entropy = parse_entropy(args.entropy, dim=target.dim)
    report = analysis.estimate_constants(
        entropy, target, n_pairs=args.pairs, seed=args.seed, r_method=args.r_method
    )
    _write_text(args.out, _json_text(report.to_dict()))
    status = "admissible" if report.admissible else "NOT admissible"
    print(
        f"{entropy.name} / {target.name}: kappa_tilde={_fmt(report.kappa_tilde)} "
        f"({status}); warnings: {len(report.warnings)}",
        file=sys.stderr,
    )
    for w in report.warnings:
        print(f"  warning: {w}", file=sys.stderr)
    return 0


def _cmd_bound(args) -> int:
    with open(args.report) as fh:
        report = analysis.AssumptionReport.from_dict(json.load(fh))
    bound = analysis.bound_report(report, h=args.h, p=args.p, w0=args.w0)
    payload = bound.to_dict()
    if args.eps is not None:
        complexity = analysis.iteration_complexity(report, p=args.p, eps=args.eps)
        payload["k_eps"] = complexity.k_eps
        payload["k_eps_value"] = complexity.value
        payload["k_eps_formula"] = complexity.formula
        payload["k_eps_variants"] = complexity.variants
    _write_text(args.out, _json_text(payload))
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_convergence_experiment(config)
    out = args.out or config.out
    _write_text(out, result.to_csv())
    print(
        f"rho={_fmt(result.rho)} floor={_fmt(result.floor)} "
        f"W0_hat={_fmt(result.w0_hat)} rejections={result.total_rejections}",
        file=sys.stderr,
    )
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    dims = [int(tok) for tok in args.dims.split(",")] if args.dims else None
    result = run_dimension_sweep(config, dims)
    out = args.out or config.out
    _write_text(out, result.to_csv())
    print(f"loglog_slope={_fmt(result.slope)}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrlmc",
        description="Hessian Riemannian Langevin Monte Carlo sampling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="run HRLMC chains and write a trace CSV")
    sp.add_argument("--entropy", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--h", type=float, default=None, help="constant step size")
    sp.add_argument("--schedule", default=None, help="e.g. harmonic:a=0.3")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=0)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--x0", default=None, help="comma-separated start point")
    sp.add_argument("--out", default="-")
    sp.add_argument("--override-gate", action="store_true")
    sp.set_defaults(func=_cmd_sample)

    dp = sub.add_parser("distance", help="mirror W2 distance between two cloud CSVs")
    dp.add_argument("--entropy", required=True)
    dp.add_argument("--a", required=True)
    dp.add_argument("--b", required=True)
    dp.add_argument("--method", default="auto",
                    choices=["auto", "exact-1d", "assignment", "sliced"])
    dp.add_argument("--seed", type=int, default=0)
    dp.add_argument("--out", default="-")
    dp.set_defaults(func=_cmd_distance)

    cp = sub.add_parser("check", help="estimate assumption constants")
    cp.add_argument("--entropy", required=True)
    cp.add_argument("--target", required=True)
    cp.add_argument("--pairs", type=int, default=10_000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--r-method", default="auto",
                    choices=["auto", "declared", "quadrature", "monte-carlo"])
    cp.add_argument("--out", default="-")
    cp.set_defaults(func=_cmd_check)

    bp = sub.add_parser("bound", help="contraction bound from a saved report")
    bp.add_argument("--report", required=True)
    bp.add_argument("--h", type=float, required=True)
    bp.add_argument("--p", type=int, required=True)
    bp.add_argument("--w0", type=float, default=None)
    bp.add_argument("--eps", type=float, default=None,
                    help="also evaluate the iteration-complexity formulas")
    bp.add_argument("--out", default="-")
    bp.set_defaults(func=_cmd_bound)

    ep = sub.add_parser("experiment", help="distance-vs-iteration trace from a config")
    ep.add_argument("--config", required=True)
    ep.add_argument("--out", default=None)
    ep.set_defaults(func=_cmd_experiment)

    wp = sub.add_parser("sweep", help="plateau-vs-dimension sweep from a config")
    wp.add_argument("--config", required=True)
    wp.add_argument("--dims", default=None, help="comma-separated dimensions")
    wp.add_argument("--out", default=None)
    wp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _GATE_ERRORS as err:
        print(f"assumption gate: {err}", file=sys.stderr)
        return 2
    except _BREAKDOWN_ERRORS as err:
        print(f"numerical breakdown: {err}", file=sys.stderr)
        return 3
    except HrlmcError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
