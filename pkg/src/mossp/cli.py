"""Command-line interface.

Subcommands:

* ``solve``           run one algorithm on one dataset, write a metrics file
* ``benchmark``       repeat a solve over seeds, write per-seed metrics,
                      a summary row, and convergence figures
* ``gen-quadeq``      generate a quadratic-equality constraint instance file
* ``validate-config`` check every schedule inequality and print each one
* ``parse-check``     validate a LIBSVM dataset file
* ``report``          render figures from existing metrics files

Dataset arguments take either a LIBSVM file path or a generator spec
``synth:N=2000,n=68,seed=0[,density=0.25,noise=0.5]``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import baselines, dataio, metrics, problems, solver
from .errors import DivergedError, ParseError, ScheduleValidationError

ALGOS = ("mossp_p", "mossp_r", "spdc_p", "spdc_r", "salm_p", "salm_r")

# Hyperparameter defaults for the benchmark problems: K and the batch-size
# rule (32, or 16 below 1000 samples) follow the reference experiment setup,
# as do the manual-preset momentum values 0.905 (polyak) / 0.9 (recursive).
DEFAULT_K = 25000
DEFAULT_LAMBDA = 0.01
MANUAL_ALPHA = {"p": 0.905, "r": 0.9}
# Baseline tuning grids exposed for sweeps; defaults sit at the grid midpoints.
SPDC_RHO_GRID = (1.0, 5.0, 10.0, 20.0)
SALM_RHO_GRID = (0.01, 0.1, 0.5, 1.0)
INNER_STEP_GRID = (0.001, 0.01, 0.05, 0.1)
PROX_WEIGHT_GRID = (0.05, 0.2, 0.5, 1.0)
LAMBDA_GRID = (0.005, 0.05, 0.1)


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--algo", choices=ALGOS, default="mossp_p")
    p.add_argument("--dataset", help="LIBSVM file path or synth:... generator spec")
    p.add_argument("--quadeq", help="quadratic-constraint instance file (switches constraint family)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help=f"DC regularization weight (default {DEFAULT_LAMBDA}; "
                        f"benchmark sweep grid {LAMBDA_GRID})")
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--batch", type=int, default=None,
                   help="minibatch size (default 32, or 16 when N < 1000)")
    p.add_argument("--b0", type=int, default=1)
    p.add_argument("--preset", choices=solver.PRESETS, default=None,
                   help="schedule preset (default: thm31 for mossp_p, thm32 for mossp_r)")
    p.add_argument("--rho0", type=float, default=None,
                   help="penalty constant (baselines: the constant rho; tuning grids "
                        f"spdc {SPDC_RHO_GRID}, salm {SALM_RHO_GRID})")
    p.add_argument("--mu0", type=float, default=None)
    p.add_argument("--alpha0", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diag-stride", type=int, default=50)
    p.add_argument("--normalize-rows", action=argparse.BooleanOptionalAction, default=None,
                   help="scale rows to unit l2 norm (default: on for quadeq runs, off otherwise)")
    p.add_argument("--feasible-init", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--inner-iters", type=int, default=5,
                   help="baseline inner iterations (reference range 5-10)")
    p.add_argument("--prox-weight", type=float, default=0.2,
                   help=f"baseline proximal coefficient (tuning grid {PROX_WEIGHT_GRID})")
    p.add_argument("--inner-step", type=float, default=0.01,
                   help=f"baseline inner step size (tuning grid {INNER_STEP_GRID})")
    p.add_argument("--dual-step", type=float, default=None,
                   help="salm dual ascent step (defaults to the penalty rho)")
    p.add_argument("--time-budget-from", metavar="METRICS",
                   help="baseline wall-clock budget taken from an existing metrics file")


def _parse_synth_spec(spec: str) -> problems.Dataset:
    kv = {}
    for part in spec.split(":", 1)[1].split(","):
        key, _, val = part.partition("=")
        if not val:
            raise ParseError(f"bad synth spec component {part!r}")
        kv[key.strip()] = val.strip()
    try:
        return problems.synthetic_logistic_dataset(
            N=int(kv["N"]), n=int(kv["n"]), seed=int(kv.get("seed", "0")),
            density=float(kv.get("density", "0.25")),
            noise=float(kv.get("noise", "0.5")),
            normalize=kv.get("normalize", "1") not in ("0", "false", "no"),
        )
    except KeyError as e:
        raise ParseError(f"synth spec needs N=..,n=.. (missing {e.args[0]})") from None


def _load_dataset(args) -> problems.Dataset:
    if not args.dataset:
        raise ParseError("--dataset is required for this subcommand")
    if args.dataset.startswith("synth:"):
        data = _parse_synth_spec(args.dataset)
    else:
        data = dataio.libsvm_parse(Path(args.dataset))
    normalize = args.normalize_rows
    if normalize is None:
        normalize = args.quadeq is not None
    return data.normalized_rows() if normalize else data


def _build_problem(args) -> problems.ProblemInstance:
    data = _load_dataset(args)
    lam = DEFAULT_LAMBDA if args.lam is None else args.lam
    batch = args.batch if args.batch is not None else (16 if data.N < 1000 else 32)
    rho0 = args.rho0 if args.rho0 is not None else 1.0
    if args.quadeq:
        inst = dataio.read_quadeq(Path(args.quadeq))
        return problems.quadeq_problem(data, inst, lam, batch, rho0=rho0)
    return problems.logistic_problem(data, lam, batch, rho0=rho0)


def _variant_letter(algo: str) -> str:
    return algo.rsplit("_", 1)[1]


def _solver_config(args, problem, seed) -> solver.SolverConfig:
    variant = args.algo
    preset = args.preset
    if preset is None:
        preset = "thm31" if variant == "mossp_p" else "thm32"
    alpha0 = args.alpha0
    if preset == "manual" and alpha0 is None:
        alpha0 = MANUAL_ALPHA[_variant_letter(variant)]
    mu0 = args.mu0
    if mu0 is None:
        # largest value the validity inequalities accept, given the constants
        rho0 = args.rho0 if args.rho0 is not None else 1.0
        L_f, l_max = problem.constants.L_f, problem.constants.l_max
        if preset == "manual":
            # constants were assembled with this rho0, so L_rho = rho0 * l_tilde
            mu0 = 0.24 / (rho0 * problem.constants.l_tilde)
        else:
            cap = 1.0 / (4.0 * rho0)
            if L_f > 0:
                cap = min(cap, 1.0 / (4.0 * L_f)) if preset in ("thm31", "cor31") \
                    else min(cap, l_max / (4.0 * np.sqrt(2.0) * L_f))
            mu0 = cap
    return solver.SolverConfig(
        variant=variant, K=args.K, preset=preset,
        rho0=args.rho0 if args.rho0 is not None else 1.0,
        mu0=mu0, alpha0=alpha0, gamma=args.gamma, beta=args.beta,
        batch=problem.oracle.batch_size, b0=args.b0, seed=seed,
        diag_stride=args.diag_stride, feasible_init=args.feasible_init,
    )


def _baseline_config(args, seed) -> baselines.BaselineConfig:
    momentum = "polyak" if _variant_letter(args.algo) == "p" else "storm"
    rho = args.rho0
    if rho is None:
        rho = 5.0 if args.algo.startswith("spdc") else 0.1
    budget = None
    if args.time_budget_from:
        recs = metrics.read_metrics(args.time_budget_from)
        if not recs:
            raise ParseError(f"{args.time_budget_from} has no records to take a budget from")
        budget = recs[-1].elapsed_s
    return baselines.BaselineConfig(
        outer_K=args.K, inner_iters=args.inner_iters, rho=rho,
        prox_weight=args.prox_weight, inner_step=args.inner_step,
        dual_step=args.dual_step, momentum=momentum, alpha=args.alpha0,
        batch=args.batch if args.batch is not None else 32,
        b0=args.b0, seed=seed, diag_stride=args.diag_stride,
        feasible_init=args.feasible_init, time_budget_s=budget,
    )


def _run_algo(args, problem, seed):
    if args.algo.startswith("mossp"):
        if args.time_budget_from:
            raise ParseError("--time-budget-from applies to baseline algorithms only")
        res = solver.run(problem, _solver_config(args, problem, seed))
        return res.records, res.final_x
    cfg = _baseline_config(args, seed)
    runner = baselines.run_spdc if args.algo.startswith("spdc") else baselines.run_salm
    res = runner(problem, cfg)
    return res.records, res.final_x


def _cmd_solve(args) -> int:
    problem = _build_problem(args)
    records, final_x = _run_algo(args, problem, args.seed)
    out = Path(args.out)
    metrics.write_metrics(records, out)
    last = records[-1]
    print(f"{args.algo}: wrote {len(records)} records to {out}")
    print(f"final objective={last.objective:.6g} violation={last.feas:.3e} "
          f"oracle_calls={last.oracle_calls}")
    if args.figures:
        from .figures import render_metrics_figures
        for p in render_metrics_figures([out], out.with_suffix("")):
            print(f"wrote {p}")
    return 0


def _cmd_benchmark(args) -> int:
    stem = Path(args.out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    lams = list(LAMBDA_GRID) if args.sweep_lambda else [args.lam]
    files, summaries = [], []
    for lam in lams:
        args.lam = lam
        problem = _build_problem(args)
        tag = f"_lam{lam:g}" if args.sweep_lambda else ""
        per_seed = []
        for i in range(args.repeats):
            records, _ = _run_algo(args, problem, args.seed + i)
            path = stem.parent / f"{stem.stem}{tag}_seed{args.seed + i}.csv"
            metrics.write_metrics(records, path)
            files.append(path)
            per_seed.append(records)
            print(f"{tag.lstrip('_') or args.algo} seed {args.seed + i}: "
                  f"objective={records[-1].objective:.6g} violation={records[-1].feas:.3e}")
        label = args.algo + (f"(lam={lam:g})" if args.sweep_lambda else "")
        summary = metrics.summarize_finals(label, per_seed)
        summaries.append(summary)
        print(f"{label}: objective {summary['obj_mean']:.6g} +/- {summary['obj_std']:.2g}, "
              f"violation {summary['viol_mean']:.3e} +/- {summary['viol_std']:.2g}")
    summary_path = stem.parent / f"{stem.stem}_summary.csv"
    metrics.write_summary(summaries, summary_path)
    print(f"wrote {summary_path}")
    if args.figures:
        from .figures import render_metrics_figures
        for p in render_metrics_figures(files, stem.parent / stem.stem):
            print(f"wrote {p}")
    return 0


def _cmd_gen_quadeq(args) -> int:
    rng = np.random.default_rng(args.seed)
    inst = problems.gen_quadeq(args.n, args.M, rng)
    dataio.write_quadeq(inst, args.out, seed=args.seed)
    resid = float(np.max(np.abs(problems.quadeq_constraints(inst).eval(inst.x_star))))
    print(f"wrote {args.out}: n={inst.n} M={inst.M}, planted-point residual {resid:.2e}")
    return 0


def _cmd_validate_config(args) -> int:
    if args.config:
        cfg = dataio.parse_config(Path(args.config))
        for key, val in cfg.items():
            dest = {"lambda": "lam"}.get(key, key.replace("-", "_"))
            if not hasattr(args, dest):
                raise ParseError(f"unknown config key {key!r}")
            current = getattr(args, dest)
            if isinstance(current, bool):
                setattr(args, dest, val.lower() in ("1", "true", "yes", "on"))
            elif dest in ("K", "batch", "b0", "seed", "diag_stride", "inner_iters"):
                setattr(args, dest, int(val))
            elif dest in ("algo", "preset", "dataset", "quadeq"):
                setattr(args, dest, val)
            else:
                setattr(args, dest, float(val))
    if not args.algo.startswith("mossp"):
        print(f"{args.algo}: baseline configs have no schedule inequalities to check")
        return 0
    if args.dataset:
        problem = _build_problem(args)
        constants = problem.constants
    else:
        from .penalty import PenaltyConstants
        constants = PenaltyConstants(
            G=args.G, C=args.C, L_f=args.L_f, L_c=args.L_c,
            rho0=args.rho0 if args.rho0 is not None else 1.0)

    shim = argparse.Namespace(constants=constants,
                              oracle=argparse.Namespace(batch_size=args.batch or 32))
    cfg = _solver_config(args, shim, args.seed)
    checked: list = []
    try:
        sched = solver.make_schedule(cfg, constants, collect=checked)
        failed = False
    except ScheduleValidationError:
        sched = None
        failed = True
    for inequality, ok, detail in checked:
        status = "ok" if ok else "VIOLATED"
        suffix = f"  [{detail}]" if detail and not ok else ""
        print(f"{status:>8}  {inequality}{suffix}")
    if failed:
        first = next(item for item in checked if not item[1])
        print(f"invalid configuration: {first[0]}", file=sys.stderr)
        return 1
    print(f"valid: rho={sched.rho:.6g} mu={sched.mu:.6g} alpha={sched.alpha:.6g} "
          f"L_rho={sched.L_rho:.6g} b0={sched.b0_effective}")
    return 0


def _cmd_parse_check(args) -> int:
    data = dataio.libsvm_parse(Path(args.dataset))
    pos = int(np.sum(data.y > 0))
    print(f"{args.dataset}: N={data.N} n={data.n} positives={pos} negatives={data.N - pos}")
    return 0


def _cmd_report(args) -> int:
    from .figures import render_metrics_figures
    for p in render_metrics_figures(args.metrics, args.out):
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="mossp", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one algorithm and write metrics")
    _add_common_flags(p)
    p.add_argument("--out", default="metrics.csv")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("benchmark", help="repeat runs over seeds; write metrics, summary, figures")
    _add_common_flags(p)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", default="bench.csv", help="output stem for per-seed/summary files")
    p.add_argument("--sweep-lambda", action="store_true",
                   help=f"run every lambda in the tuning grid {LAMBDA_GRID}")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("gen-quadeq", help="generate a quadratic-constraint instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--M", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_quadeq)

    p = sub.add_parser("validate-config", help="check schedule inequalities, printing each")
    _add_common_flags(p)
    p.add_argument("--config", help="key = value config file merged over the flags")
    p.add_argument("--L-f", dest="L_f", type=float, default=0.25)
    p.add_argument("--L-c", dest="L_c", type=float, default=2.0)
    p.add_argument("--G", type=float, default=4.0)
    p.add_argument("--C", type=float, default=3.0)
    p.set_defaults(func=_cmd_validate_config)

    p = sub.add_parser("parse-check", help="validate a LIBSVM dataset file")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=_cmd_parse_check)

    p = sub.add_parser("report", help="render figures from metrics files")
    p.add_argument("metrics", nargs="+", help="metrics files to plot")
    p.add_argument("--out", default="report", help="figure filename prefix")
    p.set_defaults(func=_cmd_report)
    return top


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ScheduleValidationError, DivergedError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
