"""Command-line interface.

Verbs:
  gen       write a batch of instance JSON files
  solve     solve one relaxation of one instance file
  bench     run a table experiment from a JSON config file
  verify    run one of the built-in certification routines
  example   replay a hard-coded demonstration problem
  export    print a conic program in CBF or sparse SDPA format

Exit status is nonzero iff an acceptance-tagged check fails (verify,
example) or the solver reports failure (solve).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench as bench_mod
from .formats import export_cbf, export_sdpa
from .generators import DEFAULT_MASTER_SEED, generate_batch
from .instances import lift, load_instance, save_instance
from .relaxations import build_relaxation, resolve_kind
from .solve import SolverOptions


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", default=None, help="conic solver backend (clarabel or scs)")
    p.add_argument("--solver-tol", type=float, default=None, help="relative solver tolerance")
    p.add_argument("--time-limit", type=float, default=None, help="per-solve limit in seconds")
    p.add_argument("--verbose", action="store_true", help="let the backend print its log")


def _solver_options(args) -> SolverOptions:
    opts = SolverOptions()
    if args.backend is not None:
        opts.backend = args.backend
    if args.solver_tol is not None:
        opts.rel_tol = args.solver_tol
    if args.time_limit is not None:
        opts.time_limit_s = args.time_limit
    if args.verbose:
        opts.verbose = True
    return opts


def _cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    batch = generate_batch(args.family, args.n, args.m, args.count, args.seed)
    for i, inst in enumerate(batch):
        path = out / f"{args.family}-n{args.n}-m{args.m}-i{i:04d}.json"
        save_instance(inst, path)
    print(f"wrote {len(batch)} instances to {out}")
    return 0


def _cmd_solve(args) -> int:
    from .analysis import evaluate_relaxation

    inst = load_instance(args.instance)
    kind = resolve_kind(args.relaxation, inst)
    rep = evaluate_relaxation(inst, kind, _solver_options(args))
    print(f"instance    {Path(args.instance).name} (family={inst.family}, n={inst.n}, m={inst.m})")
    print(f"relaxation  {kind.value}")
    print(f"status      {rep.status.name}")
    print(f"r_star      {rep.r_star:.12g}")
    print(f"v_feasible  {rep.v_feasible:.12g}")
    print(f"gap         {rep.relative_gap:.6g}")
    print(f"eig_ratio   {rep.eig_ratio:.6g}")
    print(f"solved      {rep.solved}")
    if rep.rlt_activity is not None:
        print(f"rlt_activity {rep.rlt_activity:.6g}")
    if rep.x is not None:
        print("x           " + " ".join(f"{v:.9g}" for v in rep.x))
    return 0 if rep.status.ok else 1


def _cmd_bench(args) -> int:
    config = bench_mod.ExperimentConfig.from_json(args.config)
    opts = _solver_options(args)
    defaults = SolverOptions()
    # CLI flags override the config's solver block only where given.
    if opts.backend != defaults.backend:
        config.solver.backend = opts.backend
    if opts.rel_tol != defaults.rel_tol:
        config.solver.rel_tol = opts.rel_tol
    if opts.time_limit_s != defaults.time_limit_s:
        config.solver.time_limit_s = opts.time_limit_s
    result = bench_mod.run_table(config)
    print(f"rows    {len(result.rows)} -> {result.csv_path}")
    print(f"summary -> {result.json_path}")
    for cell in result.summary["cells"]:
        counts = ", ".join(
            f"{name} {tot['solved']}/{cell['instances']}"
            for name, tot in cell["relaxations"].items()
        )
        print(f"  n={cell['n']} m={cell['m']}: {counts}")
    return 0


def _cmd_verify(args) -> int:
    from . import verify as v

    opts = _solver_options(args)
    if args.what == "counterexample":
        report = v.verify_counterexample(opts)
    elif args.what == "theorem":
        report = v.verify_theorem_exactness(count=args.count or 100, options=opts)
    elif args.what == "jlemma":
        report = v.check_j_lemma(trials=args.count or 1000)
    else:  # conjecture
        report = v.run_conjecture_scan(count=args.count or 100, options=opts)
    print(report.render())
    return 0 if report.acceptance_passed else 1


def _cmd_example(args) -> int:
    report = bench_mod.run_example(args.name, _solver_options(args))
    return 0 if report.acceptance_passed else 1


def _cmd_export(args) -> int:
    inst = load_instance(args.instance)
    program = build_relaxation(lift(inst), resolve_kind(args.relaxation, inst))
    text = export_cbf(program) if args.format == "cbf" else export_sdpa(program)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ballqp",
        description="Relaxations of quadratic programs over intersections of balls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instance JSON files")
    p.add_argument("--family", required=True, choices=("linear", "martinez", "maxnorm"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve one relaxation of one instance")
    p.add_argument("instance")
    p.add_argument("--relaxation", default="beta",
                   help="shor | kron | beta | beta0 (or an explicit kind name)")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run a table experiment from a config file")
    p.add_argument("config")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="run a built-in certification routine")
    p.add_argument("what", choices=("counterexample", "theorem", "jlemma", "conjecture"))
    p.add_argument("--count", type=int, default=None,
                   help="instances per dimension (theorem/conjecture) or trials (jlemma)")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("example", help="replay a demonstration problem")
    p.add_argument("name", choices=("linear_ex", "ball_ex", "counterexample"))
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("export", help="print a relaxation in CBF or SDPA format")
    p.add_argument("format", choices=("cbf", "sdpa"))
    p.add_argument("instance")
    p.add_argument("--relaxation", default="beta")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
