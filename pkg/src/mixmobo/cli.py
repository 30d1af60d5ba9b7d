"""Command-line front end: runs, baselines, the service, and report tooling.

Subcommands:
    run          full adaptive optimization on a catalog problem
    doe          space-filling study only (no enrichment)
    offline-sbo  one-shot baseline: DOE, fit surrogates, NSGA-II
    serve        start the HTTP ask-tell service
    report       recompute fronts and proximity from a run directory
    plot-data    emit per-objective-pair CSVs from a run directory

`run` also accepts --mode {bo,doe,offline-sbo} so scripted callers can
switch behavior without changing the subcommand.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import driver, moea
from .acquisition import AcquisitionConfig
from .benchmarks import BenchmarkProblem, builtin_problems
from .driver import RunConfig, RunState
from .surrogate import KernelConfig


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True, help="catalog problem name")
    p.add_argument("--doe", type=int, default=None, help="initial DOE size")
    p.add_argument("--budget", type=int, default=None, help="total evaluation budget")
    p.add_argument("--acq", choices=["ehvi", "pi", "mpi"], default="ehvi")
    p.add_argument("--reg", choices=["none", "max", "sum"], default="none")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--kernel", choices=["squared_exponential", "matern52"],
                   default="squared_exponential")
    p.add_argument("--pls", type=int, default=0, help="PLS components (0 = plain kriging)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=20, help="infill multistarts")
    p.add_argument("--pop", type=int, default=100, help="NSGA-II population")
    p.add_argument("--gens", type=int, default=200, help="NSGA-II generations")
    p.add_argument("--out", default=None, help="artifact directory")


def _lookup_problem(name: str) -> BenchmarkProblem:
    catalog = builtin_problems()
    if name not in catalog:
        print(f"unknown problem {name!r}; available problems:", file=sys.stderr)
        for key, prob in catalog.items():
            print(f"  {key}: {prob.description}", file=sys.stderr)
        raise SystemExit(2)
    return catalog[name]


def _run_config(args, problem: BenchmarkProblem, doe: int, budget: int) -> RunConfig:
    return RunConfig(
        space=problem.space,
        n_objectives=problem.n_objectives,
        n_constraints=problem.n_constraints,
        doe_size=doe,
        budget=budget,
        acquisition=AcquisitionConfig(criterion=args.acq, reg=args.reg, gamma=args.gamma),
        kernel=KernelConfig(family=args.kernel, n_pls_components=args.pls),
        seed=args.seed,
        infill_starts=args.starts,
        name=problem.name,
    )


def _out_dir(args, suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(f"runs/{args.problem}-{suffix}-seed{args.seed}")


def cmd_run(args) -> int:
    if args.mode == "doe":
        return cmd_doe(args)
    if args.mode == "offline-sbo":
        return cmd_offline_sbo(args)
    problem = _lookup_problem(args.problem)
    doe = args.doe if args.doe is not None else 2 * problem.space.relaxed_dimension()
    budget = args.budget if args.budget is not None else 4 * doe
    config = _run_config(args, problem, doe, budget)
    nsga2 = moea.Nsga2Config(pop_size=args.pop, generations=args.gens, seed=args.seed)
    out = _out_dir(args, "run")
    state, result = driver.run(config, problem.evaluate, nsga2=nsga2, artifact_dir=out)
    print(f"evaluations: {state.n_evaluated}, database front: {len(result.pf_database)}, "
          f"predicted front: {len(result.predicted_pf.entries)}")
    print(result.proximity.summary)
    print(f"artifacts: {out}")
    return 0


def cmd_doe(args) -> int:
    problem = _lookup_problem(args.problem)
    n = args.doe if args.doe is not None else (args.budget or 2 * problem.space.relaxed_dimension())
    config = _run_config(args, problem, n, n)
    nsga2 = moea.Nsga2Config(pop_size=args.pop, generations=args.gens, seed=args.seed)
    out = _out_dir(args, "doe")
    state, result = driver.run(config, problem.evaluate, nsga2=nsga2, artifact_dir=out)
    print(f"DOE of {state.n_evaluated} points, database front: {len(result.pf_database)}")
    print(f"artifacts: {out}")
    return 0


def cmd_offline_sbo(args) -> int:
    # one-shot baseline: a larger DOE, surrogates fitted once, NSGA-II on them
    args.doe = args.doe if args.doe is not None else (args.budget or 50)
    args.budget = args.doe
    out = _out_dir(args, "offline-sbo")
    args.out = str(out)
    return cmd_doe(args)


def cmd_serve(args) -> int:
    from .service import serve

    serve(port=args.port, data_dir=args.data_dir)
    return 0


def _load_run_dir(run_dir: Path) -> tuple[RunConfig, RunState]:
    with open(run_dir / "config.json") as fh:
        config = RunConfig.from_dict(json.load(fh))
    records = []
    with open(run_dir / "history.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            named = {}
            for v in config.space.variables:
                raw = row[v.name]
                if v.kind == "continuous":
                    named[v.name] = float(raw)
                elif v.kind == "integer":
                    named[v.name] = int(raw)
                else:
                    named[v.name] = raw
            point = config.space.point_from_named(named)
            f = [float(row[f"f{i + 1}"]) for i in range(config.n_objectives)]
            g = [float(row[f"g{j + 1}"]) for j in range(config.n_constraints)]
            status = "ok" if all(np.isfinite(f)) and all(np.isfinite(g)) else "failed"
            records.append((point, f, g, row["origin"], status))
    # a truncated history is fine: the state replays whatever rows exist
    config_budget = max(config.budget, len(records))
    if config_budget != config.budget:
        config = RunConfig.from_dict({**config.to_dict(), "budget": config_budget})
    return config, RunState.restore(config, records)


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    config, state = _load_run_dir(run_dir)
    nsga2 = moea.Nsga2Config(pop_size=args.pop, generations=args.gens, seed=config.seed)
    result = driver.finalize(state, nsga2=nsga2)
    out = Path(args.out) if args.out else run_dir
    driver.write_artifacts(out, state, result)
    print(f"recomputed fronts from {state.n_evaluated} evaluations")
    print(result.proximity.summary)
    print(f"artifacts: {out}")
    return 0


def cmd_plot_data(args) -> int:
    run_dir = Path(args.run_dir)
    config, state = _load_run_dir(run_dir)
    out = Path(args.out) if args.out else run_dir / "plot-data"
    out.mkdir(parents=True, exist_ok=True)
    n = config.n_objectives
    front = set(driver.finalize(state, nsga2=moea.Nsga2Config(
        pop_size=args.pop, generations=args.gens, seed=config.seed)).pf_database)
    predicted_rows = []
    predicted_path = run_dir / "predicted_pf.csv"
    if predicted_path.exists():
        with open(predicted_path, newline="") as fh:
            predicted_rows = [
                [float(row[f"f{i + 1}"]) for i in range(n)] for row in csv.DictReader(fh)
            ]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            path = out / f"front_f{i + 1}_f{j + 1}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow([f"f{i + 1}", f"f{j + 1}", "source", "feasible", "on_front"])
                for k, r in enumerate(state.history):
                    writer.writerow([
                        repr(r.objectives[i]) if r.objectives else "",
                        repr(r.objectives[j]) if r.objectives else "",
                        r.origin,
                        int(r.feasible),
                        int(k in front),
                    ])
                for f in predicted_rows:
                    writer.writerow([repr(f[i]), repr(f[j]), "predicted", 1, 1])
            count += 1
    print(f"wrote {count} objective-pair files to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mixmobo",
        description="constrained multi-objective Bayesian optimization over mixed design spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full adaptive optimization")
    _add_run_flags(p_run)
    p_run.add_argument("--mode", choices=["bo", "doe", "offline-sbo"], default="bo")
    p_run.set_defaults(func=cmd_run)

    p_doe = sub.add_parser("doe", help="DOE-only study")
    _add_run_flags(p_doe)
    p_doe.set_defaults(func=cmd_doe)

    p_off = sub.add_parser("offline-sbo", help="offline surrogate baseline (DOE, fit, NSGA-II)")
    _add_run_flags(p_off)
    p_off.set_defaults(func=cmd_offline_sbo)

    p_serve = sub.add_parser("serve", help="start the HTTP ask-tell service")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--data-dir", default=None)
    p_serve.set_defaults(func=cmd_serve)

    p_report = sub.add_parser("report", help="recompute fronts from a run directory")
    p_report.add_argument("--run-dir", required=True)
    p_report.add_argument("--out", default=None)
    p_report.add_argument("--pop", type=int, default=100)
    p_report.add_argument("--gens", type=int, default=200)
    p_report.set_defaults(func=cmd_report)

    p_plot = sub.add_parser("plot-data", help="emit per-objective-pair front CSVs")
    p_plot.add_argument("--run-dir", required=True)
    p_plot.add_argument("--out", default=None)
    p_plot.add_argument("--pop", type=int, default=100)
    p_plot.add_argument("--gens", type=int, default=200)
    p_plot.set_defaults(func=cmd_plot_data)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
