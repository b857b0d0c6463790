"""Command-line front end.

Commands:
    solve   run a selection/attack solver on a JSON instance
    gadget  generate instance files (counterexample families, reductions)
    x3c     decide exact-cover instances directly or through a reduction
    sweep   h-parameter sweeps of the counterexample families, CSV output

Exit codes: 0 success, 1 input error, 2 solver error, 3 enumeration too
large.  Report payloads carry no timestamps, so identical invocations write
byte-identical files.  KFSSLAB_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import closed_forms, gadgets, model as model_mod, riccati, solvers

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_TOO_LARGE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the exit-code contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(message)


class _InputError(Exception):
    pass


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _solver_options(args) -> riccati.SolverOptions:
    kwargs = {}
    if args.tol is not None:
        kwargs["tol"] = args.tol
    if args.max_iter is not None:
        kwargs["max_iter"] = args.max_iter
    if args.pinv_rtol is not None:
        kwargs["pinv_rtol"] = args.pinv_rtol
    if args.pbh_tol is not None:
        kwargs["pbh_tol"] = args.pbh_tol
    return riccati.SolverOptions(**kwargs)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None, help="convergence tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    p.add_argument("--pinv-rtol", type=float, default=None, help="pseudo-inverse cutoff")
    p.add_argument("--pbh-tol", type=float, default=None, help="detectability tolerance")


def _load_model(path: str) -> model_mod.SystemModel:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    return model_mod.validate_model(model_mod.loads_model(text))


def _load_x3c(path: str) -> gadgets.X3CInstance:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"invalid X3C JSON in {path}: {exc}") from exc
    try:
        return gadgets.x3c_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise _InputError(f"malformed X3C instance in {path}: {exc}") from exc


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _integral_budget(value: float, what: str) -> int:
    if abs(value - round(value)) > 1e-9:
        raise _InputError(f"greedy needs an integer {what} budget, got {value}")
    return int(round(value))


def cmd_solve(args) -> int:
    model = _load_model(args.instance)
    opts = _solver_options(args)
    if args.mode == "select":
        if args.algorithm == "greedy":
            budget = _integral_budget(model.budget_select, "selection")
            report = solvers.greedy_select(model, budget, args.metric, opts)
        else:
            report = solvers.exhaustive_select(model, model.b, model.budget_select, args.metric, opts)
    else:
        if args.algorithm == "greedy":
            budget = _integral_budget(model.budget_attack, "attack")
            report = solvers.greedy_attack(model, budget, args.metric, opts)
        else:
            report = solvers.exhaustive_attack(model, model.omega, model.budget_attack, args.metric, opts)
    support = [i + 1 for i in report.chosen.support]
    trace_text = "inf" if math.isinf(report.trace) else repr(report.trace)
    print(f"trace={trace_text} chosen={support}")
    if args.output:
        _write_json(args.output, solvers.report_to_dict(report))
    return EXIT_OK


def cmd_gadget(args) -> int:
    if args.kind in ("example1", "example2"):
        build = gadgets.build_example1 if args.kind == "example1" else gadgets.build_example2
        instance = build(args.lambda1, args.h)
        _write_json(args.output, model_mod.model_to_dict(instance))
        print(f"wrote {args.kind} instance to {args.output}")
        return EXIT_OK
    x3c = _load_x3c(args.x3c)
    build = gadgets.build_kfss_gadget if args.kind == "kfss" else gadgets.build_kfsa_gadget
    gadget = build(x3c, args.k)
    _write_json(args.output, model_mod.model_to_dict(gadget.model))
    sidecar = args.threshold_output or args.output + ".threshold.json"
    _write_json(sidecar, gadgets.gadget_to_dict(gadget))
    print(f"wrote {gadget.kind} instance to {args.output} (threshold {gadget.threshold} in {sidecar})")
    return EXIT_OK


def cmd_x3c(args) -> int:
    inst = _load_x3c(args.x3c)
    if args.via == "bruteforce":
        answer, witness = gadgets.x3c_bruteforce(inst)
        if answer:
            print(f"yes witness={[i + 1 for i in witness]}")
        else:
            print("no")
        return EXIT_OK
    decide = gadgets.x3c_decide_via_kfss if args.via == "kfss" else gadgets.x3c_decide_via_kfsa
    decision = decide(inst, K=args.k, solver=args.solver)
    verdict = "yes" if decision.answer else "no"
    note = " (heuristic: greedy solver carries no guarantee)" if args.solver == "greedy" else ""
    print(f"{verdict} trace={decision.trace!r} threshold={decision.threshold!r}{note}")
    return EXIT_OK


def _sweep_point(family: str, lambda1: float, h: float, metric: str, v_scale: float | None):
    if family == "example1":
        instance = gadgets.build_example1(lambda1, h)
    else:
        instance = gadgets.build_example2(lambda1, h)
    if v_scale is not None:
        instance.V = v_scale * np.eye(instance.q)
        instance = model_mod.validate_model(instance)
    if family == "example1":
        greedy = solvers.greedy_select(instance, 2, metric)
        optimal = solvers.exhaustive_select(instance, instance.b, 2.0, metric)
        num, den = greedy.trace, optimal.trace
        predicted = closed_forms.limit_ratio_select(lambda1)
    else:
        greedy = solvers.greedy_attack(instance, 2, metric)
        optimal = solvers.exhaustive_attack(instance, instance.omega, 2.0, metric)
        num, den = optimal.trace, greedy.trace
        predicted = closed_forms.limit_ratio_attack(lambda1)
    if math.isinf(num) and math.isinf(den):
        ratio = 1.0
    elif math.isinf(num) or math.isinf(den) or den == 0.0:
        ratio = math.inf
    else:
        ratio = num / den
    limit = predicted[0] if metric == "priori" else predicted[1]
    return (h, greedy.trace, optimal.trace, ratio, limit)


def _sweep_grid(args) -> list[float]:
    if args.h_grid:
        try:
            grid = [float(tok) for tok in args.h_grid.split(",") if tok.strip()]
        except ValueError as exc:
            raise _InputError(f"bad --h-grid: {exc}") from exc
    else:
        lo, hi, count = args.h_range
        count = int(count)
        if count < 1 or lo <= 0 or hi <= 0:
            raise _InputError("--h-range needs positive MIN MAX and COUNT >= 1")
        if count == 1:
            grid = [lo]
        else:
            step = (math.log10(hi) - math.log10(lo)) / (count - 1)
            grid = [10 ** (math.log10(lo) + i * step) for i in range(count)]
    if not grid:
        raise _InputError("sweep grid is empty")
    return grid


def _worker_count(n_points: int) -> int:
    cap = os.environ.get("KFSSLAB_THREADS")
    if cap:
        try:
            workers = max(1, int(cap))
        except ValueError:
            raise _InputError(f"KFSSLAB_THREADS must be an integer, got {cap!r}")
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_points))


def cmd_sweep(args) -> int:
    grid = _sweep_grid(args)
    jobs = [(args.family, args.lambda1, h, args.metric, args.v_scale) for h in grid]
    workers = _worker_count(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point_star, jobs))
    else:
        rows = [_sweep_point_star(job) for job in jobs]
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h", "trace_greedy", "trace_optimal", "ratio", "predicted_limit"])
        for row in rows:
            writer.writerow([repr(x) for x in row])
    print(f"wrote {len(rows)} sweep rows to {args.output}")
    return EXIT_OK


def _sweep_point_star(job):
    return _sweep_point(*job)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kfsslab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a solver on a JSON instance")
    p_solve.add_argument("--instance", required=True, help="instance JSON path")
    p_solve.add_argument("--mode", choices=("select", "attack"), required=True)
    p_solve.add_argument("--algorithm", choices=("greedy", "exhaustive"), required=True)
    p_solve.add_argument("--metric", choices=solvers.METRICS, default="priori")
    p_solve.add_argument("--output", default=None, help="report JSON path")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_gadget = sub.add_parser("gadget", help="generate instance files")
    p_gadget.add_argument("kind", choices=("example1", "example2", "kfss", "kfsa"))
    p_gadget.add_argument("--lambda1", type=float, default=0.9, help="state-1 pole (example families)")
    p_gadget.add_argument("--h", type=float, default=100.0, help="coupling gain (example families)")
    p_gadget.add_argument("--x3c", default=None, help="X3C JSON path (reduction kinds)")
    p_gadget.add_argument("--k", type=float, default=1.0, help="separation factor K >= 1")
    p_gadget.add_argument("--output", required=True, help="instance JSON path")
    p_gadget.add_argument("--threshold-output", default=None, help="threshold sidecar path")
    p_gadget.set_defaults(func=cmd_gadget)

    p_x3c = sub.add_parser("x3c", help="decide an exact-cover instance")
    x3c_sub = p_x3c.add_subparsers(dest="x3c_command", required=True)
    p_decide = x3c_sub.add_parser("decide")
    p_decide.add_argument("--x3c", required=True, help="X3C JSON path")
    p_decide.add_argument("--via", choices=("bruteforce", "kfss", "kfsa"), required=True)
    p_decide.add_argument("--solver", choices=("greedy", "exhaustive"), default="exhaustive")
    p_decide.add_argument("--k", type=float, default=1.0)
    p_decide.set_defaults(func=cmd_x3c)

    p_sweep = sub.add_parser("sweep", help="h-sweep of a counterexample family")
    p_sweep.add_argument("--family", choices=("example1", "example2"), required=True)
    p_sweep.add_argument("--lambda1", type=float, required=True)
    p_sweep.add_argument("--metric", choices=solvers.METRICS, default="priori")
    grid = p_sweep.add_mutually_exclusive_group(required=True)
    grid.add_argument("--h-grid", default=None, help="comma-separated h values")
    grid.add_argument("--h-range", nargs=3, type=float, metavar=("MIN", "MAX", "COUNT"),
                      help="log-spaced grid")
    p_sweep.add_argument("--v-scale", type=float, default=None,
                         help="replace V with this multiple of the identity")
    p_sweep.add_argument("--output", required=True, help="CSV path")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _InputError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except (model_mod.ModelError, closed_forms.DomainError, ValueError) as exc:
        if isinstance(exc, gadgets.TooLarge):
            return _fail(str(exc), EXIT_TOO_LARGE)
        if isinstance(exc, (solvers.SolverInputError, riccati.StabilizabilityViolation)):
            return _fail(str(exc), EXIT_SOLVER)
        return _fail(str(exc), EXIT_INPUT)
    except riccati.NoConvergence as exc:
        return _fail(str(exc), EXIT_SOLVER)


if __name__ == "__main__":
    sys.exit(main())
