"""``sldiflow`` command line: validate shops, compute and minimize makespans, export charts.

Exit codes: 0 success, 1 internal error, 2 infeasible, 3 invalid input,
4 budget exceeded.  Files carry minutes; hours appear only in summaries.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
import time
from pathlib import Path

from sldiflow.bakery import (
    MACHINES,
    N_EVENTS,
    TRAJECTORY_METHODS,
    BakeryConfig,
    BakeryModel,
    ConfigError,
    audit_trajectory,
    full_scale_config,
    synthetic_config,
)
from sldiflow.block import InfeasibleChain, block_makespan
from sldiflow.oracle import chain_graph, graph_makespan, graph_trajectory
from sldiflow.search import METHODS, LimitExceeded, build_cache, exhaustive_search, fast_makespan
from sldiflow.sldi import MakespanResult, SldiInstance, chain_blocks, check_trajectory, dense_makespan

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3, 4

#: above this many stacked events ``auto`` picks the graph trajectory over the dense star
DENSE_AUTO_LIMIT = 1500


class UsageError(Exception):
    pass


def _hours(minutes: float) -> str:
    if not math.isfinite(minutes):
        return "n/a"
    return f"{minutes / 60:.2f} h"


def _num(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return str(int(x)) if x.is_integer() else f"{x:.6g}"


def _schedule_arg(text: str | None, cfg: BakeryConfig) -> tuple:
    if text is None:
        return cfg.active_types
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError:
        raise UsageError(f"--schedule expects comma-separated type numbers, got {text!r}") from None


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _load_config(args) -> BakeryConfig:
    try:
        return BakeryConfig.load(args.config, args.demand)
    except FileNotFoundError as exc:
        raise UsageError(f"{exc.filename}: no such file") from None


def _emit(out, pairs):
    for key, value in pairs:
        print(f"{key}: {value}", file=out)


def _report_result(res, out):
    pairs = [("feasible", "yes" if res.feasible else "no"), ("status", res.status)]
    if res.feasible:
        pairs.append(("makespan_min", _num(res.makespan)))
        pairs.append(("makespan", _hours(res.makespan)))
    else:
        pairs.append(("witness", str(res.witness)))
    pairs += [(f"time_{k}_s", f"{v:.6f}") for k, v in res.timings.items()]
    _emit(out, pairs)


def _write_trajectory(path, xs, header, lead_rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for lead, row in zip(lead_rows, xs):
            w.writerow(list(lead) + [_num(v) for v in row])


# -- subcommands -----------------------------------------------------------------

def cmd_validate(args, out) -> int:
    cfg = _load_config(args)
    problems = cfg.validate()
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=out)
        return EXIT_INVALID
    _emit(out, [("valid", "yes"), ("types", cfg.J), ("products", cfg.Q), ("batches", cfg.B)])
    return EXIT_OK


def _makespan_instance(args, out) -> int:
    try:
        inst = SldiInstance.from_dict(_load_json(args.config))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed SLDI document: {exc}") from None
    method = args.method or "dense"
    if method == "fast":
        raise UsageError("method 'fast' needs a bakery configuration, not a bare SLDI instance")
    if args.trajectory and method not in TRAJECTORY_METHODS:
        raise UsageError(f"--trajectory is not available with --method {method}; use dense or oracle")
    t0 = time.perf_counter()
    if method == "dense":
        res = dense_makespan(inst, want_trajectory=bool(args.trajectory))
    elif method == "block":
        res = block_makespan(inst)
    else:
        graph = chain_graph(*chain_blocks(inst))
        res = graph_trajectory(graph, inst.n) if args.trajectory else graph_makespan(graph, inst.n)
    res.timings["solve"] = time.perf_counter() - t0
    _report_result(res, out)
    if res.feasible and args.trajectory and res.trajectory is not None:
        _write_trajectory(args.trajectory, res.trajectory, ["k"] + [f"x{i + 1}" for i in range(inst.n)],
                          [(k + 1,) for k in range(inst.K)])
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_makespan(args, out) -> int:
    if "modes" in _load_json(args.config):
        return _makespan_instance(args, out)
    cfg = _load_config(args).check()
    w = _schedule_arg(args.schedule, cfg)
    method = args.method or "block"
    if args.trajectory and method not in TRAJECTORY_METHODS:
        raise UsageError(f"--trajectory is not available with --method {method}; use dense or oracle")
    t0 = time.perf_counter()
    model = BakeryModel(cfg)
    setup = {"setup": time.perf_counter() - t0}
    try:
        t1 = time.perf_counter()
        if method == "fast":
            cache = build_cache(cfg, model)
            setup["cache"] = time.perf_counter() - t1
            t1 = time.perf_counter()
            res = fast_makespan(cache, w)
        else:
            res = model.makespan(w, method, want_trajectory=bool(args.trajectory))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except InfeasibleChain as exc:  # a type is infeasible on its own
        res = MakespanResult.infeasible("fast", exc.witness)
    res.timings = {**setup, "solve": time.perf_counter() - t1}
    print(f"schedule: {','.join(map(str, model.indexing(w).schedule))}", file=out)
    _report_result(res, out)
    if res.feasible and args.trajectory and res.trajectory is not None:
        idx = model.indexing(w)
        header = ["k", "type", "batch"] + [f"{name}_{tag}" for name in MACHINES for tag in ("in", "out")]
        _write_trajectory(args.trajectory, res.trajectory, header,
                          [(k + 1, idx.types[k], idx.batches[k]) for k in range(idx.Q)])
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_optimize(args, out) -> int:
    cfg = _load_config(args).check()
    writer, fh = None, None
    if args.table:
        fh = open(args.table, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["schedule", "makespan_min"])

    def row(w, value):
        writer.writerow([" ".join(map(str, w)), _num(value)])

    try:
        res = exhaustive_search(cfg, method=args.method, max_types=args.max_types,
                                budget_seconds=args.budget_seconds,
                                on_row=row if writer else None, workers=args.workers)
    except LimitExceeded as exc:
        print(f"budget exceeded: {exc}", file=out)
        return EXIT_BUDGET
    finally:
        if fh:
            fh.close()
    pairs = [("method", res.method), ("evaluated", res.evaluated), ("status", res.status)]
    if res.feasible:
        pairs += [("best_schedule", ",".join(map(str, res.best_schedule))),
                  ("makespan_min", _num(res.best_makespan)), ("makespan", _hours(res.best_makespan))]
    elif res.witness is not None:
        pairs.append(("witness", str(res.witness)))
    pairs += [(f"time_{k}_s", f"{v:.6f}") for k, v in res.timing.items()]
    _emit(out, pairs)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_gantt(args, out) -> int:
    from sldiflow.plotting import gantt_records, records_makespan, render_gantt

    cfg = _load_config(args).check()
    w = _schedule_arg(args.schedule, cfg)
    model = BakeryModel(cfg)
    try:
        idx = model.indexing(w)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.Q == 0:
        records, makespan, status = [], 0.0, "degenerate"
    else:
        method = args.method
        if method == "auto":
            method = "dense" if cfg.Q * N_EVENTS <= DENSE_AUTO_LIMIT else "oracle"
        res = model.makespan(w, method, want_trajectory=True)
        if not res.feasible:
            _report_result(res, out)
            return EXIT_INFEASIBLE
        xs = res.trajectory
        bad = check_trajectory(model.instance(w), xs, tol=1e-6) + audit_trajectory(cfg, idx, xs)
        if bad:
            raise RuntimeError(f"trajectory failed its own check: {bad[0]}")
        records, makespan, status = gantt_records(idx, xs), res.makespan, res.status
        if abs(records_makespan(records) - makespan) > 1e-6 * max(1.0, makespan):
            raise RuntimeError("Gantt records do not reproduce the makespan")
    fmt = args.format or ("svg" if str(args.out).endswith(".svg") else "json")
    if fmt == "json":
        doc = {
            "unit": "min",
            "schedule": list(idx.schedule),
            "status": status,
            "makespan": makespan,
            "records": [r.to_dict() for r in records],
        }
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        bars = None
    else:
        names = {j: n for j, n in enumerate(cfg.type_names, start=1)}
        bars = render_gantt(records, makespan, args.out, type_names=names)
    pairs = [("status", status), ("makespan_min", _num(makespan)), ("makespan", _hours(makespan)),
             ("records", len(records))]
    if bars is not None:
        pairs.append(("rectangles", bars))
    pairs.append(("written", args.out))
    _emit(out, pairs)
    return EXIT_OK


def _bench_evaluator(method, cfg, model):
    """Setup time and a callable computing one schedule's makespan."""
    t0 = time.perf_counter()
    if method == "fast":
        cache = build_cache(cfg, model)
        return time.perf_counter() - t0, lambda w: fast_makespan(cache, w).makespan
    return 0.0, lambda w: model.makespan(w, method).makespan


def cmd_bench(args, out) -> int:
    cfg = _load_config(args).check()
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise UsageError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    if cfg.Q == 0:
        raise UsageError("nothing to benchmark: demand is empty")
    w = _schedule_arg(args.schedule, cfg)
    model = BakeryModel(cfg)
    evaluators = {m: _bench_evaluator(m, cfg, model) for m in methods}

    values = {m: evaluators[m][1](w) for m in methods}
    ref = values[methods[0]]
    if any(v != ref for v in values.values()):
        print("methods disagree on makespan:", file=sys.stderr)
        for m, v in values.items():
            print(f"  {m}: {_num(v)} (diff {v - ref:+g})", file=sys.stderr)
        return EXIT_ERROR

    n_sched = math.factorial(len(cfg.active_types))
    rows = []
    for m in methods:
        setup, fn = evaluators[m]
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            fn(w)
            times.append(time.perf_counter() - t0)
        mean = statistics.fmean(times)
        full, kind = setup + mean * n_sched, "extrapolated"
        if m == "fast" and args.full_search:
            t0 = time.perf_counter()
            exhaustive_search(cfg, "fast", workers=1)
            full, kind = time.perf_counter() - t0, "measured"
        rows.append({"method": m, "repeats": args.repeats, "mean_s": mean, "median_s": statistics.median(times),
                     "setup_s": setup, "schedules": n_sched, "full_search_s": full, "full_search": kind,
                     "makespan_min": ref})

    fields = list(rows[0])
    target = open(args.out, "w", newline="") if args.out else out
    try:
        writer = csv.DictWriter(target, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if args.out:
            target.close()
    by = {r["method"]: r["mean_s"] for r in rows}
    if "fast" in by and "block" in by:
        print(f"# speedup block/fast: {by['block'] / by['fast']:.0f}x", file=sys.stderr)
    if args.plot:
        from sldiflow.plotting import render_bench

        render_bench(rows, args.plot)
    return EXIT_OK


def cmd_generate(args, out) -> int:
    if args.full_scale:
        cfg = full_scale_config(args.seed)
    else:
        if not args.quantities or not args.capacities:
            raise UsageError("give --quantities and --capacities, or --full-scale")
        q = [int(x) for x in args.quantities.split(",")]
        c = [int(x) for x in args.capacities.split(",")]
        if len(q) != len(c):
            raise UsageError("--quantities and --capacities need the same number of entries")
        cfg = synthetic_config(q, c, seed=args.seed, feasible=not args.infeasible)
    cfg.save(args.out)
    _emit(out, [("written", args.out), ("types", cfg.J), ("products", cfg.Q), ("batches", cfg.B)])
    return EXIT_OK


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sldiflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def shop(sp):
        sp.add_argument("config", help="shop JSON (or, for makespan, an SLDI instance JSON)")
        sp.add_argument("--demand", help="separate demand JSON overriding the shop's own")

    sp = sub.add_parser("validate", help="check a shop configuration")
    shop(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("makespan", help="makespan of one schedule")
    shop(sp)
    sp.add_argument("--schedule", help="type order, e.g. 2,1,3 (default: ascending)")
    sp.add_argument("--method", choices=METHODS, help="solver (default: block, or dense for SLDI files)")
    sp.add_argument("--trajectory", metavar="CSV", help="write the earliest consistent trajectory")
    sp.set_defaults(func=cmd_makespan)

    sp = sub.add_parser("optimize", help="exhaustive search over type orders")
    shop(sp)
    sp.add_argument("--method", choices=METHODS, default="fast")
    sp.add_argument("--budget-seconds", type=float)
    sp.add_argument("--max-types", type=int, default=10)
    sp.add_argument("--workers", type=int, help="worker processes (default: $SLDIFLOW_WORKERS or 1)")
    sp.add_argument("--table", metavar="CSV", help="write every schedule's makespan")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("gantt", help="export a Gantt chart of one schedule")
    shop(sp)
    sp.add_argument("--schedule")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=("json", "svg", "png", "pdf"))
    sp.add_argument("--method", choices=("auto",) + TRAJECTORY_METHODS, default="auto")
    sp.set_defaults(func=cmd_gantt)

    sp = sub.add_parser("bench", help="time the makespan methods on one schedule")
    shop(sp)
    sp.add_argument("--schedule")
    sp.add_argument("--methods", default="fast,block,oracle")
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--full-search", action="store_true", help="also time a real fast search")
    sp.add_argument("--out", metavar="CSV", help="write the table here instead of stdout")
    sp.add_argument("--plot", metavar="FILE", help="bar chart of per-schedule times")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("generate", help="write a synthetic shop configuration")
    sp.add_argument("out")
    sp.add_argument("--quantities")
    sp.add_argument("--capacities")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--infeasible", action="store_true", help="make multi-product batches infeasible")
    sp.add_argument("--full-scale", action="store_true", help="Q=975 products, J=9 types, B=12 batches")
    sp.set_defaults(func=cmd_generate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"invalid: {p}", file=out)
        return EXIT_INVALID
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LimitExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
