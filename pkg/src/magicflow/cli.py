"""Command-line entry point: ``magicflow {generate,schedule,simulate,sweep,ingest,report}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import harness
from .dag import DagError
from .delivery import DeliveryParams, delta_max, simulate
from .io import (
    ParseError,
    binned_peaks,
    dag_to_json,
    dumps,
    format_trace,
    read_dag,
    read_records_csv,
    read_trace,
)
from .scheduling import Policy, demand_trace, schedule, validate_schedule
from .sensitivity import StochasticParams, effective_capacity_deficit, simulate_stochastic
from .workloads import Family, FamilyParams, InvalidParams, default_sweep_families, generate

log = logging.getLogger("magicflow")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4

REPORT_KINDS = ("all", "bound", "slowdown", "inversions", "predictors", "subgroups", "gaps", "none")


def _int_list(text: str) -> list[int]:
    """Parse ``1,2,3`` or a range ``1-7``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magicflow", description="T-gate execution under bounded magic-state delivery.")
    parser.add_argument("--config", help="JSON file whose keys override command-line flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a constructed-family DAG")
    p.add_argument("--family", choices=[f.value for f in Family], required=True)
    p.add_argument("--layers", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--t-fraction", type=float, default=1.0)
    p.add_argument("--density", type=float, help="edge density (default: family default)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output DAG JSON (default: stdout)")

    p = sub.add_parser("schedule", help="schedule a DAG and emit its demand trace")
    p.add_argument("dag")
    p.add_argument("--policy", choices=[x.value for x in Policy], required=True)
    p.add_argument("--c", type=int, help="delivery capacity (required for ca and quota)")
    p.add_argument("--out", help="schedule JSON path (default: stdout)")
    p.add_argument("--trace-out", help="demand trace path (default: stderr summary only)")

    p = sub.add_parser("simulate", help="execute a demand trace under (C, B)")
    p.add_argument("trace")
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--p-acc", type=float, help="per-attempt acceptance probability (stochastic supply)")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cycle-cap", type=int)
    p.add_argument("--kappa", type=float, help="routing penalty for the effective-capacity deficit")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="run the family x (C, B) x policy sweep")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--c-grid", type=_int_list, default=list(range(1, 8)))
    p.add_argument("--b-grid", type=_int_list, default=list(range(16)))
    p.add_argument("--policies", default="static,ca,smooth")
    p.add_argument("--families", default="high,medium,low")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", choices=REPORT_KINDS, default="all")
    p.add_argument("--resamples", type=int, default=10_000)

    p = sub.add_parser("ingest", help="validate and summarise an external demand trace")
    p.add_argument("trace")
    p.add_argument("--c", type=int)
    p.add_argument("--bin", type=int, default=0, help="bin width for peak-window demand (0: off)")
    p.add_argument("--out")

    p = sub.add_parser("report", help="recompute reports from a records CSV, or run the probes")
    p.add_argument("--records", help="records CSV written by sweep")
    p.add_argument("--kind", choices=REPORT_KINDS[:-1] + ("quota", "sensitivity", "routing"), default="all")
    p.add_argument("--dag", nargs="*", default=[], help="DAG files for the quota probe")
    p.add_argument("--c-grid", type=_int_list, default=list(range(1, 8)))
    p.add_argument("--p-acc", type=float, default=0.95)
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--kappa", type=float, action="append")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--out")
    return parser


def resolve_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        for key, value in overrides.items():
            key = key.replace("-", "_")
            if not hasattr(args, key):
                parser.error(f"unknown config key {key!r}")
            setattr(args, key, value)
    if "master_seed" in vars(args) and os.environ.get("MAGICFLOW_SEED"):
        args.master_seed = int(os.environ["MAGICFLOW_SEED"])
    return args


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    family = Family(args.family)
    defaults = FamilyParams.default(family, args.seed)
    params = FamilyParams(
        family=family,
        layers=args.layers if args.layers is not None else defaults.layers,
        width=args.width if args.width is not None else defaults.width,
        t_fraction=args.t_fraction,
        edge_density=args.density,
        seed=args.seed,
    )
    dag = generate(params)
    _emit(dag_to_json(dag), args.out)
    log.info("generated %s", dag)
    return EXIT_OK


def cmd_schedule(args) -> int:
    policy = Policy(args.policy)
    if policy.needs_capacity and args.c is None:
        raise UsageError(f"--policy {policy.value} requires --c")
    dag = read_dag(args.dag)
    s = schedule(dag, policy, args.c)
    validate_schedule(dag, s)
    trace = demand_trace(dag, s)
    _emit(dumps(s.to_json_obj()), args.out)
    if args.trace_out:
        Path(args.trace_out).write_text(format_trace(trace))
    log.info("policy=%s t_static=%d trace=%s", policy.value, s.t_static, trace if len(trace) <= 20 else "...")
    return EXIT_OK


def cmd_simulate(args) -> int:
    trace = read_trace(args.trace)
    params = DeliveryParams(args.c, args.b)
    if args.p_acc is None:
        result = simulate(trace, params).to_json_obj()
    else:
        sp = StochasticParams(args.p_acc, args.seed, args.replications)
        reps = simulate_stochastic(trace, params, sp, args.cycle_cap)
        if len(reps) == 1:
            result = reps[0].to_json_obj()
        else:
            finite = [r.t_exe for r in reps if r.feasible]
            result = {
                "replications": [r.to_json_obj() for r in reps],
                "mean_t_exe": sum(finite) / len(finite) if finite else "inf",
                "aborted": sum(r.aborted for r in reps),
            }
    if args.kappa is not None:
        result["effective_capacity_deficit"] = effective_capacity_deficit(trace, args.c, args.kappa)
    _emit(dumps(result), args.out)
    log.info("simulated %d steps under c=%d b=%d", len(trace), args.c, args.b)
    return EXIT_OK


def _write_flat_csvs(out_dir: Path, report: dict) -> None:
    table = report.get("slowdown_table")
    if table:
        with open(out_dir / "slowdown_table.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["family", "regime", "mean_slowdown", "infeasible"])
            for fam, row in table["mean_slowdown"].items():
                for regime, value in row.items():
                    w.writerow([fam, regime, "" if value is None else repr(value), table["infeasible_counts"][fam][regime]])
    pred = report.get("predictors")
    if pred:
        with open(out_dir / "predictor_slices.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["c", "b", "task", "predictor", "value", "informative"])
            for s in pred["slices"]:
                for task, flag in (("stall_auc", "stall_informative"), ("slowdown_abs_rho", "slowdown_informative"),
                                   ("inversion_auc", "inversion_informative")):
                    for name, value in s[task].items():
                        w.writerow([s["c"], s["b"], task, name, repr(value), "true" if s[flag] else "false"])


def _reports(records, kind: str, resamples: int, seed: int) -> dict:
    if kind == "all":
        return harness.full_report(records, resamples, seed)
    if kind == "bound":
        return harness.bound_validation_report(records)
    if kind == "slowdown":
        return harness.slowdown_table(records)
    if kind == "inversions":
        return harness.inversion_rates(records)
    if kind == "predictors":
        return harness.predictor_eval(records, resamples, seed)
    if kind == "subgroups":
        return harness.subgroup_stability(records)
    if kind == "gaps":
        return harness.gap_posthoc(records)
    return {}


def cmd_sweep(args) -> int:
    families = [Family(f.strip()) for f in args.families.split(",") if f.strip()]
    fams = tuple(f for f in default_sweep_families(args.master_seed) if f.family in families)
    cfg = harness.SweepConfig(
        families=fams,
        c_grid=tuple(args.c_grid),
        b_grid=tuple(args.b_grid),
        policies=tuple(Policy(p.strip()) for p in args.policies.split(",")),
        master_seed=args.master_seed,
        jobs=args.jobs,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(dumps(cfg.to_json_obj()))
    records = harness.run_sweep(cfg)
    (out_dir / "records.csv").write_text(harness.records_to_csv(records))
    log.info("wrote %d records to %s", len(records), out_dir / "records.csv")
    if args.report != "none":
        report = _reports(records, args.report, args.resamples, args.master_seed)
        text = dumps(report)
        (out_dir / "report.json").write_text(text)
        if args.report == "all":
            _write_flat_csvs(out_dir, report)
        sys.stdout.write(text)
    return EXIT_OK


def cmd_ingest(args) -> int:
    trace = read_trace(args.trace)
    summary = {
        "length": len(trace),
        "t_count": sum(trace),
        "peak": max(trace, default=0),
    }
    if args.c is not None:
        summary["c"] = args.c
        summary["delta_max"] = delta_max(trace, args.c)
    if args.bin:
        summary["bin"] = args.bin
        summary["binned_peak"] = binned_peaks(trace, args.bin)
    _emit(dumps(summary), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    if args.kind == "quota":
        if not args.dag:
            raise UsageError("--kind quota needs at least one --dag file")
        workloads = {Path(p).stem: read_dag(p) for p in args.dag}
        result = harness.quota_probe(workloads, args.c_grid)
    elif args.kind == "sensitivity":
        result = harness.stochastic_sensitivity(p_acc=args.p_acc, replications=args.replications, seed=args.master_seed)
    else:
        if not args.records:
            raise UsageError(f"--kind {args.kind} needs --records")
        records = read_records_csv(args.records)
        if args.kind == "routing":
            result = harness.routing_proxy_report(records, args.kappa or (0.0, 0.1, 0.25))
        else:
            result = _reports(records, args.kind, args.resamples, args.master_seed)
    _emit(dumps(result), args.out)
    return EXIT_OK


class UsageError(Exception):
    pass


COMMANDS = {
    "generate": cmd_generate,
    "schedule": cmd_schedule,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "ingest": cmd_ingest,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = resolve_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    resolved = {k: v for k, v in vars(args).items() if k != "config"}
    sys.stderr.write("config: " + json.dumps(resolved, sort_keys=True) + "\n")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (InvalidParams, ParseError, DagError, ValueError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
