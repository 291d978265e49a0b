"""File formats: DAG JSON, schedule JSON, demand-trace text and record CSVs."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

from .dag import CircuitDag
from .delivery import INFEASIBLE, DeliveryParams, ExecResult
from .harness import CSV_COLUMNS, SweepRecord
from .scheduling import Policy, Schedule
from .workloads import Family


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def read_dag(path: str | Path) -> CircuitDag:
    try:
        obj = json.loads(Path(path).read_text())
        return CircuitDag.from_json_obj(obj)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed DAG file {path}: {exc}") from exc


def dag_to_json(dag: CircuitDag) -> str:
    return dumps(dag.to_json_obj())


def read_schedule(path: str | Path) -> Schedule:
    try:
        return Schedule.from_json_obj(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed schedule file {path}: {exc}") from exc


def parse_trace(text: str) -> list[int]:
    """One non-negative integer per line; blank lines are skipped."""
    trace = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            value = int(line)
        except ValueError:
            raise ParseError(f"not an integer: {line!r}", lineno) from None
        if value < 0:
            raise ParseError(f"negative demand {value}", lineno)
        trace.append(value)
    return trace


def read_trace(path: str | Path) -> list[int]:
    return parse_trace(Path(path).read_text())


def format_trace(trace: Iterable[int]) -> str:
    return "".join(f"{d}\n" for d in trace)


def binned_peaks(trace: list[int], bin_size: int) -> list[int]:
    if bin_size < 1:
        raise ValueError("bin size must be >= 1")
    return [max(trace[i:i + bin_size]) for i in range(0, len(trace), bin_size)]


def read_records_csv(path: str | Path) -> list[SweepRecord]:
    """Rebuild sweep records from a results CSV (backlog intervals are not stored)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ParseError(f"unexpected CSV header in {path}")
        for lineno, row in enumerate(reader, start=2):
            try:
                t_exe = INFEASIBLE if row["t_exe"] == "inf" else int(row["t_exe"])
                result = ExecResult(
                    params=DeliveryParams(int(row["c"]), int(row["b"])),
                    t_static=int(row["t_static"]),
                    t_exe=t_exe,
                    stall_cycles=int(row["stall_cycles"]),
                    delta_max=int(row["delta_max"]),
                    lower_bound=int(row["lower_bound"]),
                )
                inv = row["inversion_vs_smooth"]
                records.append(SweepRecord(
                    family=Family(row["family"]),
                    seed=int(row["seed"]),
                    c=int(row["c"]),
                    b=int(row["b"]),
                    policy=Policy(row["policy"]),
                    t_count=int(row["t_count"]),
                    t_depth=int(row["t_depth"]),
                    slack_ratio=float(row["slack_ratio"]) if row["slack_ratio"] else None,
                    result=result,
                    inversion_vs_smooth=None if inv == "" else inv == "true",
                ))
            except (KeyError, ValueError) as exc:
                raise ParseError(str(exc), lineno) from exc
    return records


def json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
