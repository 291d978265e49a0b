"""Bounded magic-state delivery: demand/supply accounting and execution.

Stock model: the buffer starts full (``b`` states), ``c`` states are produced
every wall-clock cycle and are usable within that cycle, and stock left over
after a cycle is capped at ``b``; overflow is lost. A logical step executes
atomically, so a step demanding more than ``b + c`` can never run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

INFEASIBLE = math.inf


class MismatchedParams(ValueError):
    """Two execution results were produced under different delivery parameters."""


@dataclass(frozen=True)
class DeliveryParams:
    c: int
    b: int

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise ValueError(f"delivery capacity must be a positive integer, got {self.c!r}")
        if int(self.b) != self.b or self.b < 0:
            raise ValueError(f"buffer capacity must be a non-negative integer, got {self.b!r}")


@dataclass(frozen=True)
class ExecResult:
    params: DeliveryParams
    t_static: int
    t_exe: float  # an int value, or INFEASIBLE
    stall_cycles: int
    delta_max: int
    lower_bound: int
    backlog_intervals: list[tuple[int, int]] = field(default_factory=list)
    aborted: bool = False  # stochastic runs that hit the cycle cap

    @property
    def feasible(self) -> bool:
        return self.t_exe != INFEASIBLE

    @property
    def stalled(self) -> bool:
        return self.stall_cycles > 0

    @property
    def slowdown(self) -> float | None:
        if not self.feasible or self.t_static < 1:
            return None
        return self.t_exe / self.t_static

    @property
    def gap(self) -> int | None:
        if not self.feasible:
            return None
        return int(self.t_exe) - self.lower_bound

    def to_json_obj(self) -> dict:
        return {
            "c": self.params.c,
            "b": self.params.b,
            "t_static": self.t_static,
            "t_exe": int(self.t_exe) if self.feasible else "inf",
            "stall_cycles": self.stall_cycles,
            "stalled": self.stalled,
            "delta_max": self.delta_max,
            "lower_bound": self.lower_bound,
            "slowdown": self.slowdown,
            "gap": self.gap,
            "backlog_intervals": [list(iv) for iv in self.backlog_intervals],
        }


def cumulative_demand(trace: Sequence[int]) -> list[int]:
    out = []
    total = 0
    for d in trace:
        total += d
        out.append(total)
    return out


def delta_max(trace: Sequence[int], c: int) -> int:
    """Largest cumulative surplus of demand over production, ``max_t A(t) - c*t``.

    Negative when supply always leads; 0 for an empty trace.
    """
    if not trace:
        return 0
    best = -math.inf
    total = 0
    for t, d in enumerate(trace, start=1):
        total += d
        best = max(best, total - c * t)
    return int(best)


def lower_bound(t_static: int, dmax: int, params: DeliveryParams) -> int:
    excess = max(0, dmax - params.b)
    return t_static + -(-excess // params.c)


def feasible(trace: Sequence[int], params: DeliveryParams) -> bool:
    return max(trace, default=0) <= params.b + params.c


def backlog_intervals(trace: Sequence[int], params: DeliveryParams) -> list[tuple[int, int]]:
    """Maximal runs of 1-based steps where ``A(t) > c*t + b``, inclusive."""
    intervals: list[tuple[int, int]] = []
    start = None
    for t, a in enumerate(cumulative_demand(trace), start=1):
        if a > params.c * t + params.b:
            if start is None:
                start = t
        elif start is not None:
            intervals.append((start, t - 1))
            start = None
    if start is not None:
        intervals.append((start, len(trace)))
    return intervals


def _run(trace: Sequence[int], params: DeliveryParams, produce, cycle_cap: float = math.inf):
    """Shared stock loop. ``produce()`` returns the states made in one cycle."""
    b = params.b
    stock = b
    clock = 0
    stalls = 0
    for d in trace:
        while True:
            clock += 1
            if clock > cycle_cap:
                return None, stalls
            avail = stock + produce()
            if d <= avail:
                stock = min(avail - d, b)
                break
            stalls += 1
            stock = min(avail, b)
    return clock, stalls


def simulate(trace: Sequence[int], params: DeliveryParams) -> ExecResult:
    trace = list(trace)
    t_static = len(trace)
    dmax = delta_max(trace, params.c)
    common = dict(
        params=params,
        t_static=t_static,
        delta_max=dmax,
        lower_bound=lower_bound(t_static, dmax, params),
        backlog_intervals=backlog_intervals(trace, params),
    )
    if not feasible(trace, params):
        return ExecResult(t_exe=INFEASIBLE, stall_cycles=0, **common)
    c = params.c
    clock, stalls = _run(trace, params, lambda: c)
    return ExecResult(t_exe=clock, stall_cycles=stalls, **common)


def detect_inversion(static_res: ExecResult, other_res: ExecResult) -> bool:
    """True when the first schedule is statically shorter but executes longer.

    INFEASIBLE compares above every finite makespan.
    """
    if static_res.params != other_res.params:
        raise MismatchedParams(f"{static_res.params} != {other_res.params}")
    return static_res.t_static < other_res.t_static and static_res.t_exe > other_res.t_exe
