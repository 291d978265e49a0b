"""Robustness variants of the delivery model: thinned stochastic supply and a
reduced effective capacity standing in for routing overhead."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .delivery import (
    INFEASIBLE,
    DeliveryParams,
    ExecResult,
    _run,
    backlog_intervals,
    cumulative_demand,
    delta_max,
    feasible,
    lower_bound,
)
from .rng import SplitMix64

P_ACC_GRID = (0.95, 0.99, 0.995, 0.999, 1.0)


class CycleCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class StochasticParams:
    p_acc: float
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if not (0.0 < self.p_acc <= 1.0):
            raise ValueError(f"p_acc must lie in (0, 1], got {self.p_acc}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


def default_cycle_cap(bound: int) -> int:
    return 50 * bound + 1000


def simulate_stochastic(
    trace: Sequence[int],
    params: DeliveryParams,
    sp: StochasticParams,
    cycle_cap: int | None = None,
) -> list[ExecResult]:
    """One result per replication; replication ``i`` draws from seed ``sp.seed + i``.

    Each cycle makes ``c`` delivery attempts, each accepted with probability
    ``p_acc``. Runs that exceed the cycle cap come back ``aborted`` with an
    infeasible makespan.
    """
    trace = list(trace)
    t_static = len(trace)
    dmax = delta_max(trace, params.c)
    bound = lower_bound(t_static, dmax, params)
    cap = default_cycle_cap(bound) if cycle_cap is None else cycle_cap
    common = dict(
        params=params,
        t_static=t_static,
        delta_max=dmax,
        lower_bound=bound,
        backlog_intervals=backlog_intervals(trace, params),
    )
    if not feasible(trace, params):
        return [ExecResult(t_exe=INFEASIBLE, stall_cycles=0, **common) for _ in range(sp.replications)]

    results = []
    for i in range(sp.replications):
        rng = SplitMix64(sp.seed + i)
        c, p = params.c, sp.p_acc

        def produce():
            return sum(1 for _ in range(c) if rng.random() < p)

        clock, stalls = _run(trace, params, produce, cycle_cap=cap)
        if clock is None:
            results.append(ExecResult(t_exe=INFEASIBLE, stall_cycles=stalls, aborted=True, **common))
        else:
            results.append(ExecResult(t_exe=clock, stall_cycles=stalls, **common))
    return results


def _deficit(trace: Sequence[int], rate: float) -> float:
    if not trace:
        return 0.0
    return max(a - rate * t for t, a in enumerate(cumulative_demand(trace), start=1))


def delta_max_expected(trace: Sequence[int], c: int, p_acc: float) -> float:
    """Peak cumulative surplus against the expected service rate ``c * p_acc``."""
    if not (0.0 < p_acc <= 1.0):
        raise ValueError(f"p_acc must lie in (0, 1], got {p_acc}")
    return float(_deficit(trace, c * p_acc))


def effective_capacity_deficit(trace: Sequence[int], c: int, kappa: float) -> float:
    """Peak cumulative surplus against a routing-penalised capacity ``c * (1 - kappa)``."""
    if not (0.0 <= kappa < 1.0):
        raise ValueError(f"kappa must lie in [0, 1), got {kappa}")
    return float(_deficit(trace, c * (1.0 - kappa)))
