"""Scheduling policies that map a circuit DAG onto 1-based logical steps.

All policies place non-T operations as soon as they are ready; quotas and
reshaping apply to T operations only. Ties are broken by node id.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .dag import CircuitDag, asap_levels, alap_levels, slack_analysis, t_height


class Policy(str, enum.Enum):
    STATIC = "static"
    CAPACITY_AWARE = "ca"
    SMOOTH = "smooth"
    QUOTA = "quota"

    @property
    def needs_capacity(self) -> bool:
        return self in (Policy.CAPACITY_AWARE, Policy.QUOTA)


class ScheduleError(ValueError):
    pass


class PrecedenceViolated(ScheduleError):
    def __init__(self, edge: tuple[int, int]):
        self.edge = edge
        super().__init__(f"edge {edge} is not strictly ordered in time")


class UnassignedNode(ScheduleError):
    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"node {node_id} has no assigned step")


class BadStep(ScheduleError):
    def __init__(self, node_id: int, step):
        self.node_id = node_id
        self.step = step
        super().__init__(f"node {node_id} assigned invalid step {step!r}")


@dataclass(frozen=True)
class Schedule:
    assignment: Mapping[int, int]
    policy: Policy

    @property
    def t_static(self) -> int:
        return max(self.assignment.values(), default=0)

    def to_json_obj(self) -> dict:
        return {
            "policy": self.policy.value,
            "assignment": [[v, self.assignment[v]] for v in sorted(self.assignment)],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Schedule":
        return cls({int(v): int(s) for v, s in obj["assignment"]}, Policy(obj["policy"]))


def validate_schedule(dag: CircuitDag, s: Schedule) -> None:
    for v in dag.node_ids:
        if v not in s.assignment:
            raise UnassignedNode(v)
    for v, step in s.assignment.items():
        if not isinstance(step, int) or isinstance(step, bool) or step < 1:
            raise BadStep(v, step)
    for u, v in dag.edges:
        if s.assignment[u] >= s.assignment[v]:
            raise PrecedenceViolated((u, v))


def demand_trace(dag: CircuitDag, s: Schedule) -> list[int]:
    trace = [0] * s.t_static
    for v, step in s.assignment.items():
        if dag.is_t(v):
            trace[step - 1] += 1
    return trace


def schedule_static(dag: CircuitDag) -> Schedule:
    return Schedule({v: lvl + 1 for v, lvl in asap_levels(dag).items()}, Policy.STATIC)


def _list_schedule(dag: CircuitDag, pick: Callable[[int, list[int]], list[int]], policy: Policy) -> Schedule:
    """Forward list scheduler.

    At each step every ready non-T node runs; ``pick(step, ready_t)`` returns
    the ready T nodes to run now. Nodes placed at a step release their
    successors for the next step.
    """
    remaining = {v: len(dag.preds(v)) for v in dag.node_ids}
    ready = sorted(v for v, n in remaining.items() if n == 0)
    assignment: dict[int, int] = {}
    step = 0
    while ready:
        step += 1
        ready_t = [v for v in ready if dag.is_t(v)]
        chosen = [v for v in ready if not dag.is_t(v)] + pick(step, ready_t)
        if not chosen:
            raise RuntimeError("list scheduler made no progress")
        chosen_set = set(chosen)
        released = []
        for v in chosen:
            assignment[v] = step
            for w in dag.succs(v):
                remaining[w] -= 1
                if remaining[w] == 0:
                    released.append(w)
        ready = sorted([v for v in ready if v not in chosen_set] + released)
    return Schedule(assignment, policy)


def _check_capacity(c: int) -> None:
    if int(c) != c or c < 1:
        raise ValueError(f"capacity must be a positive integer, got {c!r}")


def schedule_capacity_aware(dag: CircuitDag, c: int) -> Schedule:
    """At most ``c`` T nodes per step, taken in id order, no lookahead."""
    _check_capacity(c)
    return _list_schedule(dag, lambda step, ready_t: ready_t[:c], Policy.CAPACITY_AWARE)


def schedule_quota(dag: CircuitDag, c: int) -> Schedule:
    """Capacity quota like ``schedule_capacity_aware``, but ready T nodes are
    taken by ascending slack, then descending T-height, then id."""
    _check_capacity(c)
    slack = slack_analysis(dag).slack
    height = t_height(dag)

    def pick(step, ready_t):
        return sorted(ready_t, key=lambda v: (slack[v], -height[v], v))[:c]

    return _list_schedule(dag, pick, Policy.QUOTA)


def smooth_horizon(dag: CircuitDag) -> int:
    """Critical-path makespan extended by the mean positive slack of T nodes (rounded up)."""
    sa = slack_analysis(dag)
    return sa.horizon + math.ceil(sa.mean_positive_t_slack(dag))


def schedule_smooth(dag: CircuitDag) -> Schedule:
    """Slack-based reshaping toward an even per-step T demand.

    T nodes are released against ALAP deadlines at the extended horizon and
    taken earliest-deadline-first up to ``ceil(N_T / H)`` per step; a node
    whose deadline has arrived always runs, so the schedule fits in ``H``.
    """
    horizon = smooth_horizon(dag)
    deadline = {v: ls + 1 for v, ls in alap_levels(dag, horizon).items()}
    n_t = len(dag.t_nodes())
    target = math.ceil(n_t / horizon) if horizon else 0

    def pick(step, ready_t):
        ordered = sorted(ready_t, key=lambda v: (deadline[v], v))
        chosen = ordered[:target]
        chosen += [v for v in ordered[target:] if deadline[v] <= step]
        return chosen

    return _list_schedule(dag, pick, Policy.SMOOTH)


def schedule(dag: CircuitDag, policy: Policy | str, c: int | None = None) -> Schedule:
    policy = Policy(policy)
    if policy.needs_capacity and c is None:
        raise ValueError(f"policy {policy.value!r} requires a delivery capacity")
    if policy is Policy.STATIC:
        return schedule_static(dag)
    if policy is Policy.SMOOTH:
        return schedule_smooth(dag)
    if policy is Policy.CAPACITY_AWARE:
        return schedule_capacity_aware(dag, c)
    return schedule_quota(dag, c)
