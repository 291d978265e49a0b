"""Circuit dependency DAGs and critical-path analysis.

Every operation occupies exactly one level. Levels here are 0-based; the
scheduling layer converts them to 1-based logical steps.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping


class DagError(ValueError):
    """Base class for malformed circuit DAGs."""


class CycleDetected(DagError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(str(v) for v in cycle))


class DanglingEdge(DagError):
    def __init__(self, edge: tuple[int, int]):
        self.edge = edge
        super().__init__(f"edge {edge} references an unknown node id")


class DuplicateId(DagError):
    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"duplicate node id {node_id}")


class DuplicateEdge(DagError):
    def __init__(self, edge: tuple[int, int]):
        self.edge = edge
        super().__init__(f"duplicate edge {edge}")


class HorizonTooSmall(ValueError):
    def __init__(self, horizon: int, makespan: int):
        self.horizon = horizon
        self.makespan = makespan
        super().__init__(f"horizon {horizon} is below the critical-path makespan {makespan}")


class NoTGates(ValueError):
    """Slack ratio requested for a DAG without T nodes."""


class CircuitDag:
    """Immutable operation DAG whose nodes are flagged as T gates or not.

    Construction validates the graph, so every instance is acyclic with
    unique ids and well-formed edges.
    """

    __slots__ = ("_is_t", "_edges", "_preds", "_succs", "_order")

    def __init__(self, nodes: Iterable[tuple[int, bool]], edges: Iterable[tuple[int, int]] = ()):
        is_t: dict[int, bool] = {}
        for node_id, t in nodes:
            node_id = int(node_id)
            if node_id in is_t:
                raise DuplicateId(node_id)
            is_t[node_id] = bool(t)

        preds: dict[int, list[int]] = {v: [] for v in is_t}
        succs: dict[int, list[int]] = {v: [] for v in is_t}
        edge_list: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            e = (int(u), int(v))
            if e[0] not in is_t or e[1] not in is_t:
                raise DanglingEdge(e)
            if e in seen:
                raise DuplicateEdge(e)
            seen.add(e)
            edge_list.append(e)
            succs[e[0]].append(e[1])
            preds[e[1]].append(e[0])

        self._is_t = is_t
        self._edges = tuple(edge_list)
        self._preds = {v: tuple(sorted(p)) for v, p in preds.items()}
        self._succs = {v: tuple(sorted(s)) for v, s in succs.items()}
        self._order = self._topological_order()

    def _topological_order(self) -> tuple[int, ...]:
        # Kahn's algorithm with a min-heap so the order is id-deterministic.
        indegree = {v: len(p) for v, p in self._preds.items()}
        heap = [v for v, d in indegree.items() if d == 0]
        heapq.heapify(heap)
        order: list[int] = []
        while heap:
            u = heapq.heappop(heap)
            order.append(u)
            for w in self._succs[u]:
                indegree[w] -= 1
                if indegree[w] == 0:
                    heapq.heappush(heap, w)
        if len(order) != len(self._is_t):
            remaining = {v for v, d in indegree.items() if d > 0}
            raise CycleDetected(self._find_cycle(remaining))
        return tuple(order)

    def _find_cycle(self, remaining: set[int]) -> list[int]:
        # Every leftover node has a leftover predecessor; walking backwards
        # must revisit a node.
        start = min(remaining)
        path = [start]
        index = {start: 0}
        v = start
        while True:
            v = next(p for p in self._preds[v] if p in remaining)
            if v in index:
                cycle = path[index[v]:][::-1]
                return cycle + [cycle[0]]
            index[v] = len(path)
            path.append(v)

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._is_t))

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def topological_order(self) -> tuple[int, ...]:
        return self._order

    def is_t(self, v: int) -> bool:
        return self._is_t[v]

    def preds(self, v: int) -> tuple[int, ...]:
        return self._preds[v]

    def succs(self, v: int) -> tuple[int, ...]:
        return self._succs[v]

    def t_nodes(self) -> list[int]:
        return [v for v in self.node_ids if self._is_t[v]]

    def __len__(self) -> int:
        return len(self._is_t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CircuitDag):
            return NotImplemented
        return self._is_t == other._is_t and set(self._edges) == set(other._edges)

    def __repr__(self) -> str:
        return f"CircuitDag(nodes={len(self)}, edges={len(self._edges)}, t_count={t_count(self)})"

    def to_json_obj(self) -> dict:
        return {
            "nodes": [{"id": v, "t": self._is_t[v]} for v in self.node_ids],
            "edges": [list(e) for e in sorted(self._edges)],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "CircuitDag":
        nodes = [(n["id"], n["t"]) for n in obj["nodes"]]
        edges = [(e[0], e[1]) for e in obj.get("edges", [])]
        return cls(nodes, edges)


def validate(nodes: Iterable[tuple[int, bool]], edges: Iterable[tuple[int, int]]) -> CircuitDag:
    """Build a DAG from raw parts, raising a ``DagError`` subclass if malformed."""
    return CircuitDag(nodes, edges)


def t_count(dag: CircuitDag) -> int:
    return sum(1 for v in dag.node_ids if dag.is_t(v))


def t_depth(dag: CircuitDag) -> int:
    """Maximum number of T nodes on any directed path."""
    depth: dict[int, int] = {}
    for v in dag.topological_order:
        depth[v] = int(dag.is_t(v)) + max((depth[p] for p in dag.preds(v)), default=0)
    return max(depth.values(), default=0)


def t_height(dag: CircuitDag) -> dict[int, int]:
    """Per node, the maximum number of T nodes on a path starting at it."""
    height: dict[int, int] = {}
    for v in reversed(dag.topological_order):
        height[v] = int(dag.is_t(v)) + max((height[s] for s in dag.succs(v)), default=0)
    return height


def asap_levels(dag: CircuitDag) -> dict[int, int]:
    es: dict[int, int] = {}
    for v in dag.topological_order:
        es[v] = max((es[p] + 1 for p in dag.preds(v)), default=0)
    return es


def critical_path_makespan(dag: CircuitDag) -> int:
    """Number of levels on the longest path; 0 for the empty DAG."""
    es = asap_levels(dag)
    return max(es.values(), default=-1) + 1


def alap_levels(dag: CircuitDag, horizon: int) -> dict[int, int]:
    makespan = critical_path_makespan(dag)
    if horizon < makespan:
        raise HorizonTooSmall(horizon, makespan)
    ls: dict[int, int] = {}
    for v in reversed(dag.topological_order):
        ls[v] = min((ls[s] - 1 for s in dag.succs(v)), default=horizon - 1)
    return ls


@dataclass(frozen=True)
class SlackAnalysis:
    es: dict[int, int]
    ls: dict[int, int]
    slack: dict[int, int]
    horizon: int
    slack_ratio: float | None
    """Fraction of T nodes with positive slack; ``None`` when there are none."""

    def require_slack_ratio(self) -> float:
        if self.slack_ratio is None:
            raise NoTGates("slack ratio is undefined for a DAG without T gates")
        return self.slack_ratio

    def mean_positive_t_slack(self, dag: CircuitDag) -> float:
        positive = [self.slack[v] for v in dag.t_nodes() if self.slack[v] > 0]
        return sum(positive) / len(positive) if positive else 0.0


def slack_analysis(dag: CircuitDag) -> SlackAnalysis:
    es = asap_levels(dag)
    horizon = max(es.values(), default=-1) + 1
    ls = alap_levels(dag, horizon)
    slack = {v: ls[v] - es[v] for v in es}
    t_nodes = dag.t_nodes()
    ratio = None
    if t_nodes:
        ratio = sum(1 for v in t_nodes if slack[v] > 0) / len(t_nodes)
    return SlackAnalysis(es=es, ls=ls, slack=slack, horizon=horizon, slack_ratio=ratio)
