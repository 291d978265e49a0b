"""Sweep orchestration and the evaluation reports built on top of it."""
from __future__ import annotations

import csv
import io
import math
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import stats
from .dag import CircuitDag, slack_analysis, t_count, t_depth
from .delivery import DeliveryParams, ExecResult, delta_max, detect_inversion, simulate
from .scheduling import Policy, demand_trace, schedule, schedule_capacity_aware, schedule_quota
from .workloads import Family, FamilyParams, default_sweep_families, generate

CSV_COLUMNS = (
    "family", "seed", "c", "b", "policy", "t_count", "t_depth", "slack_ratio",
    "t_static", "delta_max", "lower_bound", "t_exe", "stall_cycles", "stalled",
    "slowdown", "gap", "inversion_vs_smooth",
)

CAPACITY_REGIMES = {"LowC": (1, 2), "MidC": (3, 4, 5), "HighC": (6, 7)}
LOW_B_MAX = 5
PREDICTORS = ("t_depth", "slack_ratio", "delta_max")
DEFAULT_POLICIES = (Policy.STATIC, Policy.CAPACITY_AWARE, Policy.SMOOTH)


class NoFiniteRecords(ValueError):
    pass


class NoPositiveGaps(ValueError):
    pass


def capacity_regime(c: int) -> str:
    for name, cs in CAPACITY_REGIMES.items():
        if c in cs:
            return name
    return "LowC" if c < 1 else "HighC"


def buffer_regime(b: int) -> str:
    return "LowB" if b <= LOW_B_MAX else "MidHighB"


@dataclass(frozen=True)
class SweepConfig:
    families: tuple[FamilyParams, ...] = ()
    c_grid: tuple[int, ...] = tuple(range(1, 8))
    b_grid: tuple[int, ...] = tuple(range(16))
    policies: tuple[Policy, ...] = DEFAULT_POLICIES
    master_seed: int = 0
    jobs: int = 1

    def resolved_families(self) -> tuple[FamilyParams, ...]:
        return self.families or tuple(default_sweep_families(self.master_seed))

    def to_json_obj(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "c_grid": list(self.c_grid),
            "b_grid": list(self.b_grid),
            "policies": [p.value for p in self.policies],
            "families": [
                {
                    "family": f.family.value, "layers": f.layers, "width": f.width,
                    "t_fraction": f.t_fraction, "edge_density": f.density, "seed": f.seed,
                }
                for f in self.resolved_families()
            ],
            "jobs": self.jobs,
        }


@dataclass
class SweepRecord:
    family: Family
    seed: int
    c: int
    b: int
    policy: Policy
    t_count: int
    t_depth: int
    slack_ratio: float | None
    result: ExecResult
    inversion_vs_smooth: bool | None = None

    # Execution fields, flattened for convenience.
    @property
    def t_static(self) -> int:
        return self.result.t_static

    @property
    def delta_max(self) -> int:
        return self.result.delta_max

    @property
    def lower_bound(self) -> int:
        return self.result.lower_bound

    @property
    def t_exe(self) -> float:
        return self.result.t_exe

    @property
    def finite(self) -> bool:
        return self.result.feasible

    @property
    def stall_cycles(self) -> int:
        return self.result.stall_cycles

    @property
    def stalled(self) -> bool:
        return self.result.stalled

    @property
    def slowdown(self) -> float | None:
        return self.result.slowdown

    @property
    def gap(self) -> int | None:
        return self.result.gap

    @property
    def backlog_intervals(self) -> list[tuple[int, int]]:
        return self.result.backlog_intervals

    @property
    def capacity_regime(self) -> str:
        return capacity_regime(self.c)

    @property
    def buffer_regime(self) -> str:
        return buffer_regime(self.b)

    def csv_row(self) -> list[str]:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, bool):
                return "true" if x else "false"
            if isinstance(x, float):
                return "inf" if math.isinf(x) else repr(x)
            return str(x)

        return [
            self.family.value, fmt(self.seed), fmt(self.c), fmt(self.b), self.policy.value,
            fmt(self.t_count), fmt(self.t_depth), fmt(self.slack_ratio), fmt(self.t_static),
            fmt(self.delta_max), fmt(self.lower_bound),
            "inf" if not self.finite else str(int(self.t_exe)),
            fmt(self.stall_cycles), fmt(self.stalled), fmt(self.slowdown), fmt(self.gap),
            fmt(self.inversion_vs_smooth),
        ]


def _instance_records(fp: FamilyParams, c_grid, b_grid, policies) -> list[SweepRecord]:
    dag = generate(fp)
    circuit = dict(
        family=fp.family, seed=fp.seed, t_count=t_count(dag), t_depth=t_depth(dag),
        slack_ratio=slack_analysis(dag).slack_ratio,
    )
    fixed = {p: demand_trace(dag, schedule(dag, p)) for p in policies if not p.needs_capacity}
    # The inversion label always compares against the smoothed schedule.
    smooth_trace = fixed.get(Policy.SMOOTH) or demand_trace(dag, schedule(dag, Policy.SMOOTH))
    records = []
    for c in c_grid:
        traces = {p: fixed[p] if p in fixed else demand_trace(dag, schedule(dag, p, c)) for p in policies}
        for b in b_grid:
            params = DeliveryParams(c, b)
            smooth_res = simulate(smooth_trace, params)
            for p in policies:
                res = smooth_res if p is Policy.SMOOTH else simulate(traces[p], params)
                inversion = detect_inversion(res, smooth_res) if p is Policy.STATIC else None
                records.append(SweepRecord(c=c, b=b, policy=p, result=res, inversion_vs_smooth=inversion, **circuit))
    return records


def run_sweep(cfg: SweepConfig | None = None) -> list[SweepRecord]:
    cfg = cfg or SweepConfig()
    families = cfg.resolved_families()
    args = [(fp, tuple(cfg.c_grid), tuple(cfg.b_grid), tuple(cfg.policies)) for fp in families]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_instance_records, *zip(*args)))
    else:
        chunks = [_instance_records(*a) for a in args]
    return [r for chunk in chunks for r in chunk]


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


# ---------------------------------------------------------------- reports

def _finite(records: Iterable[SweepRecord]) -> list[SweepRecord]:
    return [r for r in records if r.finite]


def _safe_pearson(x, y) -> float | None:
    try:
        return stats.pearson(x, y)
    except (stats.DegenerateVariance, ValueError):
        return None


def _safe_spearman(x, y) -> float | None:
    try:
        return stats.spearman(x, y)
    except (stats.DegenerateVariance, ValueError):
        return None


def _gap_summary(records: Sequence[SweepRecord]) -> dict:
    if not records:
        return {"n": 0, "mean_gap": None, "median_gap": None, "frac_within_1": None, "pearson_pred_obs": None}
    gaps = [r.gap for r in records]
    return {
        "n": len(records),
        "mean_gap": statistics.fmean(gaps),
        "median_gap": statistics.median(gaps),
        "frac_within_1": sum(g <= 1 for g in gaps) / len(gaps),
        "pearson_pred_obs": _safe_pearson([r.lower_bound for r in records], [r.t_exe for r in records]),
    }


def bound_validation_report(records: Sequence[SweepRecord]) -> dict:
    finite = _finite(records)
    if not finite:
        raise NoFiniteRecords("no finite records to validate")
    overall = _gap_summary(finite)
    return {
        "violations": sum(1 for r in finite if r.t_exe < r.lower_bound),
        "n_finite": len(finite),
        "n_infeasible": sum(1 for r in records if not r.finite),
        "pearson_pred_obs": overall["pearson_pred_obs"],
        "median_gap": overall["median_gap"],
        "mean_gap": overall["mean_gap"],
        "frac_within_1": overall["frac_within_1"],
        "by_subset": {
            "dmax_le_b": _gap_summary([r for r in finite if r.delta_max <= r.b]),
            "dmax_gt_b": _gap_summary([r for r in finite if r.delta_max > r.b]),
        },
    }


def _risk_score(r: SweepRecord, predictor: str) -> float:
    # Oriented so larger means more risk; shallower circuits at fixed
    # T-count concentrate demand, so T-depth enters negated.
    if predictor == "t_depth":
        return -float(r.t_depth)
    if predictor == "slack_ratio":
        return float(r.slack_ratio or 0.0)
    return float(r.delta_max)


def _auc_or_flag(records: Sequence[SweepRecord], label) -> tuple[dict[str, float], bool]:
    labels = [bool(label(r)) for r in records]
    if not records or all(labels) or not any(labels):
        return {p: 0.5 for p in PREDICTORS}, False
    return {p: stats.auc([_risk_score(r, p) for r in records], labels) for p in PREDICTORS}, True


def _abs_spearman_or_flag(records: Sequence[SweepRecord]) -> tuple[dict[str, float], bool]:
    target = [r.slowdown for r in records]
    if len(records) < 2 or len(set(target)) < 2:
        return {p: 0.0 for p in PREDICTORS}, False
    out = {}
    for p in PREDICTORS:
        try:
            out[p] = abs(stats.spearman([_risk_score(r, p) for r in records], target))
        except stats.DegenerateVariance:
            out[p] = 0.0
    return out, True


def _is_stall_candidate(r: SweepRecord) -> bool:
    return r.finite and r.slowdown is not None


def predictor_eval(records: Sequence[SweepRecord], resamples: int = 10_000, seed: int = 0) -> dict:
    """Stall, slowdown and inversion tasks per (C, B) slice and pooled.

    Stall and slowdown use every finite schedule instance; inversion uses the
    static-policy rows. Degenerate slices are flagged and reported at the
    non-informative values (AUC 0.5, correlation 0.0).
    """
    finite = [r for r in records if _is_stall_candidate(r)]
    static_rows = [r for r in records if r.policy is Policy.STATIC]

    by_slice: dict[tuple[int, int], list[SweepRecord]] = defaultdict(list)
    by_slice_static: dict[tuple[int, int], list[SweepRecord]] = defaultdict(list)
    for r in finite:
        by_slice[(r.c, r.b)].append(r)
    for r in static_rows:
        by_slice_static[(r.c, r.b)].append(r)

    slices = []
    for key in sorted(set(by_slice) | set(by_slice_static)):
        stall, stall_ok = _auc_or_flag(by_slice.get(key, []), lambda r: r.stalled)
        slow, slow_ok = _abs_spearman_or_flag(by_slice.get(key, []))
        inv, inv_ok = _auc_or_flag(by_slice_static.get(key, []), lambda r: r.inversion_vs_smooth)
        slices.append({
            "c": key[0], "b": key[1],
            "stall_auc": stall, "stall_informative": stall_ok,
            "slowdown_abs_rho": slow, "slowdown_informative": slow_ok,
            "inversion_auc": inv, "inversion_informative": inv_ok,
        })

    pooled_stall, _ = _auc_or_flag(finite, lambda r: r.stalled)
    pooled_slow, _ = _abs_spearman_or_flag(finite)
    pooled_inv, _ = _auc_or_flag(static_rows, lambda r: r.inversion_vs_smooth)

    def slack_vs_depth(task, metric, flag):
        diffs = [s[metric]["slack_ratio"] - s[metric]["t_depth"] for s in slices if s[flag]]
        if not diffs:
            return None
        ci = stats.paired_bootstrap_mean_ci(diffs, resamples, seed)
        return {"task": task, "n_slices": len(diffs), "mean": ci.mean, "lo95": ci.lo95, "hi95": ci.hi95}

    return {
        "slices": slices,
        "pooled": {"stall_auc": pooled_stall, "slowdown_abs_rho": pooled_slow, "inversion_auc": pooled_inv},
        "slack_minus_tdepth": [
            slack_vs_depth("stall", "stall_auc", "stall_informative"),
            slack_vs_depth("slowdown", "slowdown_abs_rho", "slowdown_informative"),
            slack_vs_depth("inversion", "inversion_auc", "inversion_informative"),
        ],
        "incremental": incremental_gain(records),
    }


def incremental_gain(records: Sequence[SweepRecord]) -> dict:
    """R^2 for slowdown and in-sample AUC for stall as predictors are added.

    Fitted on finite static-policy rows; the stall model is a linear
    probability fit whose fitted values are ranked for the AUC. Singular
    designs, constant targets or one-class labels give None rather than an error.
    """
    rows = [r for r in records if r.policy is Policy.STATIC and _is_stall_candidate(r)]
    steps = [PREDICTORS[:1], PREDICTORS[:2], PREDICTORS[:3]]
    target = [r.slowdown for r in rows]
    labels = [r.stalled for r in rows]
    out = {"n": len(rows), "feature_sets": [list(s) for s in steps], "r2": [], "stall_auc": []}
    for feats in steps:
        x = [[_risk_score(r, p) for p in feats] for r in rows]
        try:
            out["r2"].append(stats.ols_r2(x, target))
        except (stats.SingularDesign, stats.DegenerateVariance):
            out["r2"].append(None)
        try:
            out["stall_auc"].append(stats.auc(stats.ols_fitted(x, labels), labels))
        except (stats.SingularDesign, stats.OneClassOnly, stats.DegenerateVariance):
            out["stall_auc"].append(None)

    def gain(key, i):
        a, b = out[key][i - 1], out[key][i]
        return None if a is None or b is None else b - a

    out["r2_gain_slack"] = gain("r2", 1)
    out["r2_gain_delta_max"] = gain("r2", 2)
    out["auc_gain_slack"] = gain("stall_auc", 1)
    out["auc_gain_delta_max"] = gain("stall_auc", 2)
    return out


def slowdown_table(records: Sequence[SweepRecord]) -> dict:
    """Mean static-policy slowdown per family and capacity regime (finite rows only)."""
    table: dict[str, dict[str, float | None]] = {}
    infeasible: dict[str, dict[str, int]] = {}
    for fam in Family:
        table[fam.value] = {}
        infeasible[fam.value] = {}
        for regime in CAPACITY_REGIMES:
            rows = [r for r in records if r.policy is Policy.STATIC and r.family is fam and r.capacity_regime == regime]
            vals = [r.slowdown for r in rows if r.finite and r.slowdown is not None]
            table[fam.value][regime] = statistics.fmean(vals) if vals else None
            infeasible[fam.value][regime] = sum(1 for r in rows if not r.finite)
    return {"mean_slowdown": table, "infeasible_counts": infeasible}


def inversion_rates(records: Sequence[SweepRecord]) -> dict:
    """Static-vs-smooth inversion rates per family, over all (C, B) and over both-feasible pairs."""
    smooth = {(r.family, r.seed, r.c, r.b): r for r in records if r.policy is Policy.SMOOTH}
    out = {}
    for fam in Family:
        rows = [r for r in records if r.policy is Policy.STATIC and r.family is fam]
        both = [r for r in rows if r.finite and smooth[(r.family, r.seed, r.c, r.b)].finite]
        out[fam.value] = {
            "n_all": len(rows),
            "rate_all": sum(r.inversion_vs_smooth for r in rows) / len(rows) if rows else None,
            "n_both_feasible": len(both),
            "rate_both_feasible": sum(r.inversion_vs_smooth for r in both) / len(both) if both else None,
        }
    return out


def subgroup_stability(records: Sequence[SweepRecord]) -> dict:
    finite = [r for r in records if _is_stall_candidate(r)]
    subsets = (
        [("family", f.value, lambda r, f=f: r.family is f) for f in Family]
        + [("capacity", name, lambda r, name=name: r.capacity_regime == name) for name in CAPACITY_REGIMES]
        + [("buffer", name, lambda r, name=name: r.buffer_regime == name) for name in ("LowB", "MidHighB")]
    )
    rows = []
    for group, name, member in subsets:
        sub = [r for r in finite if member(r)]
        stall, stall_ok = _auc_or_flag(sub, lambda r: r.stalled)
        slow, slow_ok = _abs_spearman_or_flag(sub)
        rows.append({
            "group": group, "subset": name, "n": len(sub),
            "stall_auc": stall, "stall_informative": stall_ok,
            "slowdown_abs_rho": slow, "slowdown_informative": slow_ok,
        })
    return {"rows": rows, "delta_max_best_fraction": _delta_max_best_fraction(rows)}


def _delta_max_best_fraction(rows: Sequence[Mapping]) -> float | None:
    """Fraction of informative (subset, task) cells where Delta_max ties or beats both structural predictors."""
    wins = total = 0
    for row in rows:
        for metric, flag in (("stall_auc", "stall_informative"), ("slowdown_abs_rho", "slowdown_informative")):
            if not row[flag]:
                continue
            total += 1
            vals = row[metric]
            wins += vals["delta_max"] >= max(vals["t_depth"], vals["slack_ratio"])
    return wins / total if total else None


def gap_posthoc(records: Sequence[SweepRecord]) -> dict:
    finite = _finite(records)
    pos = [r for r in finite if r.gap > 0]
    zero = [r for r in finite if r.gap == 0]
    if not pos:
        raise NoPositiveGaps("no finite record has a positive gap")
    if not zero:
        raise NoPositiveGaps("no zero-gap records to contrast against")
    effects = {
        name: stats.mann_whitney_rank_biserial([getattr(r, name) for r in pos], [getattr(r, name) for r in zero])
        for name in ("delta_max", "c", "t_static")
    }
    return {
        "n_positive_gap": len(pos),
        "n_zero_gap": len(zero),
        "effect_sizes": effects,
        "signs_as_expected": effects["delta_max"] > 0 and effects["c"] < 0 and effects["t_static"] < 0,
        "positive_gap_cases": [
            {
                "family": r.family.value, "seed": r.seed, "c": r.c, "b": r.b, "policy": r.policy.value,
                "gap": r.gap, "backlog_intervals": [list(iv) for iv in r.backlog_intervals],
            }
            for r in pos
        ],
    }


def quota_probe(workloads: Mapping[str, CircuitDag], c_grid: Sequence[int]) -> dict:
    """Compare capacity-aware and quota schedule lengths per workload."""
    rows = []
    for name, dag in workloads.items():
        ca_lens, gains = [], []
        for c in c_grid:
            ca = demand_trace(dag, schedule_capacity_aware(dag, c))
            qu = demand_trace(dag, schedule_quota(dag, c))
            for trace in (ca, qu):
                res = simulate(trace, DeliveryParams(c, 0))
                if delta_max(trace, c) > 0 or res.stall_cycles or res.t_exe != len(trace):
                    raise AssertionError(f"quota-respecting schedule stalled on {name} at c={c}")
            ca_lens.append(len(ca))
            gains.append(len(ca) - len(qu))
        rows.append({
            "workload": name,
            "ca_length": statistics.fmean(ca_lens),
            "schedule_gain": statistics.fmean(gains),
            "positive_rate": sum(g > 0 for g in gains) / len(gains),
            "gains": gains,
        })
    return {"c_grid": list(c_grid), "rows": rows}


def full_report(records: Sequence[SweepRecord], resamples: int = 10_000, seed: int = 0) -> dict:
    report = {
        "n_records": len(records),
        "bound": bound_validation_report(records),
        "slowdown_table": slowdown_table(records),
        "inversions": inversion_rates(records),
        "predictors": predictor_eval(records, resamples, seed),
        "subgroups": subgroup_stability(records),
    }
    try:
        gp = gap_posthoc(records)
        gp.pop("positive_gap_cases")
        report["gap_posthoc"] = gp
    except NoPositiveGaps as exc:
        report["gap_posthoc"] = {"error": str(exc)}
    return report


# ------------------------------------------------------------ sensitivity

def stochastic_sensitivity(
    families: Sequence[FamilyParams] | None = None,
    c_grid: Sequence[int] = (1, 2, 3),
    b_grid: Sequence[int] = (0, 4, 8, 12),
    p_acc: float = 0.95,
    replications: int = 20,
    seed: int = 0,
    policy: Policy = Policy.STATIC,
) -> dict:
    """Nominal vs expected-service delivery pressure as predictors of mean
    slowdown under thinned supply.

    Rows whose replications are all infeasible are dropped; replication
    seeds are ``seed + row_index * replications + i``.
    """
    from .sensitivity import StochasticParams, delta_max_expected, simulate_stochastic

    if families is None:
        families = [f for f in default_sweep_families(0) if f.family is Family.MEDIUM]
    rows = []
    for fp in families:
        dag = generate(fp)
        for c in c_grid:
            trace = demand_trace(dag, schedule(dag, policy, c))
            for b in b_grid:
                params = DeliveryParams(c, b)
                sp = StochasticParams(p_acc, seed + len(rows) * replications, replications)
                reps = simulate_stochastic(trace, params, sp)
                slow = [r.slowdown for r in reps if r.feasible and r.slowdown is not None]
                if not slow:
                    continue
                rows.append({
                    "family": fp.family.value, "seed": fp.seed, "c": c, "b": b,
                    "delta_max": delta_max(trace, c),
                    "delta_max_expected": delta_max_expected(trace, c, p_acc),
                    "mean_slowdown": statistics.fmean(slow),
                    "deterministic_slowdown": simulate(trace, params).slowdown,
                })
    target = [r["mean_slowdown"] for r in rows]

    def rho(key):
        try:
            return stats.spearman([r[key] for r in rows], target)
        except (stats.DegenerateVariance, ValueError):
            return None

    return {
        "p_acc": p_acc,
        "replications": replications,
        "n_rows": len(rows),
        "spearman_nominal": rho("delta_max"),
        "spearman_expected": rho("delta_max_expected"),
        "rows": rows,
    }


def routing_proxy_report(records: Sequence[SweepRecord], kappas: Sequence[float] = (0.0, 0.1, 0.25), policy: Policy = Policy.STATIC) -> dict:
    """Effective-capacity deficits per kappa on the sweep's distinct (instance, C) traces.

    Reports, per kappa, Spearman against the kappa=0 deficit and against
    mean finite slowdown over the buffer grid.
    """
    from .sensitivity import effective_capacity_deficit

    cache: dict[tuple, list[int]] = {}
    slow: dict[tuple, list[float]] = defaultdict(list)
    for r in records:
        if r.policy is not policy:
            continue
        key = (r.family, r.seed, r.c)
        if key not in cache:
            fp = FamilyParams.default(r.family, r.seed)
            dag = generate(fp)
            cache[key] = demand_trace(dag, schedule(dag, policy, r.c))
        if r.finite and r.slowdown is not None:
            slow[key].append(r.slowdown)
    keys = [k for k in cache if slow[k]]
    base = [effective_capacity_deficit(cache[k], k[2], 0.0) for k in keys]
    mean_slow = [statistics.fmean(slow[k]) for k in keys]
    out = {"n_traces": len(keys), "by_kappa": []}
    for kappa in kappas:
        deficits = [effective_capacity_deficit(cache[k], k[2], kappa) for k in keys]
        out["by_kappa"].append({
            "kappa": kappa,
            "spearman_vs_nominal": _safe_spearman(base, deficits),
            "spearman_vs_slowdown": _safe_spearman(deficits, mean_slow),
        })
    return out
