import pytest

from magicflow.delivery import DeliveryParams, simulate
from magicflow.harness import (
    CSV_COLUMNS,
    NoFiniteRecords,
    NoPositiveGaps,
    SweepConfig,
    bound_validation_report,
    gap_posthoc,
    inversion_rates,
    predictor_eval,
    quota_probe,
    records_to_csv,
    run_sweep,
    slowdown_table,
    subgroup_stability,
)
from magicflow.scheduling import Policy
from magicflow.workloads import Family, FamilyParams, chain, default_sweep_families, generate


def test_record_count(default_records):
    assert len(default_records) == 5040


def test_csv_header_and_rows(default_records):
    lines = records_to_csv(default_records).splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    assert len(lines) == 5041


def test_parallel_matches_serial():
    fams = tuple(default_sweep_families(0)[:3])
    serial = run_sweep(SweepConfig(families=fams, c_grid=(1, 3), b_grid=(0, 5)))
    parallel = run_sweep(SweepConfig(families=fams, c_grid=(1, 3), b_grid=(0, 5), jobs=2))
    assert records_to_csv(serial) == records_to_csv(parallel)


def test_records_consistent_with_simulate(default_records):
    r = default_records[123]
    from magicflow.scheduling import demand_trace, schedule
    dag = generate(FamilyParams.default(r.family, r.seed))
    trace = demand_trace(dag, schedule(dag, r.policy, r.c))
    assert simulate(trace, DeliveryParams(r.c, r.b)) == r.result


def test_capacity_aware_never_stalls(default_records):
    ca = [r for r in default_records if r.policy is Policy.CAPACITY_AWARE]
    assert ca and all(r.stall_cycles == 0 and r.delta_max <= 0 for r in ca)


def test_inversion_flag_only_on_static(default_records):
    for r in default_records:
        assert (r.inversion_vs_smooth is None) == (r.policy is not Policy.STATIC)


class TestBoundReport:
    def test_default(self, default_records):
        rep = bound_validation_report(default_records)
        assert rep["violations"] == 0
        subs = rep["by_subset"]
        assert subs["dmax_le_b"]["n"] + subs["dmax_gt_b"]["n"] == rep["n_finite"]
        assert rep["n_finite"] + rep["n_infeasible"] == len(default_records)
        assert subs["dmax_gt_b"]["mean_gap"] >= subs["dmax_le_b"]["mean_gap"]

    def test_no_finite(self):
        with pytest.raises(NoFiniteRecords):
            bound_validation_report([])


def test_predictor_eval_flags_low_slices(default_records):
    low = [r for r in default_records if r.family is Family.LOW]
    rep = predictor_eval(low, resamples=200)
    assert all(not s["stall_informative"] for s in rep["slices"])
    assert all(s["stall_auc"]["delta_max"] == 0.5 for s in rep["slices"])
    assert all(s["slowdown_abs_rho"]["delta_max"] == 0.0 for s in rep["slices"])


def test_predictor_ordering(default_records):
    rep = predictor_eval(default_records, resamples=500)
    pooled = rep["pooled"]["stall_auc"]
    assert pooled["delta_max"] > pooled["slack_ratio"]
    assert pooled["delta_max"] > pooled["t_depth"]
    inc = rep["incremental"]
    assert inc["r2_gain_delta_max"] > inc["r2_gain_slack"]


def test_slowdown_table_orderings(default_records):
    t = slowdown_table(default_records)["mean_slowdown"]
    for regime in ("LowC", "MidC", "HighC"):
        assert 1.0 <= t["low"][regime] <= 1.02
    assert t["high"]["LowC"] > t["high"]["HighC"]
    assert t["high"]["LowC"] > t["medium"]["LowC"]


def test_inversion_rates(default_records):
    rates = inversion_rates(default_records)
    assert rates["high"]["rate_both_feasible"] > rates["low"]["rate_both_feasible"]
    assert rates["low"]["rate_all"] == 0.0


def test_subgroups(default_records):
    rep = subgroup_stability(default_records)
    rows = {(r["group"], r["subset"]): r for r in rep["rows"]}
    low = rows[("family", "low")]
    assert not low["stall_informative"] and low["stall_auc"]["delta_max"] == 0.5
    finite = sum(r.finite and r.slowdown is not None for r in default_records)
    assert rows[("buffer", "LowB")]["n"] + rows[("buffer", "MidHighB")]["n"] == finite
    assert rep["delta_max_best_fraction"] >= 0.8


class TestGapPosthoc:
    def test_default_signs(self, default_records):
        eff = gap_posthoc(default_records)["effect_sizes"]
        assert eff["delta_max"] > 0
        assert eff["t_static"] < 0

    @pytest.mark.xfail(strict=True, reason="capacity effect on positive gaps is ~0 with this generator; see decisions ledger")
    def test_capacity_sign(self, default_records):
        assert gap_posthoc(default_records)["effect_sizes"]["c"] < 0

    def test_backlog_behind_large_gaps(self, default_records):
        # Gaps above one cycle under Delta_max > B come with a multi-step backlog run.
        cases = [r for r in default_records if r.finite and r.gap > 1 and r.delta_max > r.b]
        assert cases
        for r in cases:
            assert any(end - start + 1 >= 2 for start, end in r.backlog_intervals)

    def test_supply_dominated_sweep(self):
        fams = tuple(f for f in default_sweep_families(0) if f.family is Family.LOW)
        recs = run_sweep(SweepConfig(families=fams, c_grid=(7,), b_grid=(15,)))
        with pytest.raises(NoPositiveGaps):
            gap_posthoc(recs)


class TestQuotaProbe:
    def test_chain_gain_zero(self):
        rep = quota_probe({"chain": chain(12)}, range(1, 8))
        row = rep["rows"][0]
        assert row["schedule_gain"] == 0.0 and row["positive_rate"] == 0.0

    def test_high_family_gain_non_negative(self):
        workloads = {f"high{i}": generate(f) for i, f in enumerate(default_sweep_families(0)) if f.family is Family.HIGH}
        rep = quota_probe(workloads, [1])
        assert all(g >= 0 for row in rep["rows"] for g in row["gains"])


@pytest.mark.parametrize("family,c_grid,b_grid", [
    (Family.HIGH, (7,), (15,)),
    (Family.MEDIUM, (1,), (0, 6)),
    (Family.LOW, (1, 2), (0,)),
])
def test_full_report_survives_degenerate_sweeps(family, c_grid, b_grid):
    from magicflow.harness import full_report

    fams = tuple(f for f in default_sweep_families(0) if f.family is family)
    rep = full_report(run_sweep(SweepConfig(families=fams, c_grid=c_grid, b_grid=b_grid)), resamples=50)
    assert rep["n_records"] == 5 * len(c_grid) * len(b_grid) * 3
