from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import example_instance, random_instance
from serialbatch.bench import (
    DomainError,
    EmptyInput,
    RunRecord,
    class_label,
    mean_ci95,
    percent_improvement,
    relative_gap,
    run_suite,
    summarize,
    summary_table,
)

positive = st.integers(1, 10**6)


def test_relative_gap_values():
    assert relative_gap(61, 55) == Fraction(6, 61)
    assert relative_gap(55, 55) == 0
    assert relative_gap(100, 93) == Fraction(7, 100)


def test_gap_uses_evaluated_model_denominator():
    assert relative_gap(61, 55) != Fraction(6, 55)


def test_percent_improvement_values():
    assert percent_improvement(55, 61) == Fraction(600, 61)
    assert percent_improvement(61, 61) == 0
    assert float(percent_improvement(61, 55)) == pytest.approx(-10.909, abs=1e-3)


def test_metric_domain():
    with pytest.raises(DomainError):
        relative_gap(0, 0)
    with pytest.raises(DomainError):
        percent_improvement(5, 0)


@given(positive, positive)
def test_gap_nonnegative(a, b):
    g = relative_gap(a, b)
    assert g >= 0 and (g == 0) == (a == b)


@given(positive, positive)
def test_pi_sign(a, b):
    pi = percent_improvement(a, b)
    assert pi == Fraction(-100 * (a - b), b)
    assert (pi > 0) == (a < b)


def test_ci_values():
    assert mean_ci95([0, 0, 0, 0]) == (0, 0, 0)
    mean, lo, hi = mean_ci95([1, 1, 1, 3])
    assert (mean, lo, hi) == pytest.approx((1.5, 0.52, 2.48), abs=1e-2)
    assert mean_ci95([7]) == (7, 7, 7)
    with pytest.raises(EmptyInput):
        mean_ci95([])


def test_bootstrap_interval_brackets_mean():
    mean, lo, hi = mean_ci95([1, 2, 3, 4, 10], method="bootstrap", seed=1)
    assert lo <= mean <= hi
    assert mean_ci95([1, 2, 3, 4, 10], method="bootstrap", seed=1) == (mean, lo, hi)


def test_record_objective_presence_enforced():
    with pytest.raises(ValueError):
        RunRecord("a", "exact", "Unknown", 5, 0.0)
    with pytest.raises(ValueError):
        RunRecord("a", "exact", "Optimal", None, 0.0)
    r = RunRecord("a", "exact", "Optimal", 5, 0.1, 3)
    assert RunRecord.from_json(r.to_json()) == r


def test_class_label():
    inst = example_instance()
    assert class_label("J15_F2_M2_S20_r3", inst) == "J15_F2_M2_S20"
    assert class_label("table", inst) == "J5_F2_M1"


def test_example_suite_all_agree():
    inst = example_instance((3, 2))
    records, rows = run_suite([("ex", inst)], ["oracle", "exact", "heuristic"], budget=10)
    assert {r.objective for r in records} == {61}
    gaps = [r for r in rows if r.metric == "gap"]
    assert len(gaps) == 3 and all(r.mean == 0 for r in gaps)


def test_unsolved_solver_has_no_gap_rows():
    records = [
        RunRecord("i1", "a", "Optimal", 10, 0.1),
        RunRecord("i1", "b", "Unknown", None, 1.0),
        RunRecord("i2", "a", "Feasible", 12, 0.1),
        RunRecord("i2", "b", "Unknown", None, 1.0),
    ]
    rows = summarize(records, {"i1": "C", "i2": "C"})
    assert {r.subject for r in rows if r.metric == "gap"} == {"a"}
    assert not [r for r in rows if r.metric == "pi"]


def test_gaps_only_over_solved_pairs():
    records = [
        RunRecord("i1", "a", "Optimal", 10, 0.1),
        RunRecord("i1", "b", "Feasible", 20, 0.1),
        RunRecord("i2", "a", "Unknown", None, 0.1),
        RunRecord("i2", "b", "Feasible", 30, 0.1),
    ]
    rows = {(r.metric, r.subject): r for r in summarize(records, {"i1": "C", "i2": "C"})}
    assert rows["gap", "b"].count == 2
    assert rows["gap", "b"].mean == pytest.approx(0.25)  # (10/20 + 0) / 2
    assert rows["pi", "a>b"].count == 1 and rows["pi", "a>b"].mean == pytest.approx(50.0)


def test_oracle_sweep_zero_gap():
    rng = random.Random(41)
    insts = [(f"t{k}", random_instance(rng, n_max=6)) for k in range(30)]
    records, rows = run_suite(insts, ["oracle", "exact"], budget=10)
    by = {}
    for r in records:
        by.setdefault(r.instance_id, set()).add((r.status, r.objective))
    assert all(len(v) == 1 for v in by.values())
    for r in rows:
        if r.metric == "gap":
            assert r.mean == r.lo == r.hi == 0


def test_resume_keeps_existing_records():
    inst = example_instance((3, 2))
    first, _ = run_suite([("ex", inst)], ["exact"], budget=10)
    fake = RunRecord("ex", "exact", "Feasible", 99, 0.0)
    again, _ = run_suite([("ex", inst)], ["exact", "oracle"], budget=10, existing=[fake])
    assert fake in again and len(again) == 2


def test_core_not_comparable():
    with pytest.raises(ValueError):
        run_suite([("ex", example_instance())], ["core"])


def test_parallel_matches_serial():
    rng = random.Random(42)
    insts = [(f"t{k}", random_instance(rng, n_max=5)) for k in range(4)]
    serial, rows_s = run_suite(insts, ["exact", "oracle"], budget=10)
    parallel, rows_p = run_suite(insts, ["exact", "oracle"], budget=10, workers=2)
    strip = lambda rs: [(r.instance_id, r.solver_id, r.status, r.objective) for r in rs]
    assert strip(serial) == strip(parallel)
    assert rows_s == rows_p


def test_summary_table_shape():
    rows = summarize([RunRecord("i", "a", "Optimal", 5, 0.0)], {"i": "C"})
    lines = summary_table(rows).splitlines()
    assert lines[0].split("\t") == ["class", "metric", "subject", "mean", "ci_lo", "ci_hi", "count"]
    assert len(lines) == 2
