"""Comparison metrics and the experiment harness."""

from __future__ import annotations

import json
import math
import random
import re
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .heuristic import ConstructionFailed, LocalSearchParams, solve_heuristic
from .model import Instance, twct
from .oracle import brute_force
from .report import SolveReport, Status
from .solver import PartialState, SolverParams, lower_bound, solve, solve_core

Z95 = 1.96
SOLVED = (Status.OPTIMAL.value, Status.FEASIBLE.value)


class DomainError(ValueError):
    pass


class EmptyInput(ValueError):
    pass


def relative_gap(twct_m: int, twct_best: int) -> Fraction:
    """|TWCT_m - TWCT_best| / |TWCT_m|; the denominator is the evaluated model's value."""
    if twct_m <= 0:
        raise DomainError(f"TWCT must be positive, got {twct_m}")
    return Fraction(abs(twct_m - twct_best), abs(twct_m))


def percent_improvement(twct_m1: int, twct_m2: int) -> Fraction:
    """100 * (TWCT_m2 - TWCT_m1) / TWCT_m2; positive when m1 is better."""
    if twct_m2 <= 0:
        raise DomainError(f"TWCT must be positive, got {twct_m2}")
    return Fraction(100 * (twct_m2 - twct_m1), twct_m2)


def mean_ci95(values: Sequence, method: str = "normal", seed: int = 0,
              resamples: int = 2000) -> tuple[float, float, float]:
    """Sample mean with a 95% interval.

    ``normal`` is mean +- 1.96 s / sqrt(n) with ddof=1; ``bootstrap`` is the
    percentile bootstrap. One value gives a degenerate interval.
    """
    xs = [float(v) for v in values]
    if not xs:
        raise EmptyInput("mean_ci95 needs at least one value")
    mean = statistics.fmean(xs)
    if len(xs) == 1:
        return mean, mean, mean
    if method == "normal":
        half = Z95 * statistics.stdev(xs) / math.sqrt(len(xs))
        return mean, mean - half, mean + half
    if method == "bootstrap":
        rng = random.Random(seed)
        means = sorted(statistics.fmean(rng.choices(xs, k=len(xs))) for _ in range(resamples))
        lo = means[int(0.025 * (resamples - 1))]
        hi = means[int(math.ceil(0.975 * (resamples - 1)))]
        return mean, min(lo, mean), max(hi, mean)
    raise ValueError(f"unknown interval method {method!r}")


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    solver_id: str
    status: str
    objective: int | None
    elapsed: float
    nodes: int | None = None

    def __post_init__(self) -> None:
        if (self.objective is not None) != (self.status in SOLVED):
            raise ValueError("objective must be present exactly when the run found a solution")

    @property
    def key(self) -> tuple[str, str]:
        return self.instance_id, self.solver_id

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        return cls(**json.loads(line))


@dataclass(frozen=True)
class SummaryRow:
    class_label: str
    metric: str
    subject: str
    mean: float
    lo: float
    hi: float
    count: int


def class_label(instance_id: str, inst: Instance) -> str:
    """J-F-M-S class from a generated file name, else J-F-M from the instance."""
    m = re.match(r"^(J\d+_F\d+_M\d+_S\d+)(?:_r\d+)?$", instance_id)
    if m:
        return m.group(1)
    return f"J{len(inst.jobs)}_F{inst.n_families}_M{inst.n_machines}"


SOLVER_IDS = ("exact", "core", "heuristic", "oracle")


def run_solver(solver_id: str, inst: Instance, budget: float, seed: int = 0,
               propagation: str = "strong") -> SolveReport:
    """Dispatch one named solver. Heuristic runs report the root lower bound as dual bound."""
    if solver_id == "exact":
        return solve(inst, SolverParams(time_budget=budget, seed=seed, propagation=propagation))
    if solver_id == "core":
        return solve_core(inst, SolverParams(time_budget=budget, seed=seed, propagation=propagation))
    if solver_id == "oracle":
        return brute_force(inst)
    if solver_id == "heuristic":
        t0 = time.perf_counter()
        bound = lower_bound(PartialState.root(inst))
        try:
            sched = solve_heuristic(inst, LocalSearchParams(time_budget=budget, seed=seed))
        except ConstructionFailed:
            return SolveReport(Status.UNKNOWN, None, None, bound, 0, time.perf_counter() - t0)
        return SolveReport(Status.FEASIBLE, sched, twct(inst, sched), bound, 0, time.perf_counter() - t0)
    raise ValueError(f"unknown solver {solver_id!r}; choose from {', '.join(SOLVER_IDS)}")


def _run_cell(args) -> RunRecord:
    instance_id, inst, solver_id, budget, seed, propagation = args
    try:
        rep = run_solver(solver_id, inst, budget, seed, propagation)
    except Exception:  # a failing cell becomes an Unknown record
        return RunRecord(instance_id, solver_id, Status.UNKNOWN.value, None, 0.0, None)
    objective = rep.objective if rep.status.value in SOLVED else None
    return RunRecord(instance_id, solver_id, rep.status.value, objective, rep.elapsed, rep.nodes)


def summarize(records: Iterable[RunRecord], labels: dict[str, str],
              ci_method: str = "normal") -> list[SummaryRow]:
    """Per-class mean gap per solver and mean pairwise PI, each with a 95% interval.

    Gaps use only solvers that solved the instance; PIs only instances both
    solvers solved.
    """
    by_inst: dict[str, dict[str, int]] = {}
    solvers: list[str] = []
    for r in records:
        if r.solver_id not in solvers:
            solvers.append(r.solver_id)
        if r.objective is not None:
            by_inst.setdefault(r.instance_id, {})[r.solver_id] = r.objective
    solvers.sort()
    gaps: dict[tuple[str, str], list] = {}
    pis: dict[tuple[str, str], list] = {}
    for iid, objs in sorted(by_inst.items()):
        cls = labels.get(iid, iid)
        best = min(objs.values())
        for s, v in objs.items():
            gaps.setdefault((cls, s), []).append(relative_gap(v, best))
        for a in solvers:
            for b in solvers:
                if a != b and a in objs and b in objs:
                    pis.setdefault((cls, f"{a}>{b}"), []).append(percent_improvement(objs[a], objs[b]))
    rows = []
    for (cls, s), vals in sorted(gaps.items()):
        rows.append(SummaryRow(cls, "gap", s, *mean_ci95(vals, ci_method), len(vals)))
    for (cls, s), vals in sorted(pis.items()):
        rows.append(SummaryRow(cls, "pi", s, *mean_ci95(vals, ci_method), len(vals)))
    return rows


def run_suite(
    instances: Sequence[tuple[str, Instance]],
    solver_ids: Sequence[str],
    budget: float = 10.0,
    seed: int = 0,
    propagation: str = "strong",
    workers: int = 1,
    existing: Iterable[RunRecord] = (),
    ci_method: str = "normal",
) -> tuple[list[RunRecord], list[SummaryRow]]:
    """Run every solver on every instance and aggregate per class.

    Cells already present in ``existing`` are kept and not re-run.
    """
    for s in solver_ids:
        if s not in SOLVER_IDS or s == "core":
            raise ValueError(f"solver {s!r} cannot take part in a comparison")
    done = {r.key: r for r in existing}
    todo = [
        (iid, inst, s, budget, seed, propagation)
        for iid, inst in instances for s in solver_ids if (iid, s) not in done
    ]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            fresh = list(pool.map(_run_cell, todo))
    else:
        fresh = [_run_cell(t) for t in todo]
    for r in fresh:
        done[r.key] = r
    records = [done[k] for k in sorted(done)]
    labels = {iid: class_label(iid, inst) for iid, inst in instances}
    return records, summarize(records, labels, ci_method)


def summary_table(rows: Sequence[SummaryRow]) -> str:
    """Tab-separated summary, one row per (class, metric, subject)."""
    lines = ["class\tmetric\tsubject\tmean\tci_lo\tci_hi\tcount"]
    for r in rows:
        lines.append(f"{r.class_label}\t{r.metric}\t{r.subject}\t{r.mean:.6g}\t{r.lo:.6g}\t{r.hi:.6g}\t{r.count}")
    return "\n".join(lines) + "\n"
