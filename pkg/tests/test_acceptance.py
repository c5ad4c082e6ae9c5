"""Acceptance criteria, one test each; every test records a PASS/FAIL line."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import pytest

from conftest import ACCEPTANCE, example_instance
from serialbatch import io
from serialbatch.bench import mean_ci95, percent_improvement, relative_gap
from serialbatch.heuristic import LocalSearchParams, construct, improve
from serialbatch.instgen import GenConfig, generate
from serialbatch.model import (
    Assignment,
    Instance,
    Schedule,
    ViolationKind,
    check_feasible,
    decode_blocks,
    earliest_timing,
    twct,
    windows_ok,
)
from serialbatch.oracle import brute_force
from serialbatch.report import SolveReport, Status
from serialbatch.solver import SolverParams, solve, solve_core

SWEEP_SIZE = 200
WINDOW_KINDS = {ViolationKind.BLOCK_TOO_SMALL, ViolationKind.BLOCK_TOO_LARGE}


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def sweep_configs_small(seed: int = 2024) -> list[GenConfig]:
    rng = random.Random(seed)
    out = []
    for k in range(SWEEP_SIZE):
        n = rng.randint(3, 7)
        out.append(GenConfig(n, rng.randint(1, min(3, n)), rng.randint(1, 2),
                             rng.choice([20, 50, 100]), seed=seed * 1000 + k))
    return out


def solution_bytes(inst: Instance, rep: SolveReport, solver_id: str) -> bytes:
    data = io.solution_to_dict(inst, rep, instance_ref="x", solver_id=solver_id, seed=0)
    return io.dumps(data).encode()


@dataclass
class SweepRun:
    inst: Instance
    oracle: SolveReport
    strong: SolveReport
    basic: SolveReport
    core: SolveReport


@pytest.fixture(scope="module")
def sweep() -> tuple[list[SweepRun], float]:
    runs = []
    t0 = time.perf_counter()
    for cfg in sweep_configs_small():
        inst = generate(cfg)
        runs.append(SweepRun(
            inst,
            brute_force(inst),
            solve(inst, SolverParams(propagation="strong")),
            solve(inst, SolverParams(propagation="basic")),
            solve_core(inst),
        ))
    return runs, time.perf_counter() - t0


def test_criterion_01_core_golden():
    inst = example_instance((3, 2))
    t0 = time.perf_counter()
    rep = solve_core(inst)
    elapsed = time.perf_counter() - t0
    comps = tuple(rep.incumbent.completion(inst, j) for j in (1, 2, 3, 4, 5)) if rep.incumbent else None
    ok = rep.status is Status.OPTIMAL and rep.objective == 55 and comps == (3, 7, 12, 14, 19) and elapsed < 1
    verdict(1, ok, f"core TWCT={rep.objective} completions={comps} in {elapsed:.3f}s")


def test_criterion_02_constrained_golden():
    inst = example_instance((3, 2))
    t0 = time.perf_counter()
    rep = solve(inst)
    t_solve = time.perf_counter() - t0
    t0 = time.perf_counter()
    ref = brute_force(inst)
    t_oracle = time.perf_counter() - t0
    blocks = [(b.family, set(b.job_ids)) for b in decode_blocks(inst, rep.incumbent.assignment)]
    ok = (
        rep.status is Status.OPTIMAL and ref.status is Status.OPTIMAL
        and rep.objective == ref.objective == 61
        and blocks == [(1, {1, 2, 5}), (2, {3, 4})]
        and t_solve < 1 and t_oracle < 1
    )
    verdict(2, ok, f"solve={rep.objective} oracle={ref.objective} blocks={blocks} "
                   f"in {t_solve:.3f}s/{t_oracle:.3f}s")


def test_criterion_03_oracle_equivalence(sweep):
    runs, elapsed = sweep
    mismatches = 0
    for r in runs:
        same = (r.strong.status, r.strong.objective) == (r.oracle.status, r.oracle.objective)
        if r.oracle.incumbent is not None:
            same = same and r.strong.incumbent.sequences == r.oracle.incumbent.sequences
        mismatches += not same
    statuses = {s: sum(r.oracle.status is s for r in runs) for s in Status}
    ok = len(runs) >= 200 and mismatches == 0 and elapsed < 300
    verdict(3, ok, f"{len(runs)} instances, {mismatches} mismatches, "
                   f"optimal={statuses[Status.OPTIMAL]} infeasible={statuses[Status.INFEASIBLE]}, "
                   f"sweep {elapsed:.1f}s")


def test_criterion_04_relaxation_dominance(sweep):
    runs, _ = sweep
    bad = 0
    equal = 0
    for r in runs:
        if r.strong.status is not Status.OPTIMAL:
            continue
        if r.core.objective > r.strong.objective:
            bad += 1
        core_fits = windows_ok(r.inst, r.core.incumbent.assignment)
        if r.core.objective == r.strong.objective:
            equal += 1
            # The constrained optimum is then itself a Core optimum satisfying every window.
            bad += not check_feasible(r.inst, r.strong.incumbent).feasible
        elif core_fits:
            bad += 1
    verdict(4, bad == 0, f"core <= constrained on all solved instances ({equal} ties), {bad} violations")


def test_criterion_05_propagation_soundness(sweep):
    runs, _ = sweep
    differ = sum((r.basic.status, r.basic.objective) != (r.strong.status, r.strong.objective) for r in runs)
    fewer = sum(r.strong.nodes <= r.basic.nodes for r in runs)
    share = fewer / len(runs)
    strong_nodes = sum(r.strong.nodes for r in runs)
    basic_nodes = sum(r.basic.nodes for r in runs)
    verdict(5, differ == 0,
            f"{differ} objective differences; strong<=basic nodes on {share:.0%} "
            f"(total {strong_nodes} vs {basic_nodes}, logged only)")


def _binding_kinds(inst: Instance, sched: Schedule, jid: int) -> set[ViolationKind]:
    """Which constraints break when ``jid`` starts one unit earlier (computed directly)."""
    seq = next(s for s in sched.sequences if jid in s)
    k = seq.index(jid)
    job = inst.job(jid)
    s = sched.start[jid] - 1
    kinds = set()
    if s < job.release:
        kinds.add(ViolationKind.RELEASE)
    if k == 0:
        if s < inst.setups[0][job.family - 1]:
            kinds.add(ViolationKind.INITIAL_SETUP)
    else:
        prev = inst.job(seq[k - 1])
        gap = s - (sched.start[prev.id] + prev.ptime)
        if gap < 0:
            kinds.add(ViolationKind.OVERLAP)
        elif gap < inst.setup(prev.family, job.family):
            kinds.add(ViolationKind.SETUP)
    return kinds


def _run_window_kinds(inst: Instance, seqs) -> set[ViolationKind]:
    kinds = set()
    for seq in seqs:
        run_f, run_n = None, 0
        for jid in list(seq) + [None]:
            f = inst.job(jid).family if jid is not None else None
            if f == run_f:
                run_n += 1
                continue
            if run_f is not None:
                if run_n < inst.lmin(run_f):
                    kinds.add(ViolationKind.BLOCK_TOO_SMALL)
                if run_n > inst.umax(run_f):
                    kinds.add(ViolationKind.BLOCK_TOO_LARGE)
            run_f, run_n = f, 1
    return kinds


def _feasible_schedule(inst: Instance) -> Schedule | None:
    rep = solve(inst, SolverParams(time_budget=5))
    return rep.incumbent


def test_criterion_06_feasibility_injection():
    rng = random.Random(606)
    need = 100
    done = {"a": 0, "b": 0, "c": 0}
    misses = {"a": 0, "b": 0, "c": 0}
    seed = 0
    while min(done.values()) < need and seed < 2000:
        seed += 1
        cfg = GenConfig(rng.randint(6, 12), rng.randint(2, 3), rng.randint(1, 2), rng.choice([20, 50, 100]),
                        seed=10_000 + seed)
        inst = generate(cfg)
        sched = _feasible_schedule(inst)
        if sched is None or not check_feasible(inst, sched).feasible:
            continue
        seqs = [list(s) for s in sched.sequences]

        if done["a"] < need:
            jid = rng.choice(inst.job_ids)
            expected = _binding_kinds(inst, sched, jid)
            start = dict(sched.start)
            start[jid] -= 1
            got = check_feasible(inst, Schedule(sched.assignment, start)).kinds()
            misses["a"] += not expected or got != expected
            done["a"] += 1

        if done["b"] < need:
            # Move a job of a block with l >= 2 into the middle of the next block.
            cands = []
            for m, seq in enumerate(seqs):
                blocks = [b for b in decode_blocks(inst, sched.assignment) if b.machine == m + 1]
                for x, y in zip(blocks, blocks[1:]):
                    if inst.lmin(x.family) >= 2 and y.size >= 2:
                        cands.append((m, x, y))
            if cands:
                m, x, y = rng.choice(cands)
                moved = x.job_ids[-1]
                seq = [j for j in seqs[m] if j != moved]
                seq.insert(seq.index(y.job_ids[0]) + 1, moved)
                new = [list(s) for s in seqs]
                new[m] = seq
                asg = Assignment(tuple(tuple(s) for s in new))
                expected = _run_window_kinds(inst, asg.sequences)
                got = check_feasible(inst, earliest_timing(inst, asg)).kinds()
                misses["b"] += not expected or got != expected
                done["b"] += 1

        if done["c"] < need:
            minimal = [b for b in decode_blocks(inst, sched.assignment)
                       if b.size == inst.lmin(b.family) >= 2]
            if minimal:
                b = rng.choice(minimal)
                gone = rng.choice(b.job_ids)
                asg = Assignment(tuple(tuple(j for j in s if j != gone) for s in seqs))
                start = {j: t for j, t in sched.start.items() if j != gone}
                got = check_feasible(inst, Schedule(asg, start)).kinds()
                misses["c"] += got != {ViolationKind.NOT_PARTITION, ViolationKind.BLOCK_TOO_SMALL}
                done["c"] += 1

    ok = all(v >= need for v in done.values()) and not any(misses.values())
    verdict(6, ok, f"cases a/b/c = {done['a']}/{done['b']}/{done['c']}, "
                   f"misdetections {misses['a']}/{misses['b']}/{misses['c']}")


def test_criterion_07_metric_formulas():
    gap = float(relative_gap(61, 55))
    pi = float(percent_improvement(55, 61))
    mean, lo, hi = mean_ci95([1, 1, 1, 3])
    ok = (
        abs(gap - 6 / 61) <= 1e-12
        and abs(pi - 600 / 61) <= 1e-12
        and abs(mean - 1.5) <= 1e-2 and abs(lo - 0.52) <= 1e-2 and abs(hi - 2.48) <= 1e-2
    )
    verdict(7, ok, f"gap={gap:.12f} pi={pi:.12f} ci=({mean:.4f}, {lo:.4f}, {hi:.4f})")


def test_criterion_08_desk_scale_capacity():
    optimal = 0
    slowest = 0.0
    for k in range(30):
        inst = generate(GenConfig(15, 2, 2, (20, 50, 100)[k % 3], seed=800 + k))
        t0 = time.perf_counter()
        rep = solve(inst, SolverParams(time_budget=60))
        elapsed = time.perf_counter() - t0
        slowest = max(slowest, elapsed)
        optimal += rep.status is Status.OPTIMAL and elapsed <= 60

    heur_ok = 0
    heur_runs = 3
    worst = 0.0
    gains = []
    for k in range(heur_runs):
        inst = generate(GenConfig(100, 7, 5, (20, 50, 100)[k], seed=880 + k))
        t0 = time.perf_counter()
        start = construct(inst)
        out = improve(inst, start, LocalSearchParams(time_budget=100))
        elapsed = time.perf_counter() - t0
        worst = max(worst, elapsed)
        fine = check_feasible(inst, out).feasible and twct(inst, out) <= twct(inst, start) and elapsed <= 120
        heur_ok += fine
        gains.append(1 - twct(inst, out) / twct(inst, start))
    ok = optimal >= 27 and heur_ok == heur_runs
    verdict(8, ok, f"exact optimal on {optimal}/30 (slowest {slowest:.1f}s); heuristic ok on "
                   f"{heur_ok}/{heur_runs} (slowest {worst:.1f}s, mean gain {sum(gains) / len(gains):.1%})")


def test_criterion_09_cross_model_percentages():
    line = ("criterion  9: NOT REPRODUCIBLE  cross-model percentages need the original commercial "
            "engine and instance files; replaced by criteria 1-8")
    ACCEPTANCE.append(line)
    print(line)
    pytest.skip("not reproducible at desk scale; see criteria 1-8")


def test_criterion_10_determinism():
    def produce() -> list[bytes]:
        out = []
        inst = example_instance((3, 2))
        out.append(solution_bytes(inst, solve_core(inst), "core"))
        out.append(solution_bytes(inst, solve(inst), "exact"))
        out.append(solution_bytes(inst, brute_force(inst), "oracle"))
        for cfg in sweep_configs_small():
            inst = generate(cfg)
            out.append(solution_bytes(inst, solve(inst), "exact"))
            out.append(solution_bytes(inst, brute_force(inst), "oracle"))
        return out

    first, second = produce(), produce()
    differing = sum(a != b for a, b in zip(first, second))
    verdict(10, len(first) == len(second) and differing == 0,
            f"{len(first)} solution files, {differing} differ between runs")
