"""Exhaustive solver for tiny instances, used as ground truth in tests."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from .model import Assignment, Instance, decision_key, decode_blocks, earliest_timing, twct
from .report import SolveReport, Status


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_jobs: int = 8
    max_states: int = 5_000_000

    def __post_init__(self) -> None:
        if self.max_jobs < 1:
            raise ValueError("max_jobs must be >= 1")


def state_count(n_jobs: int, n_machines: int) -> int:
    """Number of (assignment, permutation) pairs: n! * C(n + M - 1, M - 1)."""
    return math.factorial(n_jobs) * math.comb(n_jobs + n_machines - 1, n_machines - 1)


def _sequence_cost(inst: Instance, seq: tuple[int, ...]) -> int | None:
    """TWCT of one machine sequence, or None when a run leaves its window."""
    single = Assignment((seq,))
    for b in _blocks_of(inst, single):
        if not inst.lmin(b.family) <= b.size <= inst.umax(b.family):
            return None
    sched = _time_one(inst, seq)
    return sum(inst.job(j).weight * (sched[j] + inst.job(j).ptime) for j in seq)


def _blocks_of(inst: Instance, asg: Assignment):
    # decode_blocks checks the partition against the whole instance, so give
    # it a view restricted to the jobs in this one sequence.
    sub = Instance(
        tuple(inst.job(j) for s in asg.sequences for j in s),
        inst.n_families, 1, inst.setups, inst.min_size, inst.max_size,
    )
    return decode_blocks(sub, asg)


def _time_one(inst: Instance, seq: tuple[int, ...]) -> dict[int, int]:
    sub = Instance(
        tuple(inst.job(j) for j in seq),
        inst.n_families, 1, inst.setups, inst.min_size, inst.max_size,
    )
    return dict(earliest_timing(sub, Assignment((seq,))).start)


def brute_force(inst: Instance, lim: OracleLimits | None = None) -> SolveReport:
    """Enumerate every assignment and every per-machine order.

    Machines are enumerated in id order, jobs in id order and permutations
    lexicographically. Among optimal schedules the one with the smallest
    :func:`~serialbatch.model.decision_key` is returned.
    """
    lim = lim or OracleLimits()
    t0 = time.perf_counter()
    n, M = len(inst.jobs), inst.n_machines
    if n > lim.max_jobs:
        raise TooLarge(f"{n} jobs exceeds oracle limit of {lim.max_jobs}")
    total = state_count(n, M)
    if total > lim.max_states:
        raise TooLarge(f"{total} states exceeds oracle limit of {lim.max_states}")

    ids = inst.job_ids
    cache: dict[tuple[int, ...], int | None] = {}

    def cost(seq: tuple[int, ...]) -> int | None:
        if seq not in cache:
            cache[seq] = _sequence_cost(inst, seq) if seq else 0
        return cache[seq]

    best: tuple[int, tuple[int, ...]] | None = None
    best_asg: Assignment | None = None
    visited = 0
    for machines in itertools.product(range(M), repeat=n):
        groups = [[j for j, m in zip(ids, machines) if m == k] for k in range(M)]
        per_machine = []
        for g in groups:
            options = []
            for perm in itertools.permutations(g):
                c = cost(perm)
                if c is not None:
                    options.append((perm, c))
            per_machine.append(options)
        visited += math.prod(math.factorial(len(g)) for g in groups)
        for combo in itertools.product(*per_machine):
            value = sum(c for _, c in combo)
            if best is not None and value > best[0]:
                continue
            asg = Assignment(tuple(p for p, _ in combo))
            cand = (value, decision_key(inst, asg))
            if best is None or cand < best:
                best, best_asg = cand, asg

    elapsed = time.perf_counter() - t0
    if best_asg is None:
        return SolveReport(Status.INFEASIBLE, None, None, 0, visited, elapsed)
    sched = earliest_timing(inst, best_asg)
    assert twct(inst, sched) == best[0]
    return SolveReport(Status.OPTIMAL, sched, best[0], best[0], visited, elapsed)
