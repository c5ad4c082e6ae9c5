"""Constructive heuristic and tabu local search for large instances."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Iterator

from .model import Assignment, Instance, Schedule, check_feasible, earliest_timing, twct


class ConstructionFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalSearchParams:
    time_budget: float = 30.0
    seed: int = 0
    tabu_tenure: int = 10
    max_no_improve: int = 50
    max_iters: int = 5000
    check_moves: bool = False

    def __post_init__(self) -> None:
        if not self.time_budget > 0 or self.max_no_improve < 1 or self.max_iters < 1:
            raise ValueError("budgets must be positive")
        if self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be >= 0")


def run_sizes(n: int, lo: int, hi: int) -> list[int]:
    """Split ``n`` jobs into runs with sizes in [lo, hi].

    Uses ``n // lo`` runs of size ``lo`` and spreads the remainder round-robin
    up to ``hi``.
    """
    k = n // lo
    if n == 0:
        return []
    if k == 0 or k * hi < n:
        raise ConstructionFailed(f"{n} jobs cannot be split into runs of size {lo}..{hi}")
    sizes = [lo] * k
    extra = n - k * lo
    i = 0
    while extra:
        if sizes[i] < hi:
            sizes[i] += 1
            extra -= 1
        i = (i + 1) % k
    return sizes


class _Machine:
    __slots__ = ("seq", "end", "family", "open_len")

    def __init__(self) -> None:
        self.seq: list[int] = []
        self.end = 0
        self.family = 0
        self.open_len = 0


def _append_end(inst: Instance, mach: _Machine, run: list[int]) -> int:
    t, prev = mach.end, mach.family
    for jid in run:
        job = inst.job(jid)
        t = max(job.release, t + inst.setup(prev, job.family)) + job.ptime
        prev = job.family
    return t


def construct(inst: Instance, seed: int = 0) -> Schedule:
    """Build a feasible schedule from whole runs, or raise :class:`ConstructionFailed`."""
    rng = random.Random(seed)
    runs: list[tuple[int, list[int]]] = []
    by_family: dict[int, list] = {}
    for j in inst.jobs:
        by_family.setdefault(j.family, []).append(j)
    for f in sorted(by_family):
        jobs = sorted(by_family[f], key=lambda j: (j.release, j.id))
        pos = 0
        for size in run_sizes(len(jobs), inst.lmin(f), inst.umax(f)):
            runs.append((f, [j.id for j in jobs[pos:pos + size]]))
            pos += size
    order = list(range(len(runs)))
    rng.shuffle(order)
    rank = {r: k for k, r in enumerate(order)}

    machines = [_Machine() for _ in range(inst.n_machines)]
    pending = set(range(len(runs)))
    while pending:
        best = None
        for r in pending:
            f, jobs = runs[r]
            for m, mach in enumerate(machines):
                if mach.family == f and mach.open_len + len(jobs) > inst.umax(f):
                    continue
                end = _append_end(inst, mach, jobs)
                key = (end, rank[r], m)
                if best is None or key < best[0]:
                    best = (key, r, m)
        if best is None:
            r = min(pending, key=rank.__getitem__)
            _insert_inside(inst, machines, runs[r])
            pending.discard(r)
            continue
        _, r, m = best
        f, jobs = runs[r]
        mach = machines[m]
        mach.end = _append_end(inst, mach, jobs)
        mach.open_len = mach.open_len + len(jobs) if mach.family == f else len(jobs)
        mach.family = f
        mach.seq.extend(jobs)
        pending.discard(r)

    sched = earliest_timing(inst, Assignment(tuple(tuple(m.seq) for m in machines)))
    if not check_feasible(inst, sched).feasible:
        raise ConstructionFailed("constructed schedule violates a size window")
    return sched


def _insert_inside(inst: Instance, machines: list[_Machine], run: tuple[int, list[int]]) -> None:
    """Place a run strictly between two blocks of other families, cheapest first."""
    f, jobs = run
    best = None
    for m, mach in enumerate(machines):
        seq = mach.seq
        for cut in range(len(seq) + 1):
            before = inst.job(seq[cut - 1]).family if cut > 0 else 0
            after = inst.job(seq[cut]).family if cut < len(seq) else 0
            if before == f or after == f:
                continue
            if 0 < cut < len(seq) and before == after:
                continue
            cand = seq[:cut] + jobs + seq[cut:]
            cost = _seq_cost(inst, tuple(cand))
            key = (cost - _seq_cost(inst, tuple(seq)), m, cut)
            if best is None or key < best[0]:
                best = (key, m, cand)
    if best is None:
        raise ConstructionFailed(f"no position for a run of family {f}")
    _, m, cand = best
    mach = machines[m]
    mach.seq = cand
    sched_end = 0
    prev = 0
    for jid in cand:
        job = inst.job(jid)
        sched_end = max(job.release, sched_end + inst.setup(prev, job.family)) + job.ptime
        prev = job.family
    mach.end = sched_end
    mach.family = prev
    tail = 0
    for jid in reversed(cand):
        if inst.job(jid).family != prev:
            break
        tail += 1
    mach.open_len = tail


def _seq_cost(inst: Instance, seq: tuple[int, ...]) -> int:
    t, prev, total = 0, 0, 0
    for jid in seq:
        job = inst.job(jid)
        t = max(job.release, t + inst.setup(prev, job.family)) + job.ptime
        total += job.weight * t
        prev = job.family
    return total


def _to_blocks(inst: Instance, seq) -> list[list[int]]:
    blocks: list[list[int]] = []
    prev = None
    for jid in seq:
        f = inst.job(jid).family
        if blocks and f == prev:
            blocks[-1].append(jid)
        else:
            blocks.append([jid])
        prev = f
    return blocks


def _flat(blocks) -> tuple[int, ...]:
    return tuple(j for b in blocks for j in b)


class _Evaluator:
    def __init__(self, inst: Instance):
        self.inst = inst
        self.cost_cache: dict[tuple[int, ...], int | None] = {}

    def cost(self, seq: tuple[int, ...]) -> int | None:
        """TWCT of one machine, or None if some run leaves its window."""
        got = self.cost_cache.get(seq, False)
        if got is not False:
            return got
        inst = self.inst
        value: int | None = _seq_cost(inst, seq)
        run, prev = 0, None
        for jid in seq + (None,):
            f = inst.job(jid).family if jid is not None else None
            if f == prev:
                run += 1
                continue
            if prev is not None and not inst.lmin(prev) <= run <= inst.umax(prev):
                value = None
                break
            run, prev = 1, f
        if len(self.cost_cache) > 500_000:
            self.cost_cache.clear()
        self.cost_cache[seq] = value
        return value


def _moves(inst: Instance, blocks: list[list[list[int]]]) -> Iterator[tuple]:
    """Yield (attribute, {machine: new block list}) for every neighbour."""
    M = len(blocks)
    fam = lambda b: inst.job(b[0]).family  # noqa: E731
    # (a) swap two jobs inside a block
    for m in range(M):
        for bi, b in enumerate(blocks[m]):
            for x in range(len(b)):
                for y in range(x + 1, len(b)):
                    nb = b[:]
                    nb[x], nb[y] = nb[y], nb[x]
                    new = blocks[m][:bi] + [nb] + blocks[m][bi + 1:]
                    yield ("swap", frozenset((b[x], b[y]))), {m: new}
    # (b) move one job into another block of its family
    locs = [(m, bi) for m in range(M) for bi in range(len(blocks[m]))]
    for (m1, b1) in locs:
        src = blocks[m1][b1]
        f = fam(src)
        if len(src) - 1 < inst.lmin(f):
            continue
        for (m2, b2) in locs:
            if (m1, b1) == (m2, b2):
                continue
            dst = blocks[m2][b2]
            if fam(dst) != f or len(dst) + 1 > inst.umax(f):
                continue
            for x, jid in enumerate(src):
                rest = src[:x] + src[x + 1:]
                for pos in range(len(dst) + 1):
                    nd = dst[:pos] + [jid] + dst[pos:]
                    if m1 == m2:
                        nl = blocks[m1][:]
                        nl[b1], nl[b2] = rest, nd
                        yield ("job", jid, m2), {m1: nl}
                    else:
                        l1 = blocks[m1][:b1] + [rest] + blocks[m1][b1 + 1:]
                        l2 = blocks[m2][:b2] + [nd] + blocks[m2][b2 + 1:]
                        yield ("job", jid, m2), {m1: l1, m2: l2}
    # (c) relocate a whole block
    for (m1, b1) in locs:
        blk = blocks[m1][b1]
        without = blocks[m1][:b1] + blocks[m1][b1 + 1:]
        for m2 in range(M):
            base = without if m2 == m1 else blocks[m2]
            for pos in range(len(base) + 1):
                if m2 == m1 and pos == b1:
                    continue
                nl = base[:pos] + [blk] + base[pos:]
                if m2 == m1:
                    yield ("job", blk[0], m2), {m1: nl}
                else:
                    yield ("job", blk[0], m2), {m1: without, m2: nl}
    # (d) swap two blocks
    for k, (m1, b1) in enumerate(locs):
        for (m2, b2) in locs[k + 1:]:
            x, y = blocks[m1][b1], blocks[m2][b2]
            if m1 == m2:
                nl = blocks[m1][:]
                nl[b1], nl[b2] = y, x
                yield ("bswap", frozenset((x[0], y[0]))), {m1: nl}
            else:
                l1 = blocks[m1][:b1] + [y] + blocks[m1][b1 + 1:]
                l2 = blocks[m2][:b2] + [x] + blocks[m2][b2 + 1:]
                yield ("bswap", frozenset((x[0], y[0]))), {m1: l1, m2: l2}
    # (e) merge two blocks of one family
    for (m1, b1) in locs:
        for (m2, b2) in locs:
            if (m1, b1) == (m2, b2):
                continue
            x, y = blocks[m1][b1], blocks[m2][b2]
            f = fam(x)
            if fam(y) != f or len(x) + len(y) > inst.umax(f):
                continue
            merged = x + y
            if m1 == m2:
                nl = blocks[m1][:]
                nl[b1] = merged
                del nl[b2]
                yield ("job", y[0], m1), {m1: nl}
            else:
                l1 = blocks[m1][:b1] + [merged] + blocks[m1][b1 + 1:]
                l2 = blocks[m2][:b2] + blocks[m2][b2 + 1:]
                yield ("job", y[0], m1), {m1: l1, m2: l2}


def improve(inst: Instance, start: Schedule, params: LocalSearchParams | None = None) -> Schedule:
    """Tabu search over block-preserving moves; never returns worse than ``start``."""
    params = params or LocalSearchParams()
    if not check_feasible(inst, start).feasible:
        raise ValueError("start schedule is infeasible")
    t0 = time.perf_counter()
    ev = _Evaluator(inst)
    seqs = [tuple(s) for s in start.sequences]
    costs = [ev.cost(s) for s in seqs]
    current = sum(costs)
    best_val, best_seqs = current, list(seqs)
    blocks = [_to_blocks(inst, s) for s in seqs]
    tabu: dict = {}
    stall = 0
    for it in range(params.max_iters):
        if stall >= params.max_no_improve or time.perf_counter() - t0 > params.time_budget:
            break
        chosen = None
        for attr, change in _moves(inst, blocks):
            delta = 0
            new_seqs = {}
            ok = True
            for m, bl in change.items():
                s = _flat(bl)
                c = ev.cost(s)
                if c is None:
                    ok = False
                    break
                new_seqs[m] = (s, c)
                delta += c - costs[m]
            if not ok:
                continue
            value = current + delta
            if tabu.get(attr, -1) >= it and value >= best_val:
                continue
            if chosen is None or value < chosen[0]:
                chosen = (value, attr, new_seqs)
        if chosen is None:
            break
        value, attr, new_seqs = chosen
        if attr[0] == "job":
            # Forbid sending the job back to the machine it just left.
            src = next(m for m, s in enumerate(seqs) if attr[1] in s)
            tabu[("job", attr[1], src)] = it + params.tabu_tenure
        else:
            tabu[attr] = it + params.tabu_tenure
        for m, (s, c) in new_seqs.items():
            seqs[m], costs[m] = s, c
            blocks[m] = _to_blocks(inst, s)
        current = value
        if params.check_moves:
            sched = earliest_timing(inst, Assignment(tuple(seqs)))
            assert check_feasible(inst, sched).feasible, attr
            assert twct(inst, sched) == current
        if current < best_val:
            best_val, best_seqs = current, list(seqs)
            stall = 0
        else:
            stall += 1
    result = earliest_timing(inst, Assignment(tuple(best_seqs)))
    if twct(inst, result) > twct(inst, start):
        return start
    return result


def solve_heuristic(inst: Instance, params: LocalSearchParams | None = None) -> Schedule:
    """construct followed by improve."""
    params = params or LocalSearchParams()
    return improve(inst, construct(inst, params.seed), params)
