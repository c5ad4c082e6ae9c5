"""Anytime branch-and-bound for TWCT minimisation with family block windows.

Branching is chronological: each node picks the open machine with the
smallest current completion time (lowest id on ties) and branches on the next
job to append there, or on closing that machine. Block-size windows are
checked as the sequences grow, so a run is pruned as soon as it can no longer
end inside its window.

Among equal-objective optima the search returns the schedule with the
smallest :func:`~serialbatch.model.decision_key`, which matches the oracle.
"""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable

from .model import CLOSE, Assignment, Instance, Job, Schedule, earliest_timing
from .report import SolveReport, Status

INF = math.inf


class Propagation(str, enum.Enum):
    BASIC = "basic"
    STRONG = "strong"


@dataclass(frozen=True)
class SolverParams:
    time_budget: float = 60.0
    node_budget: int | None = None
    enforce_sizes: bool = True
    propagation: Propagation = Propagation.STRONG
    seed: int = 0
    memo_limit: int = 2_000_000

    def __post_init__(self) -> None:
        if not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        object.__setattr__(self, "propagation", Propagation(self.propagation))


class _Context:
    """Per-instance arrays shared by every node of one search."""

    def __init__(self, inst: Instance, enforce: bool, strong: bool):
        self.inst = inst
        self.enforce = enforce
        self.strong = strong and enforce
        jobs = sorted(inst.jobs, key=lambda j: j.id)
        self.jobs: list[Job] = jobs
        self.n = len(jobs)
        self.M = inst.n_machines
        self.F = inst.n_families
        self.fam = [j.family for j in jobs]
        self.w = [j.weight for j in jobs]
        self.r = [j.release for j in jobs]
        self.p = [j.ptime for j in jobs]
        self.ids = [j.id for j in jobs]
        self.index = {j.id: i for i, j in enumerate(jobs)}
        self.fam_mask = [0] * (self.F + 1)
        for i, f in enumerate(self.fam):
            self.fam_mask[f] |= 1 << i
        self.lo = [0] + [inst.lmin(f) if enforce else 1 for f in range(1, self.F + 1)]
        self.hi = [0] + [inst.umax(f) if enforce else self.n for f in range(1, self.F + 1)]
        F = self.F
        self.setup = [[0] * (F + 1) for _ in range(F + 1)]
        for a in range(F + 1):
            for g in range(1, F + 1):
                self.setup[a][g] = inst.setup(a, g)
        # Shortest setup paths; keeps bounds valid when the input is not metric.
        d = [row[:] for row in self.setup]
        for k in range(1, F + 1):
            for a in range(F + 1):
                for g in range(1, F + 1):
                    if d[a][k] + d[k][g] < d[a][g]:
                        d[a][g] = d[a][k] + d[k][g]
        self.dist = d
        # Lower-indexed jobs with identical (family, ptime, weight).
        self.twins: list[list[int]] = [
            [k for k in range(i) if (self.fam[k], self.p[k], self.w[k]) == (self.fam[i], self.p[i], self.w[i])]
            for i in range(self.n)
        ]
        self.ratio_order = sorted(range(self.n), key=lambda i: (-self.w[i] / self.p[i], i))


class PartialState:
    """A node of the search: per-machine prefixes plus the unscheduled set.

    ``last[m]`` is the family of machine ``m``'s open block (0 if empty) and
    ``blen[m]`` its length. ``acc`` is the weighted completion of all
    scheduled jobs under earliest timing.
    """

    __slots__ = (
        "ctx", "remaining", "avail", "last", "blen", "closed", "first",
        "empty_closed", "acc", "path", "seqs", "bound",
    )

    def __init__(self, ctx, remaining, avail, last, blen, closed, first,
                 empty_closed, acc, path, seqs, bound=0):
        self.ctx = ctx
        self.remaining = remaining
        self.avail = avail
        self.last = last
        self.blen = blen
        self.closed = closed
        self.first = first
        self.empty_closed = empty_closed
        self.acc = acc
        self.path = path
        self.seqs = seqs
        self.bound = bound

    @classmethod
    def root(cls, inst: Instance, enforce_sizes: bool = True,
             propagation: Propagation | str = Propagation.STRONG) -> "PartialState":
        ctx = _Context(inst, enforce_sizes, Propagation(propagation) is Propagation.STRONG)
        M = ctx.M
        return cls(ctx, (1 << ctx.n) - 1, (0,) * M, (0,) * M, (0,) * M, (False,) * M,
                   (-1,) * M, False, 0, (), ((),) * M)

    @property
    def inst(self) -> Instance:
        return self.ctx.inst

    def unscheduled(self) -> list[int]:
        ids, rem = self.ctx.ids, self.remaining
        return [ids[i] for i in range(self.ctx.n) if rem >> i & 1]

    def remaining_of(self, family: int) -> int:
        return (self.remaining & self.ctx.fam_mask[family]).bit_count()

    def pick_machine(self) -> int | None:
        """Open machine with the smallest completion time, lowest index on ties."""
        best = None
        for m in range(self.ctx.M):
            if not self.closed[m] and (best is None or self.avail[m] < self.avail[best]):
                best = m
        return best

    def append(self, m: int, i: int) -> "PartialState":
        ctx = self.ctx
        f = ctx.fam[i]
        last = self.last[m]
        s = max(ctx.r[i], self.avail[m] + ctx.setup[last][f])
        c = s + ctx.p[i]
        blen = self.blen[m] + 1 if last == f else 1
        first = self.first
        if first[m] < 0:
            first = first[:m] + (i,) + first[m + 1:]
        return PartialState(
            ctx,
            self.remaining & ~(1 << i),
            self.avail[:m] + (c,) + self.avail[m + 1:],
            self.last[:m] + (f,) + self.last[m + 1:],
            self.blen[:m] + (blen,) + self.blen[m + 1:],
            self.closed,
            first,
            self.empty_closed,
            self.acc + ctx.w[i] * c,
            self.path + (ctx.ids[i],),
            self.seqs[:m] + (self.seqs[m] + (ctx.ids[i],),) + self.seqs[m + 1:],
        )

    def close(self, m: int) -> "PartialState":
        return PartialState(
            self.ctx, self.remaining, self.avail, self.last, self.blen,
            self.closed[:m] + (True,) + self.closed[m + 1:],
            self.first,
            self.empty_closed or self.last[m] == 0,
            self.acc, self.path + (CLOSE,), self.seqs,
        )

    def blocks_closable(self) -> bool:
        """Every open block on an open machine already meets its minimum size."""
        lo = self.ctx.lo
        return all(
            self.closed[m] or self.last[m] == 0 or self.blen[m] >= lo[self.last[m]]
            for m in range(self.ctx.M)
        )

    def memo_key(self):
        ctx = self.ctx
        machines = tuple(
            (-1, 0, 0) if self.closed[m] else (self.avail[m], self.last[m], self.blen[m])
            for m in range(ctx.M)
        )
        sym = None
        if not self.empty_closed:
            for m in range(ctx.M):
                if self.first[m] < 0:
                    sym = self.first[m - 1] if m > 0 else -1
                    break
        return (self.remaining, machines, sym, self.empty_closed)


def block_extension_feasible(state: PartialState, job: Job | int, machine: int | None = None) -> bool:
    """False when appending ``job`` to ``machine`` provably breaks a size window.

    ``machine`` is a 0-based index and defaults to the machine the branching
    rule would pick. A True answer does not promise a feasible completion.
    """
    ctx = state.ctx
    i = ctx.index[job.id if isinstance(job, Job) else job]
    m = state.pick_machine() if machine is None else machine
    if m is None or not state.remaining >> i & 1:
        return False
    return _extension_ok(state, m, i)


def _extension_ok(state: PartialState, m: int, i: int) -> bool:
    ctx = state.ctx
    if not ctx.enforce:
        return True
    f = ctx.fam[i]
    last = state.last[m]
    if last == f:
        if state.blen[m] + 1 > ctx.hi[f]:
            return False
    elif last and state.blen[m] < ctx.lo[last]:
        return False
    if not ctx.strong:
        return True
    rem_after = state.remaining & ~(1 << i)
    # Only the families whose open blocks or counts change can newly fail.
    new_len = state.blen[m] + 1 if last == f else 1
    for g in {f, last} if last else {f}:
        if not _family_ok(state, g, rem_after, m, f, new_len):
            return False
    return True


def _family_ok(state: PartialState, g: int, rem_after: int,
               m: int = -1, fam_m: int = 0, len_m: int = 0) -> bool:
    """Counting check for family ``g``; machine ``m`` is overridden with (fam_m, len_m).

    Every open block of ``g`` below its minimum needs that many more jobs of
    ``g``; whatever is left must fit into open blocks or new blocks of legal size.
    """
    ctx = state.ctx
    lo, hi = ctx.lo[g], ctx.hi[g]
    left = (rem_after & ctx.fam_mask[g]).bit_count()
    deficit = 0
    spare = 0
    for k in range(ctx.M):
        if k == m:
            if fam_m == 0:
                continue
            fam_k, len_k = fam_m, len_m
        elif state.closed[k]:
            continue
        else:
            fam_k, len_k = state.last[k], state.blen[k]
        if fam_k != g:
            continue
        deficit += max(0, lo - len_k)
        spare += hi - max(len_k, lo)
    if deficit > left:
        return False
    surplus = left - deficit
    if surplus == 0:
        return True
    # Surplus goes into open blocks (up to ``spare``) or into new blocks of size lo..hi.
    most_blocks = surplus // lo
    need = max(0, surplus - spare)
    return most_blocks * hi >= need


def _close_ok(state: PartialState, m: int) -> bool:
    ctx = state.ctx
    last = state.last[m]
    if ctx.enforce and last and state.blen[m] < ctx.lo[last]:
        return False
    if last == 0:
        # An empty machine may close only while a lower one is still open.
        if not any(not state.closed[k] for k in range(m)):
            return False
    elif not state.remaining:
        return True
    others_open = any(not state.closed[k] for k in range(ctx.M) if k != m)
    if state.remaining and not others_open:
        return False
    if ctx.strong and state.remaining and last:
        # The block on m can no longer absorb jobs once the machine closes.
        if not _family_ok(state, last, state.remaining, m, 0, 0):
            return False
    return True


def lower_bound(state: PartialState) -> int:
    """Accumulated TWCT plus each unscheduled job released at the earliest open machine time."""
    ctx = state.ctx
    open_avail = [state.avail[m] for m in range(ctx.M) if not state.closed[m]]
    if not state.remaining:
        return state.acc
    if not open_avail:
        return INF
    t = min(open_avail)
    total = state.acc
    rem = state.remaining
    for i in range(ctx.n):
        if rem >> i & 1:
            total += ctx.w[i] * (max(ctx.r[i], t) + ctx.p[i])
    return total


def _strong_bound(state: PartialState) -> float:
    """Max of a per-job earliest-start bound and a fast single-machine relaxation.

    The relaxation pools all open machines into one machine whose speed at
    time t is the number of machines free by t, runs preemptive WSPT on it
    and charges each job its mean busy time plus half its processing time.
    """
    ctx = state.ctx
    rem = state.remaining
    if not rem:
        return state.acc
    opened = [m for m in range(ctx.M) if not state.closed[m]]
    if not opened:
        return INF
    dist, w, p, r, fam = ctx.dist, ctx.w, ctx.p, ctx.r, ctx.fam
    avail, last = state.avail, state.last
    reach = {}
    for f in range(1, ctx.F + 1):
        if rem & ctx.fam_mask[f]:
            reach[f] = min(avail[m] + dist[last[m]][f] for m in opened)

    per_job = 0
    items = []
    for i in ctx.ratio_order:
        if rem >> i & 1:
            e = r[i] if r[i] > reach[fam[i]] else reach[fam[i]]
            per_job += w[i] * (e + p[i])
            items.append((e, i))

    caps = sorted(avail[m] for m in opened)
    items.sort()
    n_items = len(items)
    left = {i: p[i] for _, i in items}
    heap: list[tuple[float, int]] = []
    k = 0
    t = 0.0
    busy = 0.0
    ncap = len(caps)
    while k < n_items or heap:
        if not heap:
            if items[k][0] > t:
                t = items[k][0]
            while k < n_items and items[k][0] <= t:
                i = items[k][1]
                heapq.heappush(heap, (-w[i] / p[i], i))
                k += 1
        c = 0
        while c < ncap and caps[c] <= t:
            c += 1
        if c == 0:
            t = caps[0]
            continue
        nxt = INF
        if k < n_items:
            nxt = items[k][0]
        if c < ncap and caps[c] < nxt:
            nxt = caps[c]
        ratio, i = heap[0]
        finish = t + left[i] / c
        if finish <= nxt:
            busy += -ratio * c * (finish * finish - t * t) / 2
            heapq.heappop(heap)
            t = finish
        else:
            busy += -ratio * c * (nxt * nxt - t * t) / 2
            left[i] -= c * (nxt - t)
            t = nxt
        if k < n_items and items[k][0] <= t:
            while k < n_items and items[k][0] <= t:
                j = items[k][1]
                heapq.heappush(heap, (-w[j] / p[j], j))
                k += 1
    fast = busy + sum(w[i] * p[i] for _, i in items) / 2
    return state.acc + max(per_job, fast)


def _children(state: PartialState) -> list[PartialState]:
    ctx = state.ctx
    m = state.pick_machine()
    if m is None:
        return []
    out: list[PartialState] = []
    empty = state.last[m] == 0
    if not (empty and state.empty_closed):
        t = state.avail[m]
        floor = state.first[m - 1] if empty and m > 0 else -1
        rem = state.remaining
        for i in range(ctx.n):
            if not rem >> i & 1 or i <= floor:
                continue
            if ctx.r[i] <= t and any(rem >> k & 1 and ctx.r[k] <= t for k in ctx.twins[i]):
                continue
            if _extension_ok(state, m, i):
                out.append(state.append(m, i))
    if _close_ok(state, m):
        out.append(state.close(m))
    return out


def _finish(ctx: _Context, seqs) -> Schedule:
    return earliest_timing(ctx.inst, Assignment(seqs))


def solve(inst: Instance, params: SolverParams | None = None,
          callback: Callable[[int, int, int, float], None] | None = None) -> SolveReport:
    """Exact anytime minimisation of TWCT.

    ``callback(objective, dual_bound, nodes, elapsed)`` fires on every new
    incumbent.
    """
    params = params or SolverParams()
    t0 = time.perf_counter()
    enforce = params.enforce_sizes
    if enforce:
        sizes = inst.family_sizes()
        if any(sizes[f] and inst.lmin(f) > min(sizes[f], inst.umax(f)) for f in sizes):
            return SolveReport(Status.INFEASIBLE, None, None, 0, 0, time.perf_counter() - t0)

    root = PartialState.root(inst, enforce, params.propagation)
    ctx = root.ctx
    root.bound = max(lower_bound(root), math.ceil(_strong_bound(root) - 1e-6))
    best_obj: float = INF
    best_key: tuple = ()
    best_seqs = None
    memo: dict = {}
    nodes = 0
    stack = [root]
    exhausted = True
    deadline = t0 + params.time_budget

    while stack:
        node = stack.pop()
        if node.bound > best_obj or (node.bound == best_obj and node.path > best_key[:len(node.path)]):
            continue
        if (nodes & 255) == 0 and time.perf_counter() > deadline or (
            params.node_budget is not None and nodes >= params.node_budget
        ):
            stack.append(node)
            exhausted = False
            break
        mk = node.memo_key()
        seen = memo.get(mk)
        cur = (node.acc, node.path)
        if seen is not None and seen <= cur:
            continue
        if seen is not None or len(memo) < params.memo_limit:
            memo[mk] = cur
        nodes += 1

        kids = []
        for child in _children(node):
            if not child.remaining:
                if not child.blocks_closable():
                    continue
                cand = (child.acc, child.path)
                if cand < (best_obj, best_key):
                    best_obj, best_key, best_seqs = child.acc, child.path, child.seqs
                    if callback is not None:
                        callback(best_obj, _dual(stack, best_obj, root.bound), nodes,
                                 time.perf_counter() - t0)
                continue
            sb = _strong_bound(child)
            if sb == INF:
                continue
            b = max(node.bound, math.ceil(sb - 1e-6))
            if b > best_obj:
                continue
            child.bound = b
            kids.append(child)
        kids.sort(key=lambda c: c.bound)
        stack.extend(reversed(kids))

    elapsed = time.perf_counter() - t0
    if exhausted:
        if best_seqs is None:
            return SolveReport(Status.INFEASIBLE, None, None, 0, nodes, elapsed)
        sched = _finish(ctx, best_seqs)
        return SolveReport(Status.OPTIMAL, sched, best_obj, best_obj, nodes, elapsed)
    dual = _dual(stack, best_obj, root.bound)
    if best_seqs is None:
        return SolveReport(Status.UNKNOWN, None, None, dual, nodes, elapsed)
    sched = _finish(ctx, best_seqs)
    return SolveReport(Status.FEASIBLE, sched, best_obj, dual, nodes, elapsed)


def _dual(stack, best_obj, root_bound) -> int:
    b = min((n.bound for n in stack), default=best_obj)
    b = min(b, best_obj)
    if b == INF:
        return int(root_bound) if root_bound != INF else 0
    return int(max(b, root_bound if root_bound != INF else b))


def solve_core(inst: Instance, params: SolverParams | None = None,
               callback: Callable[[int, int, int, float], None] | None = None) -> SolveReport:
    """Solve the relaxation without block-size windows."""
    params = params or SolverParams()
    relaxed = SolverParams(
        params.time_budget, params.node_budget, False, params.propagation, params.seed, params.memo_limit
    )
    return solve(inst, relaxed, callback)
