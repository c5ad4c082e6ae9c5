"""Domain model for serial-batch scheduling with family setups and batch-size windows.

A family block is a maximal run of consecutive same-family jobs on a machine.
Blocks are derived from the job sequences alone; idle time inside a run does
not split it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

# Decision token for "no further jobs on this machine"; sorts after every job id.
CLOSE = 1 << 62


class NotPartitionError(ValueError):
    """Raised when an assignment does not place every job exactly once."""


@dataclass(frozen=True)
class Job:
    id: int
    family: int
    weight: int
    release: int
    ptime: int


@dataclass(frozen=True)
class Instance:
    """A problem instance.

    ``setups[f][g - 1]`` is the setup time into family ``g`` when the machine
    was last processing family ``f``; row 0 is the initial (empty machine)
    state. ``min_size[f - 1]`` and ``max_size[f - 1]`` hold the block-size
    window of family ``f``.
    """

    jobs: tuple[Job, ...]
    n_families: int
    n_machines: int
    setups: tuple[tuple[int, ...], ...]
    min_size: tuple[int, ...]
    max_size: tuple[int, ...]
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "setups", tuple(tuple(r) for r in self.setups))
        object.__setattr__(self, "min_size", tuple(self.min_size))
        object.__setattr__(self, "max_size", tuple(self.max_size))
        object.__setattr__(self, "_by_id", {j.id: j for j in self.jobs})

    def job(self, job_id: int) -> Job:
        return self._by_id[job_id]

    def has_job(self, job_id: int) -> bool:
        return job_id in self._by_id

    @property
    def job_ids(self) -> list[int]:
        return sorted(self._by_id)

    def setup(self, prev_family: int, family: int) -> int:
        """Setup time into ``family``; ``prev_family`` 0 means an empty machine."""
        if prev_family == family:
            return 0
        return self.setups[prev_family][family - 1]

    def lmin(self, family: int) -> int:
        return self.min_size[family - 1]

    def umax(self, family: int) -> int:
        return self.max_size[family - 1]

    def family_sizes(self) -> dict[int, int]:
        sizes = {f: 0 for f in range(1, self.n_families + 1)}
        for j in self.jobs:
            sizes[j.family] = sizes.get(j.family, 0) + 1
        return sizes

    def with_sizes(
        self,
        min_size: Sequence[int] | None = None,
        max_size: Sequence[int] | None = None,
    ) -> "Instance":
        return Instance(
            self.jobs,
            self.n_families,
            self.n_machines,
            self.setups,
            tuple(min_size) if min_size is not None else self.min_size,
            tuple(max_size) if max_size is not None else self.max_size,
        )

    def relaxed(self) -> "Instance":
        """The same instance with every block-size window opened to [1, |J_f|]."""
        sizes = self.family_sizes()
        return self.with_sizes(
            [1] * self.n_families,
            [max(1, sizes[f]) for f in range(1, self.n_families + 1)],
        )


@dataclass(frozen=True)
class Assignment:
    """Ordered job ids per machine; position ``i`` is machine ``i + 1``."""

    sequences: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sequences", tuple(tuple(s) for s in self.sequences))

    @property
    def n_machines(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True)
class Schedule:
    assignment: Assignment
    start: Mapping[int, int]

    @property
    def sequences(self) -> tuple[tuple[int, ...], ...]:
        return self.assignment.sequences

    def completion(self, inst: Instance, job_id: int) -> int:
        return self.start[job_id] + inst.job(job_id).ptime


@dataclass(frozen=True)
class FamilyBlock:
    machine: int
    family: int
    job_ids: tuple[int, ...]
    block_start: int | None = None
    block_end: int | None = None

    @property
    def size(self) -> int:
        return len(self.job_ids)


class ViolationKind(str, enum.Enum):
    OVERLAP = "Overlap"
    RELEASE = "Release"
    SETUP = "Setup"
    INITIAL_SETUP = "InitialSetup"
    BLOCK_TOO_SMALL = "BlockTooSmall"
    BLOCK_TOO_LARGE = "BlockTooLarge"
    NOT_PARTITION = "NotPartition"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    machine: int | None
    job_ids: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        where = f"machine {self.machine}" if self.machine is not None else "schedule"
        jobs = ",".join(str(j) for j in self.job_ids)
        return f"{self.kind.value}: {where} jobs [{jobs}] {self.detail}"


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def kinds(self) -> set[ViolationKind]:
        return {v.kind for v in self.violations}


@dataclass(frozen=True)
class InstanceIssue:
    """A structural problem found by :func:`validate_instance`."""

    kind: str
    detail: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.severity}: {self.kind}: {self.detail}"


def validate_instance(inst: Instance) -> list[InstanceIssue]:
    """Return every violated structural invariant of ``inst``.

    Row-0 triangle breaches come back with severity ``"warning"``; everything
    else is an error.
    """
    issues: list[InstanceIssue] = []
    F = inst.n_families
    if F < 1:
        issues.append(InstanceIssue("families", f"n_families={F} must be >= 1"))
    if inst.n_machines < 1:
        issues.append(InstanceIssue("machines", f"n_machines={inst.n_machines} must be >= 1"))

    seen: set[int] = set()
    for j in inst.jobs:
        if j.id in seen:
            issues.append(InstanceIssue("job", f"duplicate job id {j.id}"))
        seen.add(j.id)
        if j.id < 0:
            issues.append(InstanceIssue("job", f"job {j.id}: negative id"))
        if not 1 <= j.family <= F:
            issues.append(InstanceIssue("job", f"job {j.id}: family {j.family} not in 1..{F}"))
        if j.ptime < 1:
            issues.append(InstanceIssue("job", f"job {j.id}: ptime {j.ptime} < 1"))
        if j.weight < 1:
            issues.append(InstanceIssue("job", f"job {j.id}: weight {j.weight} < 1"))
        if j.release < 0:
            issues.append(InstanceIssue("job", f"job {j.id}: release {j.release} < 0"))

    S = inst.setups
    shape_ok = len(S) == F + 1 and all(len(row) == F for row in S)
    if not shape_ok:
        issues.append(InstanceIssue("setups", f"setup matrix must be {F + 1}x{F}"))
    else:
        for a in range(F + 1):
            for g in range(1, F + 1):
                if S[a][g - 1] < 0:
                    issues.append(InstanceIssue("setups", f"setup[{a}][{g}]={S[a][g - 1]} < 0"))
        for f in range(1, F + 1):
            if S[f][f - 1] != 0:
                issues.append(InstanceIssue("setups", f"setup[{f}][{f}]={S[f][f - 1]} must be 0"))
        for f in range(1, F + 1):
            for g in range(1, F + 1):
                for h in range(1, F + 1):
                    if S[f][h - 1] > S[f][g - 1] + S[g][h - 1]:
                        issues.append(InstanceIssue(
                            "triangle",
                            f"setup[{f}][{h}]={S[f][h - 1]} > setup[{f}][{g}] + setup[{g}][{h}]"
                            f" = {S[f][g - 1] + S[g][h - 1]}",
                        ))
        for f in range(1, F + 1):
            for g in range(1, F + 1):
                if f != g and S[0][g - 1] > S[0][f - 1] + S[f][g - 1]:
                    issues.append(InstanceIssue(
                        "initial-triangle",
                        f"setup[0][{g}]={S[0][g - 1]} > setup[0][{f}] + setup[{f}][{g}]"
                        f" = {S[0][f - 1] + S[f][g - 1]}",
                        severity="warning",
                    ))

    if len(inst.min_size) != F or len(inst.max_size) != F:
        issues.append(InstanceIssue("sizes", f"size windows must list {F} families"))
    else:
        sizes = inst.family_sizes()
        for f in range(1, F + 1):
            lo, hi = inst.min_size[f - 1], inst.max_size[f - 1]
            n = sizes.get(f, 0)
            if lo < 1:
                issues.append(InstanceIssue("sizes", f"family {f}: minimum size {lo} < 1"))
            elif n > 0 and lo > n:
                issues.append(InstanceIssue(
                    "cardinality", f"family {f}: minimum size {lo} exceeds family cardinality {n}"
                ))
            elif lo > hi:
                issues.append(InstanceIssue("cardinality", f"family {f}: empty window [{lo}, {hi}]"))
    return issues


def horizon(inst: Instance) -> int:
    """Upper bound on every completion time: one machine, all jobs released, grouped by family."""
    F = inst.n_families
    head = max(
        max((j.release for j in inst.jobs), default=0),
        max(inst.setups[0]),
    )
    worst_setup = max(inst.setups[f][g] for f in range(1, F + 1) for g in range(F))
    return head + sum(j.ptime for j in inst.jobs) + (F - 1) * worst_setup


def _check_partition(inst: Instance, asg: Assignment) -> None:
    placed = [j for seq in asg.sequences for j in seq]
    if len(placed) != len(set(placed)):
        raise NotPartitionError("a job appears more than once")
    unknown = [j for j in placed if not inst.has_job(j)]
    if unknown:
        raise NotPartitionError(f"unknown job ids {unknown}")
    if len(placed) != len(inst.jobs):
        missing = sorted(set(inst.job_ids) - set(placed))
        raise NotPartitionError(f"jobs not assigned: {missing}")


def _runs(inst: Instance, seq: Sequence[int]) -> list[tuple[int, list[int]]]:
    runs: list[tuple[int, list[int]]] = []
    for jid in seq:
        f = inst.job(jid).family
        if runs and runs[-1][0] == f:
            runs[-1][1].append(jid)
        else:
            runs.append((f, [jid]))
    return runs


def decode_blocks(inst: Instance, asg: Assignment) -> list[FamilyBlock]:
    """Split every machine sequence into maximal same-family runs."""
    _check_partition(inst, asg)
    return [
        FamilyBlock(m + 1, f, tuple(ids))
        for m, seq in enumerate(asg.sequences)
        for f, ids in _runs(inst, seq)
    ]


def timed_blocks(inst: Instance, sched: Schedule) -> list[FamilyBlock]:
    """Like :func:`decode_blocks`, with block start and end filled in from ``sched``."""
    out = []
    for b in decode_blocks(inst, sched.assignment):
        first, last = b.job_ids[0], b.job_ids[-1]
        out.append(FamilyBlock(
            b.machine, b.family, b.job_ids,
            sched.start[first], sched.completion(inst, last),
        ))
    return out


def windows_ok(inst: Instance, asg: Assignment) -> bool:
    """True when every maximal run lies inside its family's size window."""
    for seq in asg.sequences:
        for f, ids in _runs(inst, seq):
            if not inst.lmin(f) <= len(ids) <= inst.umax(f):
                return False
    return True


def earliest_timing(inst: Instance, asg: Assignment) -> Schedule:
    """Left-to-right earliest start times for a fixed assignment."""
    _check_partition(inst, asg)
    start: dict[int, int] = {}
    for seq in asg.sequences:
        t, prev = 0, 0
        for jid in seq:
            job = inst.job(jid)
            s = max(job.release, t + inst.setup(prev, job.family))
            start[jid] = s
            t, prev = s + job.ptime, job.family
    return Schedule(asg, start)


def twct(inst: Instance, sched: Schedule) -> int:
    return sum(j.weight * (sched.start[j.id] + j.ptime) for j in inst.jobs)


def check_feasible(inst: Instance, sched: Schedule) -> FeasibilityReport:
    """Report every constraint violated by ``sched``, machine by machine."""
    out: list[Violation] = []
    counts: dict[int, int] = {}
    for seq in sched.sequences:
        for jid in seq:
            counts[jid] = counts.get(jid, 0) + 1
    dup = sorted(j for j, c in counts.items() if c > 1)
    unknown = sorted(j for j in counts if not inst.has_job(j))
    missing = sorted(j for j in inst.job_ids if j not in counts)
    unstarted = sorted(j for j in counts if inst.has_job(j) and j not in sched.start)
    if dup:
        out.append(Violation(ViolationKind.NOT_PARTITION, None, tuple(dup), "assigned more than once"))
    if unknown:
        out.append(Violation(ViolationKind.NOT_PARTITION, None, tuple(unknown), "not in instance"))
    if missing:
        out.append(Violation(ViolationKind.NOT_PARTITION, None, tuple(missing), "not assigned"))
    if unstarted:
        out.append(Violation(ViolationKind.NOT_PARTITION, None, tuple(unstarted), "no start time"))

    for m, raw in enumerate(sched.sequences, start=1):
        seq = [j for j in raw if inst.has_job(j) and j in sched.start]
        prev = None
        for jid in seq:
            job = inst.job(jid)
            s = sched.start[jid]
            if s < job.release:
                out.append(Violation(
                    ViolationKind.RELEASE, m, (jid,), f"start {s} < release {job.release}"
                ))
            if prev is None:
                need = inst.setup(0, job.family)
                if s < need:
                    out.append(Violation(
                        ViolationKind.INITIAL_SETUP, m, (jid,), f"start {s} < initial setup {need}"
                    ))
            else:
                end = sched.start[prev.id] + prev.ptime
                gap = s - end
                need = inst.setup(prev.family, job.family)
                if gap < 0:
                    out.append(Violation(
                        ViolationKind.OVERLAP, m, (prev.id, jid), f"starts {-gap} before predecessor ends"
                    ))
                elif gap < need:
                    out.append(Violation(
                        ViolationKind.SETUP, m, (prev.id, jid), f"gap {gap} < setup {need}"
                    ))
            prev = job

        for f, ids in _runs(inst, [j for j in raw if inst.has_job(j)]):
            if len(ids) < inst.lmin(f):
                out.append(Violation(
                    ViolationKind.BLOCK_TOO_SMALL, m, tuple(ids),
                    f"family {f} block size {len(ids)} < {inst.lmin(f)}",
                ))
            elif len(ids) > inst.umax(f):
                out.append(Violation(
                    ViolationKind.BLOCK_TOO_LARGE, m, tuple(ids),
                    f"family {f} block size {len(ids)} > {inst.umax(f)}",
                ))
    return FeasibilityReport(tuple(out))


def decision_key(inst: Instance, asg: Assignment) -> tuple[int, ...]:
    """Canonical encoding used to break ties between equal-objective schedules.

    Replays the assignment chronologically: repeatedly take the open machine
    with the smallest current completion time (lowest id on ties) and record
    either its next job id or ``CLOSE`` when its sequence is exhausted. Keys
    compare lexicographically; the smaller one wins.
    """
    sched = earliest_timing(inst, asg)
    seqs = asg.sequences
    M = len(seqs)
    pos = [0] * M
    avail = [0] * M
    closed = [False] * M
    left = sum(len(s) for s in seqs)
    key: list[int] = []
    while left:
        m = min((avail[i], i) for i in range(M) if not closed[i])[1]
        if pos[m] < len(seqs[m]):
            jid = seqs[m][pos[m]]
            key.append(jid)
            pos[m] += 1
            avail[m] = sched.completion(inst, jid)
            left -= 1
        else:
            key.append(CLOSE)
            closed[m] = True
    return tuple(key)


def make_instance(
    jobs: Iterable[tuple[int, int, int, int, int]],
    setups: Sequence[Sequence[int]],
    n_machines: int,
    min_size: Sequence[int] | None = None,
    max_size: Sequence[int] | None = None,
) -> Instance:
    """Build an instance from ``(id, family, weight, release, ptime)`` rows.

    Missing windows default to [1, |J_f|].
    """
    job_list = tuple(Job(*row) for row in jobs)
    F = len(setups) - 1
    base = Instance(job_list, F, n_machines, tuple(tuple(r) for r in setups), (1,) * F, (1,) * F)
    sizes = base.family_sizes()
    lo = tuple(min_size) if min_size is not None else (1,) * F
    hi = tuple(max_size) if max_size is not None else tuple(max(1, sizes[f]) for f in range(1, F + 1))
    return base.with_sizes(lo, hi)
