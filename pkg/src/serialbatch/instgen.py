"""Random instance generation with triangle-closed setups and derived minimum batch sizes."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Instance, Job, Schedule, check_feasible

LOAD_LEVELS = {20: "loose", 50: "moderate", 100: "tight"}


class ConfigError(ValueError):
    pass


class InfeasibleInput(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n_jobs: int
    n_families: int
    n_machines: int
    setup_scale: int = 20
    seed: int = 0
    ptime_range: tuple[int, int] = (1, 20)
    weight_range: tuple[int, int] = (1, 10)
    release_factor: Fraction = Fraction(1, 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ptime_range", tuple(self.ptime_range))
        object.__setattr__(self, "weight_range", tuple(self.weight_range))
        object.__setattr__(self, "release_factor", Fraction(self.release_factor))
        self.validate()

    def validate(self) -> None:
        if min(self.n_jobs, self.n_families, self.n_machines) < 1:
            raise ConfigError("n_jobs, n_families and n_machines must be positive")
        if self.n_families > self.n_jobs:
            raise ConfigError(f"n_families={self.n_families} exceeds n_jobs={self.n_jobs}")
        if self.setup_scale < 0:
            raise ConfigError("setup_scale must be >= 0")
        for name in ("ptime_range", "weight_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or lo > hi:
                raise ConfigError(f"{name}={lo, hi} must be a nonempty range of positive integers")
        if self.release_factor < 0:
            raise ConfigError("release_factor must be >= 0")

    @property
    def label(self) -> str:
        return f"J{self.n_jobs}_F{self.n_families}_M{self.n_machines}_S{self.setup_scale}"


def enforce_triangle(raw: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Replace every setup by its cheapest path through intermediate families.

    ``raw`` has F + 1 rows (row 0 is the empty-machine state) and F columns.
    """
    F = len(raw) - 1
    d = [[0] * (F + 1) for _ in range(F + 1)]
    for a in range(F + 1):
        for g in range(1, F + 1):
            d[a][g] = raw[a][g - 1]
    for k in range(1, F + 1):
        for a in range(F + 1):
            dak = d[a][k]
            for g in range(1, F + 1):
                if dak + d[k][g] < d[a][g]:
                    d[a][g] = dak + d[k][g]
    return tuple(tuple(d[a][1:]) for a in range(F + 1))


def generate_base(cfg: GenConfig) -> Instance:
    """Draw jobs, setups and releases; every window starts as [1, |J_f|]."""
    rng = random.Random(cfg.seed)
    n, F, M = cfg.n_jobs, cfg.n_families, cfg.n_machines
    families = list(range(1, F + 1)) + [rng.randint(1, F) for _ in range(n - F)]
    rng.shuffle(families)
    ptimes = [rng.randint(*cfg.ptime_range) for _ in range(n)]
    weights = [rng.randint(*cfg.weight_range) for _ in range(n)]
    raw = [
        [0 if a == g else rng.randint(0, cfg.setup_scale) for g in range(1, F + 1)]
        for a in range(F + 1)
    ]
    setups = enforce_triangle(raw)
    lb = math.ceil(sum(ptimes) / M)
    top = math.floor(cfg.release_factor * lb)
    releases = [rng.randint(0, top) for _ in range(n)]
    jobs = tuple(
        Job(i + 1, families[i], weights[i], releases[i], ptimes[i]) for i in range(n)
    )
    sizes = [families.count(f) for f in range(1, F + 1)]
    return Instance(jobs, F, M, setups, (1,) * F, tuple(sizes))


def min_run_lengths(inst: Instance, sched: Schedule) -> dict[int, int]:
    """Shortest maximal run of each family in ``sched`` (0 for unused families)."""
    k = {f: 0 for f in range(1, inst.n_families + 1)}
    for seq in sched.sequences:
        prev, run = None, 0
        for jid in list(seq) + [None]:
            f = inst.job(jid).family if jid is not None else None
            if f == prev:
                run += 1
                continue
            if prev is not None:
                k[prev] = run if k[prev] == 0 else min(k[prev], run)
            prev, run = f, 1
    return k


def derive_min_batch_sizes(inst: Instance, core_schedule: Schedule, seed: int) -> tuple[int, ...]:
    """Pick each l_f uniformly from {min(k_f + 1, |J_f|), ..., |J_f|}.

    k_f is the shortest run of family f in the Core schedule, so the Core
    schedule becomes infeasible unless the range had to be clamped.
    """
    relaxed = inst.relaxed()
    if not check_feasible(relaxed, core_schedule).feasible:
        raise InfeasibleInput("core schedule is not feasible for the relaxed instance")
    rng = random.Random(seed)
    sizes = inst.family_sizes()
    k = min_run_lengths(inst, core_schedule)
    out = []
    for f in range(1, inst.n_families + 1):
        n = sizes[f]
        if n == 0:
            out.append(1)
            continue
        out.append(rng.randint(min(k[f] + 1, n), n))
    return tuple(out)


def core_baseline(inst: Instance, node_budget: int = 20_000, exact_max_jobs: int = 30) -> Schedule:
    """A Core (unwindowed) schedule to derive minimum sizes from.

    Small instances use the branch-and-bound under a node budget, larger ones
    the tabu search. Both are deterministic.
    """
    from .heuristic import LocalSearchParams, solve_heuristic
    from .solver import SolverParams, solve_core

    relaxed = inst.relaxed()
    if len(inst.jobs) <= exact_max_jobs:
        rep = solve_core(relaxed, SolverParams(time_budget=1e9, node_budget=node_budget))
        if rep.incumbent is not None:
            return rep.incumbent
    return solve_heuristic(relaxed, LocalSearchParams(time_budget=1e9, max_iters=200, max_no_improve=20))


def generate(cfg: GenConfig, node_budget: int = 20_000) -> Instance:
    """Full pipeline: base instance, Core baseline, derived minimum sizes."""
    base = generate_base(cfg)
    core = core_baseline(base, node_budget)
    lo = derive_min_batch_sizes(base, core, cfg.seed + 1)
    return base.with_sizes(lo, base.max_size)


def sweep_configs(
    jobs: Sequence[int],
    families: Sequence[int],
    machines: Sequence[int],
    scales: Sequence[int],
    replicates: int,
    seed: int = 0,
    **extra,
) -> list[tuple[str, GenConfig]]:
    """One config per sweep cell and replicate, named ``J{J}_F{F}_M{M}_S{S}_r{k}``."""
    if not (jobs and families and machines and scales) or replicates < 1:
        raise ConfigError("every sweep list must be nonempty and replicates >= 1")
    out = []
    cell = 0
    for J in jobs:
        for F in families:
            for M in machines:
                for S in scales:
                    for k in range(replicates):
                        cfg = GenConfig(J, F, M, S, seed * 1_000_003 + cell * 1009 + k, **extra)
                        out.append((f"{cfg.label}_r{k}", cfg))
                    cell += 1
    return out


__all__ = [
    "ConfigError", "GenConfig", "InfeasibleInput", "core_baseline", "derive_min_batch_sizes",
    "enforce_triangle", "generate", "generate_base", "min_run_lengths", "sweep_configs",
]
