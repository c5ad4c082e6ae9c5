from __future__ import annotations

import random

import pytest
from hypothesis import strategies as st

from serialbatch.instgen import GenConfig, enforce_triangle, generate_base
from serialbatch.model import Assignment, Instance, earliest_timing, make_instance

EXAMPLE_JOBS = [(1, 1, 1, 1, 2), (2, 1, 1, 5, 2), (3, 2, 1, 6, 2), (4, 2, 1, 12, 2), (5, 1, 1, 11, 2)]
EXAMPLE_SETUPS = [[1, 1], [0, 3], [3, 0]]
CORE_SEQ = (1, 2, 3, 4, 5)
CONSTRAINED_SEQ = (1, 2, 5, 3, 4)


def example_instance(min_size=(3, 2), max_size=None) -> Instance:
    return make_instance(EXAMPLE_JOBS, EXAMPLE_SETUPS, 1, min_size, max_size)


@pytest.fixture
def example() -> Instance:
    """Five jobs, two families, one machine, windows l=(3,2), u=(3,2)."""
    return example_instance()


@pytest.fixture
def example_core() -> Instance:
    return example_instance((1, 1))


@pytest.fixture
def core_schedule(example):
    return earliest_timing(example, Assignment((CORE_SEQ,)))


@pytest.fixture
def constrained_schedule(example):
    return earliest_timing(example, Assignment((CONSTRAINED_SEQ,)))


def random_instance(rng: random.Random, n_max=7, f_max=3, m_max=2, windows=True) -> Instance:
    """Small random instance; windows drawn inside [1, |J_f|] when requested."""
    n = rng.randint(1, n_max)
    F = rng.randint(1, min(f_max, n))
    M = rng.randint(1, m_max)
    cfg = GenConfig(n, F, M, rng.choice([0, 5, 20]), rng.randrange(10**6))
    base = generate_base(cfg)
    if not windows:
        return base
    sizes = base.family_sizes()
    lo, hi = [], []
    for f in range(1, F + 1):
        a = rng.randint(1, sizes[f])
        b = rng.randint(a, sizes[f])
        lo.append(a)
        hi.append(b)
    return base.with_sizes(lo, hi)


@st.composite
def small_instances(draw, n_max=6, f_max=3, m_max=2, windows=True):
    n = draw(st.integers(1, n_max))
    F = draw(st.integers(1, min(f_max, n)))
    M = draw(st.integers(1, m_max))
    fams = list(range(1, F + 1)) + draw(st.lists(st.integers(1, F), min_size=n - F, max_size=n - F))
    jobs = [
        (i + 1, fams[i], draw(st.integers(1, 5)), draw(st.integers(0, 10)), draw(st.integers(1, 6)))
        for i in range(n)
    ]
    raw = [[0 if a == g else draw(st.integers(0, 6)) for g in range(1, F + 1)] for a in range(F + 1)]
    inst = make_instance(jobs, enforce_triangle(raw), M)
    if not windows:
        return inst
    sizes = inst.family_sizes()
    lo = [draw(st.integers(1, sizes[f])) for f in range(1, F + 1)]
    hi = [draw(st.integers(lo[f - 1], sizes[f])) for f in range(1, F + 1)]
    return inst.with_sizes(lo, hi)


def random_assignment(draw, inst: Instance) -> Assignment:
    ids = draw(st.permutations(inst.job_ids))
    machines = [draw(st.integers(0, inst.n_machines - 1)) for _ in ids]
    return Assignment(tuple(
        tuple(j for j, m in zip(ids, machines) if m == k) for k in range(inst.n_machines)
    ))


# One verdict line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
