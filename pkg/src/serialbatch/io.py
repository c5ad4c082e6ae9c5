"""JSON instance and solution files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .model import (
    Assignment,
    Instance,
    Job,
    Schedule,
    decode_blocks,
    timed_blocks,
    twct,
)
from .report import SolveReport

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed instance or solution file."""


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "nFamilies": inst.n_families,
        "nMachines": inst.n_machines,
        "setups": [list(row) for row in inst.setups],
        "families": [
            {"family": f, "minSize": inst.lmin(f), "maxSize": inst.umax(f)}
            for f in range(1, inst.n_families + 1)
        ],
        "jobs": [
            {"id": j.id, "family": j.family, "weight": j.weight, "release": j.release, "ptime": j.ptime}
            for j in inst.jobs
        ],
    }


def _int(obj: Any, key: str) -> int:
    try:
        v = obj[key]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"missing field {key!r}") from exc
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"field {key!r} must be an integer, got {v!r}")
    return v


def instance_from_dict(data: Any) -> Instance:
    if not isinstance(data, dict):
        raise FormatError("instance file must hold a JSON object")
    version = _int(data, "schemaVersion")
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schemaVersion {version}")
    F, M = _int(data, "nFamilies"), _int(data, "nMachines")
    setups = data.get("setups")
    if not isinstance(setups, list) or not all(isinstance(r, list) for r in setups):
        raise FormatError("setups must be a list of rows")
    if any(isinstance(x, bool) or not isinstance(x, int) for r in setups for x in r):
        raise FormatError("setup entries must be integers")
    fams = data.get("families")
    if not isinstance(fams, list) or len(fams) != F:
        raise FormatError(f"families must list {F} entries")
    by_f = {}
    for entry in fams:
        by_f[_int(entry, "family")] = (_int(entry, "minSize"), _int(entry, "maxSize"))
    if sorted(by_f) != list(range(1, F + 1)):
        raise FormatError("families must cover 1..nFamilies exactly once")
    raw_jobs = data.get("jobs")
    if not isinstance(raw_jobs, list):
        raise FormatError("jobs must be a list")
    jobs = tuple(
        Job(_int(j, "id"), _int(j, "family"), _int(j, "weight"), _int(j, "release"), _int(j, "ptime"))
        for j in raw_jobs
    )
    return Instance(
        jobs, F, M, tuple(tuple(r) for r in setups),
        tuple(by_f[f][0] for f in range(1, F + 1)),
        tuple(by_f[f][1] for f in range(1, F + 1)),
    )


def dumps(data: dict[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"


def _load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc


def read_instance(path: str | Path) -> Instance:
    return instance_from_dict(_load_json(path))


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst)), encoding="utf-8")


def solution_to_dict(
    inst: Instance,
    report: SolveReport,
    *,
    instance_ref: str,
    solver_id: str,
    budget: float | None = None,
    seed: int | None = None,
    propagation: str | None = None,
    include_elapsed: bool = False,
) -> dict[str, Any]:
    sched = report.incumbent
    machines = []
    blocks = []
    if sched is not None:
        for m, seq in enumerate(sched.sequences, start=1):
            machines.append({
                "machine": m,
                "jobs": [
                    {"id": j, "start": sched.start[j], "end": sched.completion(inst, j)} for j in seq
                ],
            })
        blocks = [
            {"machine": b.machine, "family": b.family, "jobs": list(b.job_ids),
             "start": b.block_start, "end": b.block_end}
            for b in timed_blocks(inst, sched)
        ]
    solver: dict[str, Any] = {
        "id": solver_id,
        "budget": budget,
        "seed": seed,
        "propagation": propagation,
        "nodes": report.nodes,
        "dualBound": report.dual_bound,
    }
    if include_elapsed:
        solver["elapsed"] = round(report.elapsed, 6)
    return {
        "schemaVersion": SCHEMA_VERSION,
        "instanceRef": instance_ref,
        "status": report.status.value,
        "objective": report.objective,
        "machines": machines,
        "blocks": blocks,
        "solver": solver,
    }


def schedule_from_dict(data: Any, n_machines: int | None = None) -> Schedule:
    """Rebuild the schedule stored in a solution object."""
    if not isinstance(data, dict):
        raise FormatError("solution file must hold a JSON object")
    rows = data.get("machines")
    if not isinstance(rows, list):
        raise FormatError("machines must be a list")
    seqs: dict[int, tuple[int, ...]] = {}
    start: dict[int, int] = {}
    for row in rows:
        m = _int(row, "machine")
        jobs = row.get("jobs") if isinstance(row, dict) else None
        if not isinstance(jobs, list):
            raise FormatError(f"machine {m}: jobs must be a list")
        seqs[m] = tuple(_int(j, "id") for j in jobs)
        for j in jobs:
            start[_int(j, "id")] = _int(j, "start")
    count = max([n_machines or 0, *seqs])
    if any(m < 1 for m in seqs):
        raise FormatError("machine ids start at 1")
    return Schedule(Assignment(tuple(seqs.get(m, ()) for m in range(1, count + 1))), start)


def read_solution(path: str | Path, inst: Instance | None = None) -> tuple[dict[str, Any], Schedule]:
    data = _load_json(path)
    return data, schedule_from_dict(data, inst.n_machines if inst else None)


def solution_consistency(inst: Instance, data: dict[str, Any], sched: Schedule) -> list[str]:
    """Embedded objective, end times and blocks must match what the schedule implies."""
    problems = []
    try:
        value = twct(inst, sched)
    except KeyError:
        return problems
    if data.get("objective") is not None and data["objective"] != value:
        problems.append(f"Objective: stored {data['objective']} != recomputed {value}")
    for row in data.get("machines", []):
        for j in row.get("jobs", []):
            if inst.has_job(j["id"]) and "end" in j and j["end"] != j["start"] + inst.job(j["id"]).ptime:
                problems.append(f"EndTime: job {j['id']} end {j['end']} != start + ptime")
    if "blocks" in data:
        try:
            expected = [
                {"machine": b.machine, "family": b.family, "jobs": list(b.job_ids)}
                for b in decode_blocks(inst, sched.assignment)
            ]
        except ValueError:
            return problems
        stored = [
            {"machine": b.get("machine"), "family": b.get("family"), "jobs": b.get("jobs")}
            for b in data["blocks"]
        ]
        if stored != expected:
            problems.append("Blocks: stored blocks differ from the decoded family blocks")
    return problems
