"""Command-line entry point: gen, solve, validate, bench, gantt.

Exit codes: 0 success, 1 feasibility or validation failure, 2 input error,
3 proven infeasible, 4 inconclusive.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import io
from .bench import SOLVER_IDS, RunRecord, run_solver, run_suite, summary_table
from .gantt import gantt_data, render_gantt
from .instgen import ConfigError, generate, sweep_configs
from .model import Instance, check_feasible, validate_instance
from .oracle import TooLarge
from .plots import plot_summary
from .report import Status

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_UNKNOWN = 0, 1, 2, 3, 4
STATUS_EXIT = {
    Status.OPTIMAL: EXIT_OK,
    Status.FEASIBLE: EXIT_OK,
    Status.INFEASIBLE: EXIT_INFEASIBLE,
    Status.UNKNOWN: EXIT_UNKNOWN,
}
SWEEP_KEYS = ("jobs", "families", "machines", "scales")
GENERATOR_KEYS = ("ptime_range", "weight_range", "release_factor")


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    return float(raw) if raw else default


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw else default


def _fail(msg: str, code: int = EXIT_INPUT) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load_instance(path: str) -> Instance:
    inst = io.read_instance(path)
    errors = [i for i in validate_instance(inst) if i.severity == "error" and i.kind != "cardinality"]
    if errors:
        raise io.FormatError("; ".join(str(e) for e in errors))
    return inst


def load_gen_config(path: str | Path) -> tuple[dict[str, Any], dict[str, Any]]:
    """Read a sweep config; returns (sweep kwargs, generator extras)."""
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    sweep = data.get("sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("config needs a [sweep] table")
    unknown = set(sweep) - {*SWEEP_KEYS, "replicates", "seed"}
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
    kwargs: dict[str, Any] = {}
    for key in SWEEP_KEYS:
        vals = sweep.get(key)
        if not isinstance(vals, list) or not vals or not all(isinstance(v, int) for v in vals):
            raise ConfigError(f"sweep.{key} must be a nonempty list of integers")
        kwargs[key] = vals
    kwargs["replicates"] = sweep.get("replicates", 1)
    kwargs["seed"] = sweep.get("seed", 0)
    gen = data.get("generator", {})
    unknown = set(gen) - set(GENERATOR_KEYS)
    if unknown:
        raise ConfigError(f"unknown generator keys: {', '.join(sorted(unknown))}")
    extra = {k: tuple(v) if isinstance(v, list) else v for k, v in gen.items()}
    if "release_factor" in extra:
        extra["release_factor"] = _fraction(extra["release_factor"])
    return kwargs, extra


def _fraction(v: Any) -> Fraction:
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"release_factor {v!r} is not a number") from exc


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        kwargs, extra = load_gen_config(args.config)
        configs = sweep_configs(**kwargs, **extra)
    except (ConfigError, TypeError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, cfg in configs:
        io.write_instance(generate(cfg), out / f"{name}.json")
    print(f"wrote {len(configs)} instances to {out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        inst = _load_instance(args.instance)
        rep = run_solver(args.solver, inst, args.budget, args.seed, args.propagation)
    except io.FormatError as exc:
        return _fail(str(exc))
    except TooLarge as exc:
        return _fail(f"TooLarge: {exc}")
    data = io.solution_to_dict(
        inst, rep,
        instance_ref=Path(args.instance).name,
        solver_id=args.solver,
        budget=args.budget,
        seed=args.seed,
        propagation=args.propagation,
        include_elapsed=args.elapsed,
    )
    text = io.dumps(data)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"{rep.status.value} objective={rep.objective} bound={rep.dual_bound} nodes={rep.nodes}",
          file=sys.stderr)
    return STATUS_EXIT[rep.status]


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        inst = io.read_instance(args.instance)
        sol = io.read_solution(args.solution, inst) if args.solution else None
    except io.FormatError as exc:
        return _fail(str(exc))
    lines = []
    failed = False
    for issue in validate_instance(inst):
        lines.append(str(issue))
        failed |= issue.severity == "error"
    if sol is not None:
        data, sched = sol
        report = check_feasible(inst, sched)
        lines.extend(str(v) for v in report.violations)
        problems = io.solution_consistency(inst, data, sched)
        lines.extend(problems)
        failed |= not report.feasible or bool(problems)
    for line in lines:
        print(line)
    return EXIT_INVALID if failed else EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    paths = sorted(glob.glob(args.instances))
    if not paths:
        return _fail(f"no instance files match {args.instances!r}")
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    try:
        instances = [(Path(p).stem, _load_instance(p)) for p in paths]
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        rec_path = out / "records.jsonl"
        existing = []
        if args.resume and rec_path.exists():
            existing = [RunRecord.from_json(l) for l in rec_path.read_text().splitlines() if l.strip()]
        records, rows = run_suite(
            instances, solvers, args.budget, args.seed, args.propagation, args.workers,
            existing, args.ci,
        )
    except (io.FormatError, ValueError) as exc:
        return _fail(str(exc))
    rec_path.write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
    (out / "summary.tsv").write_text(summary_table(rows), encoding="utf-8")
    if plot_summary(rows, out / "gap.png"):
        print(f"figure: {out / 'gap.png'}")
    sys.stdout.write(summary_table(rows))
    return EXIT_OK


def cmd_gantt(args: argparse.Namespace) -> int:
    try:
        inst = io.read_instance(args.instance)
        data, sched = io.read_solution(args.solution, inst)
    except io.FormatError as exc:
        return _fail(str(exc))
    report = check_feasible(inst, sched)
    if not report.feasible:
        for v in report.violations:
            print(v, file=sys.stderr)
        if not args.force:
            return _fail("solution is infeasible; pass --force to render anyway", EXIT_INVALID)
    if args.format == "json":
        text = json.dumps(gantt_data(inst, sched), indent=2) + "\n"
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if not args.output:
        return _fail("--format svg needs -o OUT")
    render_gantt(inst, sched, args.output, title=data.get("instanceRef"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    budget = _env_float("SERIALBATCH_BUDGET", 60.0)
    workers = _env_int("SERIALBATCH_WORKERS", 1)
    p = argparse.ArgumentParser(prog="serialbatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance sweep from a TOML config")
    g.add_argument("config")
    g.add_argument("outdir")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance")
    s.add_argument("--solver", choices=SOLVER_IDS, default="exact")
    s.add_argument("--budget", type=float, default=budget, help="seconds (env SERIALBATCH_BUDGET)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--propagation", choices=("basic", "strong"), default="strong")
    s.add_argument("--elapsed", action="store_true", help="record wall time (breaks byte determinism)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check an instance and optionally a solution")
    v.add_argument("instance")
    v.add_argument("solution", nargs="?")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run solvers over instance files and summarize")
    b.add_argument("instances", help="glob pattern, quoted")
    b.add_argument("--solvers", default="exact,heuristic")
    b.add_argument("--budget", type=float, default=budget)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--propagation", choices=("basic", "strong"), default="strong")
    b.add_argument("--workers", type=int, default=workers, help="env SERIALBATCH_WORKERS")
    b.add_argument("--ci", choices=("normal", "bootstrap"), default="normal")
    b.add_argument("--resume", action="store_true", help="keep cells already in records.jsonl")
    b.add_argument("-o", "--output", required=True, help="output directory")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("gantt", help="export a solution as Gantt JSON or SVG")
    c.add_argument("instance")
    c.add_argument("solution")
    c.add_argument("--format", choices=("json", "svg"), default="json")
    c.add_argument("--force", action="store_true")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_gantt)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
