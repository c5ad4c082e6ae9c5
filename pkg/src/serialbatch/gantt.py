"""Gantt chart export: a JSON description and a matplotlib rendering."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .model import Instance, Schedule, timed_blocks  # noqa: E402

FAMILY_COLORS = ["#4c72b0", "#8172b2", "#55a868", "#c44e52", "#ccb974", "#64b5cd", "#dd8452", "#937860"]


def gantt_data(inst: Instance, sched: Schedule) -> dict[str, Any]:
    """Rows per machine with jobs, setups, family blocks and release markers."""
    blocks = timed_blocks(inst, sched)
    rows = []
    for m, seq in enumerate(sched.sequences, start=1):
        jobs, setups = [], []
        prev_end, prev_fam = 0, 0
        for jid in seq:
            job = inst.job(jid)
            s = sched.start[jid]
            tau = inst.setup(prev_fam, job.family)
            if tau:
                setups.append({"from": prev_fam, "to": job.family, "start": max(prev_end, s - tau), "end": s})
            jobs.append({"id": jid, "family": job.family, "start": s, "end": s + job.ptime,
                         "release": job.release})
            prev_end, prev_fam = s + job.ptime, job.family
        rows.append({
            "machine": m,
            "jobs": jobs,
            "setups": setups,
            "blocks": [
                {"family": b.family, "jobs": list(b.job_ids), "start": b.block_start, "end": b.block_end}
                for b in blocks if b.machine == m
            ],
            "releases": [{"job": j["id"], "time": j["release"]} for j in jobs],
        })
    makespan = max((j["end"] for r in rows for j in r["jobs"]), default=0)
    return {"makespan": makespan, "machines": rows}


def render_gantt(inst: Instance, sched: Schedule, path: str | Path, title: str | None = None) -> None:
    """Draw one row per machine; the output format follows the file suffix.

    SVG elements carry ids ``job-<id>``, ``setup-<m>-<k>``, ``release-<id>``
    and ``block-<m>-<k>``.
    """
    data = gantt_data(inst, sched)
    M = len(data["machines"])
    width = max(6.0, min(24.0, data["makespan"] / 4 + 3))
    fig, ax = plt.subplots(figsize=(width, 1.2 + 0.9 * M))
    for row in data["machines"]:
        y = M - row["machine"]
        for k, s in enumerate(row["setups"]):
            patch = Rectangle((s["start"], y + 0.15), s["end"] - s["start"], 0.5,
                              facecolor="none", edgecolor="0.4", hatch="///", linewidth=0.6)
            patch.set_gid(f"setup-{row['machine']}-{k}")
            ax.add_patch(patch)
        for j in row["jobs"]:
            color = FAMILY_COLORS[(j["family"] - 1) % len(FAMILY_COLORS)]
            patch = Rectangle((j["start"], y + 0.15), j["end"] - j["start"], 0.5,
                              facecolor=color, edgecolor="black", linewidth=0.8)
            patch.set_gid(f"job-{j['id']}")
            ax.add_patch(patch)
            ax.text((j["start"] + j["end"]) / 2, y + 0.4, str(j["id"]),
                    ha="center", va="center", fontsize=8, color="white")
            (tick,) = ax.plot([j["release"], j["release"]], [y + 0.05, y + 0.15], color="green", linewidth=1.2)
            tick.set_gid(f"release-{j['id']}")
        for k, b in enumerate(row["blocks"]):
            (bracket,) = ax.plot(
                [b["start"], b["start"], b["end"], b["end"]],
                [y + 0.72, y + 0.8, y + 0.8, y + 0.72],
                color="red", linestyle=":", linewidth=1.0,
            )
            bracket.set_gid(f"block-{row['machine']}-{k}")
    ax.set_xlim(0, max(1, data["makespan"]) * 1.02)
    ax.set_ylim(0, M)
    ax.set_yticks([M - m + 0.4 for m in range(1, M + 1)])
    ax.set_yticklabels([f"M{m}" for m in range(1, M + 1)])
    ax.set_xlabel("time")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
