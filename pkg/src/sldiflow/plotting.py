"""Gantt records and matplotlib figures for bakery schedules."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sldiflow.bakery import BATCH_MACHINES, MACHINES, N_MACHINES, ProductIndexing, finish, start  # noqa: E402


@dataclass(frozen=True)
class GanttRecord:
    product: int  # 1-based position k in the schedule
    machine: int  # 1-based
    start: float  # minutes
    end: float
    type: int
    batch: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GanttBar:
    machine: int
    start: float
    end: float
    type: int
    batch: int
    products: tuple  # 1-based positions covered by this rectangle


def gantt_records(idx: ProductIndexing, xs) -> list[GanttRecord]:
    """One record per (product, machine), ordered by product then machine.

    Times are shifted so the first mixer entry is at 0.
    """
    xs = np.asarray(xs, dtype=float)
    if idx.Q == 0:
        return []
    origin = xs[0, start(1)]
    out = []
    for k in range(idx.Q):
        for m in range(1, N_MACHINES + 1):
            out.append(GanttRecord(
                k + 1, m,
                float(xs[k, start(m)] - origin), float(xs[k, finish(m)] - origin),
                idx.types[k], idx.batches[k],
            ))
    return out


def records_makespan(records: list[GanttRecord]) -> float:
    if not records:
        return 0.0
    first = min(r.start for r in records if r.product == 1 and r.machine == 1)
    last_k = max(r.product for r in records)
    end = max(r.end for r in records if r.product == last_k and r.machine == N_MACHINES)
    return end - first


def gantt_bars(records: list[GanttRecord], tol: float = 1e-9) -> list[GanttBar]:
    """Rectangles to draw: proofer and oven loads of one batch share a single bar."""
    bars = []
    for m in range(1, N_MACHINES + 1):
        lane = [r for r in records if r.machine == m]
        lane.sort(key=lambda r: r.product)
        for r in lane:
            if bars and m in BATCH_MACHINES:
                prev = bars[-1]
                if (prev.machine == m and prev.type == r.type and prev.batch == r.batch
                        and abs(prev.start - r.start) <= tol and abs(prev.end - r.end) <= tol):
                    bars[-1] = GanttBar(m, prev.start, prev.end, prev.type, prev.batch, prev.products + (r.product,))
                    continue
            bars.append(GanttBar(m, r.start, r.end, r.type, r.batch, (r.product,)))
    return bars


def render_gantt(records: list[GanttRecord], makespan: float, path, type_names=None, title: str | None = None):
    """Write a Gantt chart (hours on the x axis, one lane per machine) to ``path``."""
    bars = gantt_bars(records)
    types = sorted({b.type for b in bars})
    cmap = plt.get_cmap("tab10")
    colors = {j: cmap((j - 1) % 10) for j in types}

    fig, ax = plt.subplots(figsize=(11, 3.6))
    edge = 0.3 if len(bars) < 400 else 0.0  # outlines would swamp thin bars
    for b in bars:
        ax.broken_barh([(b.start / 60, (b.end - b.start) / 60)], (N_MACHINES - b.machine - 0.4, 0.8),
                       facecolors=colors[b.type], edgecolor="black", linewidth=edge)
    ax.axvline(makespan / 60, color="black", linestyle="--", linewidth=1)
    ax.set_yticks(range(N_MACHINES))
    ax.set_yticklabels(list(reversed(MACHINES)))
    ax.set_xlabel("time [h]")
    ax.set_xlim(left=0, right=max(makespan / 60 * 1.02, 1e-3))
    ax.set_ylim(-0.6, N_MACHINES - 0.4)
    if types:
        names = type_names or {}
        handles = [plt.Rectangle((0, 0), 1, 1, color=colors[j]) for j in types]
        ax.legend(handles, [names.get(j, f"type {j}") for j in types],
                  loc="upper left", bbox_to_anchor=(1.0, 1.0), fontsize=8, frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return len(bars)


def render_bench(rows: list[dict], path):
    """Bar chart of per-schedule time by method, log scale."""
    methods = [r["method"] for r in rows]
    means = [r["mean_s"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(methods, means, color="0.4")
    ax.set_yscale("log")
    ax.set_ylabel("seconds per schedule")
    for x, y in enumerate(means):
        ax.annotate(f"{y:.2g}", (x, y), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
