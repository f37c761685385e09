"""Figure rendering for experiment outputs.

Pure post-processing of results that are already on disk as CSV; nothing here
feeds back into the simulation. All figures are written as PNG next to the
delimited output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

BUCKETS = ("near", "medium", "long")
TECH_COLORS = {"outstanding": "#1f77b4", "teleport": "#d62728"}


def render_experiment_figures(result, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [
        _aim_histogram(result, out / "aims_by_bucket.png"),
        _playtime_figure(result, out / "playtime.png"),
        _comfort_figure(result, out / "comfort_flow.png"),
    ]
    return [p for p in paths if p is not None]


def _aim_histogram(result, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(result.config.techniques), 1)
    x = np.arange(len(BUCKETS))
    for k, technique in enumerate(result.config.techniques):
        good = [s.report for s in result.by_technique(technique) if s.ok]
        if not good:
            continue
        means = [np.mean([getattr(r, f"aims_{b}") for r in good]) for b in BUCKETS]
        ax.bar(x + k * width, means, width, label=technique,
               color=TECH_COLORS.get(technique))
    ax.set_xticks(x + width / 2)
    ax.set_xticklabels([f"{b}\n({lo})" for b, lo in
                        zip(BUCKETS, ("<=2 m", "2-40 m", ">40 m"))])
    ax.set_ylabel("aiming operations per session")
    ax.set_title("Aim distance distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _playtime_figure(result, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, technique in enumerate(result.config.techniques):
        good = [s for s in result.by_technique(technique) if s.ok]
        if not good:
            continue
        times = [s.report.playtime_s for s in good]
        ax.bar(k, np.mean(times), 0.6, color=TECH_COLORS.get(technique), alpha=0.7)
        ax.plot([k] * len(times), times, "k.", ms=4)
    ax.set_xticks(range(len(result.config.techniques)))
    ax.set_xticklabels(result.config.techniques)
    ax.set_ylabel("playtime (s)")
    ax.set_title("Session playtime (dots: individual seeds)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _comfort_figure(result, path: Path) -> Path | None:
    series = {}
    for technique in result.config.techniques:
        good = [s for s in result.by_technique(technique) if s.ok and s.comfort_series]
        if good:
            series[technique] = good[0]
    if not series:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    for technique, cell in series.items():
        flows = np.asarray(cell.comfort_series)
        ticks = np.arange(len(flows)) / result.config.tick_rate
        ax.plot(ticks, flows, lw=0.7, label=f"{technique} (seed {cell.seed})",
                color=TECH_COLORS.get(technique))
    ax.set_xlabel("sim time (s)")
    ax.set_ylabel("view flow (body heights / s)")
    ax.set_title("Comfort proxy: normalized optical flow over a session")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_world_figure(world, path) -> Path:
    """Top-down map: terrain relief, course, targets and obstacles."""
    fig, ax = plt.subplots(figsize=(6, 6))
    extent = (0, world.size_x, 0, world.size_z)
    ax.imshow(world.heights, origin="lower", extent=extent, cmap="terrain")
    if world.course:
        xs = [p.x for p in world.course]
        zs = [p.z for p in world.course]
        ax.plot(xs, zs, "w-", lw=1.2, label="course")
    if world.targets:
        ax.plot([t.x for t in world.targets], [t.z for t in world.targets],
                "r.", ms=10, label="targets")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("z (m)")
    ax.set_title(f"world seed={world.seed}")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
