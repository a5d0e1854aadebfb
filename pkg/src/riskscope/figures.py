"""Report figures and delimited summaries.

The assess path can drop a status chart and a CSV of per-risk statuses
next to the rendered report, for pasting into review decks and for
spreadsheet triage.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

STATUS_ORDER = ["flagged", "indeterminate-flagged", "indeterminate-unflagged", "not-flagged"]
STATUS_COLORS = {
    "flagged": "#c0392b",
    "indeterminate-flagged": "#e67e22",
    "indeterminate-unflagged": "#f0c040",
    "not-flagged": "#27ae60",
}


def write_status_csv(report: dict, path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["risk_id", "name", "status", "entities", "stages"])
        for entry in report["risks"]:
            writer.writerow(
                [
                    entry["risk_id"],
                    entry["name"],
                    entry["status"],
                    "|".join(entry["entities"]),
                    "|".join(entry["stages"]),
                ]
            )
    return path


def write_status_figure(report: dict, path: Path) -> Path:
    entries = report["risks"]
    names = [entry["name"] for entry in entries][::-1]
    statuses = [entry["status"] for entry in entries][::-1]
    colors = [STATUS_COLORS.get(status, "#7f8c8d") for status in statuses]

    fig, ax = plt.subplots(figsize=(8, 0.6 * max(len(entries), 1) + 1.4))
    positions = range(len(entries))
    ax.barh(list(positions), [1] * len(entries), color=colors, edgecolor="none", height=0.6)
    ax.set_yticks(list(positions))
    ax.set_yticklabels(names)
    ax.set_xlim(0, 1.45)
    ax.set_xticks([])
    for pos, status in zip(positions, statuses):
        ax.text(1.02, pos, status, va="center", fontsize=9)
    ax.set_title(f"Potential risk statuses: {report['use_title']}")
    for spine in ("top", "right", "bottom"):
        ax.spines[spine].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_report_figures(report: dict, out_dir: Path) -> list[Path]:
    """Write ``risk-status.png`` and ``risk-status.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_status_figure(report, out_dir / "risk-status.png"),
        write_status_csv(report, out_dir / "risk-status.csv"),
    ]
