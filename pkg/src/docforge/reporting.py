"""Benchmark report output: CSV, aligned text table, and bar-chart figures.

CSV bytes are deterministic for identical inputs (fixed column order, fixed
float formatting, rows pre-sorted by the runner), so repeated runs against a
deterministic backend can be compared byte-for-byte.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evalkit import BenchmarkRow

CSV_COLUMNS = [
    "config_label",
    "k",
    "variant",
    "recall",
    "mrr",
    "accuracy",
    "mean_confidence",
    "n",
    "failures",
]

CSV_NAME = "report.csv"
TABLE_NAME = "report.txt"
RETRIEVAL_FIGURE = "retrieval.png"
GENERATION_FIGURE = "generation.png"


def _fmt(value, decimals: int = 4) -> str:
    if value is None:
        return ""
    return f"{value:.{decimals}f}"


def row_cells(row: BenchmarkRow) -> list[str]:
    if row.error is not None:
        n = ""
        failures = f"error: {row.error}"
        recall = mrr = accuracy = conf = ""
    else:
        recall = _fmt(row.retrieval.recall_at_k)
        mrr = _fmt(row.retrieval.mrr_at_k)
        accuracy = _fmt(row.generation.accuracy) if row.generation else ""
        conf = _fmt(row.generation.mean_confidence) if row.generation else ""
        n = str(row.retrieval.n)
        fail_count = len(row.retrieval.failures) + (
            len(row.generation.failures) if row.generation else 0
        )
        failures = str(fail_count)
    return [row.config_label, str(row.k), row.variant, recall, mrr, accuracy, conf, n, failures]


def write_csv(rows: Sequence[BenchmarkRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row_cells(row))
    return path


def write_table(rows: Sequence[BenchmarkRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = [CSV_COLUMNS] + [row_cells(r) for r in rows]
    widths = [max(len(line[i]) for line in grid) for i in range(len(CSV_COLUMNS))]
    lines = []
    for line_no, cells in enumerate(grid):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip())
        if line_no == 0:
            lines.append("  ".join("-" * w for w in widths))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def render_figures(rows: Sequence[BenchmarkRow], out_dir: str | Path) -> list[Path]:
    """Render grouped bar charts for retrieval and (when present) generation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    retrieval_rows = [r for r in rows if r.retrieval is not None]
    if retrieval_rows:
        fig_path = out_dir / RETRIEVAL_FIGURE
        _bar_chart(
            fig_path,
            labels=[r.config_label for r in retrieval_rows],
            series={
                "recall@k": [r.retrieval.recall_at_k for r in retrieval_rows],
                "MRR@k": [r.retrieval.mrr_at_k for r in retrieval_rows],
            },
            title="Retrieval by configuration",
        )
        written.append(fig_path)

    generation_rows = [r for r in rows if r.generation is not None]
    if generation_rows:
        fig_path = out_dir / GENERATION_FIGURE
        _bar_chart(
            fig_path,
            labels=[r.config_label for r in generation_rows],
            series={
                "accuracy": [r.generation.accuracy for r in generation_rows],
                "mean confidence": [
                    r.generation.mean_confidence or 0.0 for r in generation_rows
                ],
            },
            title="Generation by configuration",
        )
        written.append(fig_path)
    return written


def _bar_chart(path: Path, labels: list[str], series: dict[str, list[float]], title: str) -> None:
    x = range(len(labels))
    width = 0.8 / len(series)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.55 * len(labels) + 2), 4.0))
    for i, (name, values) in enumerate(series.items()):
        offsets = [xi + (i - (len(series) - 1) / 2) * width for xi in x]
        ax.bar(offsets, values, width=width, label=name)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report_bundle(rows: Sequence[BenchmarkRow], out_dir: str | Path) -> dict[str, Path]:
    """Write report.csv, report.txt, and figures into one directory."""
    out_dir = Path(out_dir)
    out = {
        "csv": write_csv(rows, out_dir / CSV_NAME),
        "table": write_table(rows, out_dir / TABLE_NAME),
    }
    for fig in render_figures(rows, out_dir):
        out[fig.stem] = fig
    return out
