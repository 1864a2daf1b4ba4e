"""Evaluation reports: JSON + delimited + aligned text tables, plus figures.

Every eval command writes the same bundle: <name>.json for machines,
<name>.csv for spreadsheets, <name>.txt for the terminal, and one or more
PNG figures rendered with matplotlib.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# Published reference values reported alongside computed metrics. These are
# live-model numbers; nothing in the offline suites is expected to hit them.
REFERENCE_RESULTS = {
    "clustrec": {
        "method": "reference (text-embedding-3-large)",
        "ari": 0.516,
        "nmi": 0.732,
        "r_c@80": 2.4,
        "r_v@80": 0.051,
    },
    "clustrec_random": {
        "method": "reference (random assignment)",
        "ari": 0.00,
        "nmi": 0.153,
        "r_c@80": 20.4,
        "r_v@80": 0.41,
    },
    "queries": {
        "original": {20: 0.43, 70: 0.36, 100: 0.33, 200: 0.27},
        "title": {20: 0.45, 70: 0.38, 100: 0.36, 200: 0.30},
        "title_cluster": {20: 0.50, 70: 0.43, 100: 0.41, 200: 0.33},
    },
    "scitoc": {
        "gpt4o_direct": 0.826,
        "gpt4o_kn": 0.871,
        "mixtral_direct": 0.753,
        "mixtral_kn": 0.883,
    },
    "filter_accuracy": 0.988,
    "filter_precision": 0.877,
    "thematic_assignment_accuracy": 0.952,
    "header_coverage": 0.716,
    "judge_agreement": 0.87,
    "judge_kappa": 0.63,
}


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if value is None:
        return "-"
    return str(value)


def aligned_table(columns: Sequence[str], rows: Sequence[Mapping]) -> str:
    """Plain-text table with columns padded to their widest cell."""
    grid = [[_format_cell(row.get(col)) for col in columns] for row in rows]
    widths = [
        max(len(col), *(len(line[i]) for line in grid)) if grid else len(col)
        for i, col in enumerate(columns)
    ]
    header = "  ".join(col.ljust(widths[i]) for i, col in enumerate(columns))
    rule = "  ".join("-" * w for w in widths)
    body = ["  ".join(line[i].ljust(widths[i]) for i in range(len(columns))) for line in grid]
    return "\n".join([header, rule, *body]) + "\n"


def write_report(
    out_dir: str | Path,
    name: str,
    columns: Sequence[str],
    rows: Sequence[Mapping],
    meta: Mapping | None = None,
) -> dict[str, Path]:
    """Write <name>.json / .csv / .txt under out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / f"{name}.json",
        "csv": out / f"{name}.csv",
        "txt": out / f"{name}.txt",
    }
    payload = {"rows": [dict(r) for r in rows]}
    if meta:
        payload["meta"] = dict(meta)
    paths["json"].write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")

    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col) for col in columns})

    paths["txt"].write_text(aligned_table(columns, rows), encoding="utf-8")
    return paths


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def line_figure(
    path: str | Path,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str,
    xlabel: str,
    ylabel: str,
) -> Path:
    fig, ax = _new_axes(title, xlabel, ylabel)
    for label, ys in series.items():
        ax.plot(x, ys, marker="o", label=label)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def bar_figure(
    path: str | Path,
    labels: Sequence[str],
    values: Sequence[float],
    title: str,
    ylabel: str,
) -> Path:
    fig, ax = _new_axes(title, "", ylabel)
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
