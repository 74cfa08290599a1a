"""Figure rendering for report paths: loss curves and metric bar charts.

Uses the non-interactive Agg backend so CLI runs work headless; every figure
lands next to its delimited (CSV/JSONL) counterpart.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricReport

METRIC_LABELS = ("BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR", "ROUGE-L")


def save_loss_curve(curve: list[tuple[int, float]], path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    steps = [s for s, _ in curve]
    losses = [l for _, l in curve]
    ax.plot(steps, losses, lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_report_figure(report: MetricReport, path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(METRIC_LABELS, report.values(), color="#4878b0")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    if title:
        ax.set_title(title)
    for tick in ax.get_xticklabels():
        tick.set_rotation(30)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_matrix_figure(
    reports: list[MetricReport], row_labels: list[str], path: str | Path
) -> None:
    """Grouped bars: one group per metric, one bar per setting."""
    fig, ax = plt.subplots(figsize=(9, 4))
    n_rows = len(reports)
    width = 0.8 / max(1, n_rows)
    for i, (rep, label) in enumerate(zip(reports, row_labels)):
        xs = [k + i * width for k in range(len(METRIC_LABELS))]
        ax.bar(xs, rep.values(), width=width, label=label)
    ax.set_xticks([k + 0.4 - width / 2 for k in range(len(METRIC_LABELS))])
    ax.set_xticklabels(METRIC_LABELS, rotation=20)
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    """Plain aligned text table."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
