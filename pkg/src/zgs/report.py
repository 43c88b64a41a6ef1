"""Evaluation outputs: delimited results, a provenance report, and
rendered figures saved next to them."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import ComparisonReport, LooResult, RatioSkipped
from .registry import format_real

RESULTS_FILE = "results.csv"
REPORT_FILE = "report.json"
RATIO_FILE = "ratio_results.csv"


def _fmt(value) -> str:
    return format_real(value) if value is not None else ""


def write_results_csv(report: ComparisonReport, out_dir) -> Path:
    """results.csv: config_id,target_dataset,tau,top1,top5."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RESULTS_FILE
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config_id", "target_dataset", "tau", "top1", "top5"])
        for cid, fold in report.folds:
            writer.writerow(
                [
                    cid,
                    fold.target_dataset_id,
                    format_real(fold.tau),
                    _fmt(fold.topk_accuracy.get(1)),
                    _fmt(fold.topk_accuracy.get(5)),
                ]
            )
    return path


def write_report_json(report: ComparisonReport, out_dir, extra=None) -> Path:
    """report.json: config echoes (every default included) plus means."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "configs": {cid: asdict(cfg) for cid, cfg in report.configs.items()},
        "mean_tau": report.mean_tau,
        "folds": [
            {"config_id": cid, **asdict(fold)} for cid, fold in report.folds
        ],
        "notes": report.notes,
    }
    if extra:
        payload.update(extra)
    path = out / REPORT_FILE
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def render_comparison_figure(report: ComparisonReport, out_dir) -> Path:
    """Mean tau per strategy and per-target breakdown, one PNG."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cids = list(report.configs)
    fig, (ax_mean, ax_per) = plt.subplots(1, 2, figsize=(11, 4))

    means = [report.mean_tau.get(cid, float("nan")) for cid in cids]
    ax_mean.bar(range(len(cids)), means, color="tab:blue")
    ax_mean.set_xticks(range(len(cids)))
    ax_mean.set_xticklabels(cids, rotation=20, ha="right", fontsize=8)
    ax_mean.set_ylabel("mean Pearson correlation")
    ax_mean.set_title("Strategy comparison")
    ax_mean.axhline(0.0, color="gray", linewidth=0.5)

    targets = sorted({fold.target_dataset_id for _, fold in report.folds})
    width = 0.8 / max(len(cids), 1)
    for i, cid in enumerate(cids):
        by_target = {f.target_dataset_id: f.tau for c, f in report.folds if c == cid}
        xs = np.arange(len(targets)) + i * width
        ax_per.bar(
            xs,
            [by_target.get(t, float("nan")) for t in targets],
            width=width,
            label=cid,
        )
    ax_per.set_xticks(np.arange(len(targets)) + 0.4 - width / 2)
    ax_per.set_xticklabels(targets, rotation=60, ha="right", fontsize=7)
    ax_per.set_ylabel("per-target correlation")
    ax_per.set_title("Per-dataset breakdown")
    ax_per.legend(fontsize=7)

    fig.tight_layout()
    path = out / "comparison.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_topk_figure(report: ComparisonReport, out_dir, k: int = 5) -> Path:
    """Mean fine-tuned accuracy of the top-k selected models per strategy."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cids = list(report.configs)
    fig, ax = plt.subplots(figsize=(6, 4))
    values = []
    for cid in cids:
        folds = report.fold_results(cid)
        tops = [f.topk_accuracy[k] for f in folds if k in f.topk_accuracy]
        values.append(float(np.mean(tops)) if tops else float("nan"))
    ax.bar(range(len(cids)), values, color="tab:green")
    ax.set_xticks(range(len(cids)))
    ax.set_xticklabels(cids, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(f"mean accuracy of top-{k} models")
    ax.set_title(f"Top-{k} selection quality")
    fig.tight_layout()
    path = out / "topk.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_ratio_csv(per_target, out_dir) -> Path:
    """ratio_results.csv: ratio,target_dataset,tau (empty tau when skipped)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RATIO_FILE
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ratio", "target_dataset", "tau", "note"])
        for target, results in sorted(per_target.items()):
            for ratio in sorted(results):
                entry = results[ratio]
                if isinstance(entry, RatioSkipped):
                    writer.writerow([format_real(ratio), target, "", entry.reason])
                else:
                    writer.writerow([format_real(ratio), target, format_real(entry.tau), ""])
    return path


def render_ratio_figure(per_target, out_dir) -> Path:
    """Mean tau as a function of the training-history ratio."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ratios = sorted({r for results in per_target.values() for r in results})
    means = []
    for ratio in ratios:
        taus = [
            results[ratio].tau
            for results in per_target.values()
            if ratio in results and isinstance(results[ratio], LooResult)
        ]
        means.append(float(np.mean(taus)) if taus else float("nan"))
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(ratios, means, marker="o", color="tab:orange")
    ax.set_xlabel("training-history ratio")
    ax.set_ylabel("mean Pearson correlation")
    ax.set_title("Effect of input ratio")
    ax.set_ylim(-1.05, 1.05)
    fig.tight_layout()
    path = out / "ratio.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
