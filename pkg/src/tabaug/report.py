"""Report emission: machine CSV, Markdown results table, run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

from .augment import BASELINE
from .harness import Report

CSV_COLUMNS = ("model", "technique", "category", "mean_auc", "sd_auc", "z", "p",
               "p_adj_significant", "runtime_seconds", "failed_runs")


def hhmmss(seconds: float) -> str:
    s = int(round(seconds))
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def _num(v: float, fmt: str) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, fmt)


def write_report_csv(report: Report, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            w.writerow([r.model, r.technique, r.category, _num(r.mean_auc, ".6f"),
                        _num(r.sd_auc, ".6f"), _num(r.z, ".6g"), _num(r.p, ".6g"),
                        int(r.significant), _num(r.runtime_seconds, ".3f"), r.failed_runs])


def render_table(report: Report) -> str:
    """Results table: a row per technique, a column per model plus overall mean.

    A leading ``*`` marks a cell whose difference from that model's baseline
    survives the Benjamini-Hochberg adjustment.
    """
    head = ["Category", "Technique", *report.models, "Overall mean", "Runtime (hh:mm:ss)"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    notes = set()
    for t in report.techniques:
        cells, means, sds, runtime, cat = [], [], [], 0.0, ""
        for m in report.models:
            try:
                r = report.row(m, t)
            except KeyError:
                cells.append("")
                continue
            cat = r.category
            mark = "*" if r.significant else ""
            flag = ""
            if r.degenerate:
                flag += "†"
                notes.add("† zero-variance comparison (p set by convention)")
            if r.unreliable:
                flag += "!"
                notes.add("! more than 5% of runs failed")
            cells.append(f"{mark}{_num(r.mean_auc, '.3f')} ({_num(r.sd_auc, '.3f')}){flag}")
            means.append(r.mean_auc)
            sds.append(r.sd_auc)
            runtime += r.runtime_seconds
        overall = (f"{_num(sum(means) / len(means), '.3f')} ({_num(sum(sds) / len(sds), '.3f')})"
                   if means else "")
        label = "Comparison baseline" if t == BASELINE.name else t
        lines.append("| " + " | ".join([cat, label, *cells, overall, hhmmss(runtime)]) + " |")
    out = "\n".join(lines) + "\n"
    out += "\nCells: mean AUC (SD across seeds). * significantly different from the baseline " \
           "after Benjamini-Hochberg adjustment.\n"
    for n in sorted(notes):
        out += f"{n}\n"
    return out


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def write_manifest(path, config_text: str, master_seed: int, report: Report, records,
                   extra: dict | None = None) -> None:
    failures = {f"{r.model}|{r.technique}": r.failed_runs for r in report.rows}
    doc = {
        "config_sha256": config_hash(config_text),
        "master_seed": master_seed,
        "effective_config": config_text,
        "n_records": len(records),
        "cell_failures": failures,
        "unreliable_cells": [f"{m}|{t}" for m, t in report.unreliable_cells],
        "records": [
            {"model": r.model, "technique": r.technique, "seed": r.seed,
             "fold_aucs": list(r.fold_aucs), "mean_auc": r.mean_auc, "failed": r.failed,
             "error": r.error, "replicated": r.replicated, "features": list(r.features)}
            for r in records
        ],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=True) + "\n", encoding="utf-8")


def write_fold_dumps(directory, records) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with (d / "fold_aucs.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "technique", "seed", "fold", "auc"])
        for r in records:
            for f, a in enumerate(r.fold_aucs):
                w.writerow([r.model, r.technique, r.seed, f, repr(a)])
