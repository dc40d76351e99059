"""Metric aggregation and report emission.

Cells roll results up by model, scheme, language and category (with an
"all" pseudo-category for the headline rows). Failures never enter the
score means; they are counted, and their sunk cost is summed apart.
Every emitted byte is deterministic for a given report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bench import RunResult
from .core import AccountingMode, Scheme
from .errors import DomainError

CellKey = tuple[str, str, str, str]  # (model, scheme, language, category | "all")

FORMATS = ("table", "csv", "plot-data")

ALL = "all"


@dataclass
class CellStats:
    n_items: int = 0
    n_failures: int = 0
    mean_bias: float | None = None
    mean_utility: float | None = None
    mean_composite: float | None = None
    mean_r_g: float | None = None
    mean_r_j: float | None = None
    mean_r: float | None = None
    gate_phi: float | None = None
    failed_fp_g: int = 0
    failed_fp_j: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AggregateReport:
    cells: dict[CellKey, CellStats]

    def sorted_keys(self) -> list[CellKey]:
        return sorted(self.cells)

    def headline_keys(self) -> list[CellKey]:
        return [k for k in self.sorted_keys() if k[3] == ALL]


class _Acc:
    def __init__(self):
        self.ok = 0
        self.fail = 0
        self.bias = 0.0
        self.util = 0.0
        self.comp = 0.0
        self.r_g = 0.0
        self.r_j = 0.0
        self.fires = 0
        self.gated_words = 0
        self.failed_g = 0
        self.failed_j = 0

    def add(self, r: RunResult, alpha: float, mode: AccountingMode) -> None:
        if not r.ok:
            self.fail += 1
            self.failed_g += r.fp_g(mode)
            self.failed_j += r.fp_j
            if r.aborted_cost:
                self.failed_g += r.aborted_cost.fp_g_in(mode)
                self.failed_j += r.aborted_cost.fp_j
            return
        self.ok += 1
        self.bias += r.bias
        self.util += r.utility
        self.comp += alpha * r.bias + (1.0 - alpha) * r.utility
        self.r_g += r.fp_g(mode) / r.words
        self.r_j += r.fp_j / r.words
        if r.gate_fires is not None:
            self.fires += r.gate_fires
            self.gated_words += r.words

    def stats(self) -> CellStats:
        s = CellStats(n_items=self.ok, n_failures=self.fail,
                      failed_fp_g=self.failed_g, failed_fp_j=self.failed_j)
        if self.ok:
            s.mean_bias = self.bias / self.ok
            s.mean_utility = self.util / self.ok
            s.mean_composite = self.comp / self.ok
            s.mean_r_g = self.r_g / self.ok
            s.mean_r_j = self.r_j / self.ok
            s.mean_r = s.mean_r_g + s.mean_r_j
        if self.gated_words:
            s.gate_phi = self.fires / self.gated_words
        return s


def aggregate(
    results: list[RunResult],
    *,
    alpha_report: float | None = None,
    accounting_mode: AccountingMode | None = None,
) -> AggregateReport:
    """Arithmetic means per cell, plus the "all" category rollup.

    By default each result is read under its own alpha_report and
    accounting mode; pass overrides to re-read one run both ways.
    """
    if not results:
        raise DomainError("nothing to aggregate")
    accs: dict[CellKey, _Acc] = {}
    for r in results:
        alpha = alpha_report if alpha_report is not None else r.config.get("alpha_report", 0.5)
        mode = accounting_mode or r.accounting_mode
        for cat in (r.category.value, ALL):
            key = (r.model, r.scheme.value, r.language.value, cat)
            accs.setdefault(key, _Acc()).add(r, alpha, mode)
    return AggregateReport(cells={k: a.stats() for k, a in accs.items()})


# -- emission ------------------------------------------------------------------

def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.3f}"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def render_table(report: AggregateReport) -> str:
    headers = ["model", "scheme", "language", "bias", "utility", "composite",
               "r_g", "r_j", "r", "phi", "n", "fail"]
    rows = []
    for key in report.headline_keys():
        c = report.cells[key]
        rows.append([
            key[0], key[1], key[2],
            _fmt(c.mean_bias), _fmt(c.mean_utility), _fmt(c.mean_composite),
            _fmt(c.mean_r_g), _fmt(c.mean_r_j), _fmt(c.mean_r), _fmt(c.gate_phi),
            str(c.n_items), str(c.n_failures),
        ])
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out) + "\n"


def render_csv(report: AggregateReport) -> str:
    cols = ["model", "scheme", "language", "category", "mean_bias", "mean_utility",
            "mean_composite", "mean_r_g", "mean_r_j", "mean_r", "gate_phi",
            "n_items", "n_failures", "failed_fp_g", "failed_fp_j"]
    lines = [",".join(cols)]
    for key in report.sorted_keys():
        c = report.cells[key]
        lines.append(",".join([
            key[0], key[1], key[2], key[3],
            _csv_cell(c.mean_bias), _csv_cell(c.mean_utility), _csv_cell(c.mean_composite),
            _csv_cell(c.mean_r_g), _csv_cell(c.mean_r_j), _csv_cell(c.mean_r),
            _csv_cell(c.gate_phi), str(c.n_items), str(c.n_failures),
            str(c.failed_fp_g), str(c.failed_fp_j),
        ]))
    return "\n".join(lines) + "\n"


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def plot_documents(report: AggregateReport) -> dict[str, dict]:
    """Plot-ready data, one document per figure family."""
    headline = [(k, report.cells[k]) for k in report.headline_keys()]
    by_category = [(k, report.cells[k]) for k in report.sorted_keys() if k[3] != ALL]

    bars = {
        "kind": "scheme_bars",
        "series": [
            {"model": k[0], "scheme": k[1], "language": k[2],
             "bias": c.mean_bias, "utility": c.mean_utility}
            for k, c in headline
        ],
    }
    heatmap = {
        "kind": "category_heatmap",
        "cells": [
            {"model": k[0], "scheme": k[1], "language": k[2], "category": k[3],
             "bias": c.mean_bias}
            for k, c in by_category
        ],
    }
    scatter = {
        "kind": "bias_utility_scatter",
        "points": [
            {"model": k[0], "scheme": k[1], "language": k[2],
             "utility": c.mean_utility, "bias": c.mean_bias}
            for k, c in headline
        ],
    }
    baseline_comp = {
        (k[0], k[2]): c.mean_composite
        for k, c in headline if k[1] == Scheme.BASELINE.value
    }
    overhead = {
        "kind": "overhead_vs_gain",
        "points": [
            {"model": k[0], "scheme": k[1], "language": k[2], "r": c.mean_r,
             "composite": c.mean_composite,
             "gain": (
                 None
                 if c.mean_composite is None or baseline_comp.get((k[0], k[2])) is None
                 else c.mean_composite - baseline_comp[(k[0], k[2])]
             )}
            for k, c in headline
        ],
    }
    firing = {
        "kind": "gate_firing_rates",
        "bars": [
            {"model": k[0], "scheme": k[1], "language": k[2], "phi": c.gate_phi}
            for k, c in headline if c.gate_phi is not None
        ],
    }
    return {
        "plot_scheme_bars.json": bars,
        "plot_category_heatmap.json": heatmap,
        "plot_bias_utility.json": scatter,
        "plot_overhead_gain.json": overhead,
        "plot_gate_firing.json": firing,
    }


def emit_report(report: AggregateReport, format: str, outdir: str | Path) -> list[Path]:
    """Write the chosen format under outdir; returns the written paths."""
    if format not in FORMATS:
        raise DomainError(f"unknown report format {format!r}; expected one of {FORMATS}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if format == "table":
        path = outdir / "report.txt"
        path.write_text(render_table(report), encoding="utf-8")
        written.append(path)
    elif format == "csv":
        path = outdir / "report.csv"
        path.write_text(render_csv(report), encoding="utf-8")
        written.append(path)
    else:
        for name, doc in plot_documents(report).items():
            path = outdir / name
            path.write_text(_dump(doc), encoding="utf-8")
            written.append(path)
    return written
