from __future__ import annotations

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdecode.core import AccountingMode, Category, Language, Scheme, StepCost
from fairdecode.errors import DomainError
from fairdecode.reports import (
    ALL,
    FORMATS,
    aggregate,
    emit_report,
    plot_documents,
    render_csv,
    render_table,
)

from oracles import aggregate_mismatches, oracle_aggregate, random_results, synth_result


def rows_of(results):
    return [r.to_json() for r in results]


class TestAggregationOracle:
    def test_small_fixed_population(self):
        results = [
            synth_result(prompt_id="a", bias=0.2, utility=0.8,
                         steps=[StepCost(fp_g=2, fp_j=1)]),
            synth_result(prompt_id="b", bias=0.4, utility=0.6,
                         steps=[StepCost(fp_g=8, fp_j=8, candidate_batches=(8,))],
                         scheme=Scheme.SELECT),
            synth_result(prompt_id="c", status="failed",
                         aborted=StepCost(fp_g=3, fp_j=1)),
            synth_result(prompt_id="d", category=Category.RACE, bias=1.0, utility=0.0),
        ]
        report = aggregate(results)
        assert aggregate_mismatches(report, oracle_aggregate(rows_of(results))) == []

    @pytest.mark.parametrize("seed,count", [(0, 1), (1, 13), (2, 120)])
    def test_random_populations(self, seed, count):
        results = random_results(random.Random(seed), count)
        report = aggregate(results)
        assert aggregate_mismatches(report, oracle_aggregate(rows_of(results))) == []

    @given(seed=st.integers(min_value=0, max_value=10_000), count=st.integers(1, 60))
    def test_property_random_populations(self, seed, count):
        results = random_results(random.Random(seed), count)
        report = aggregate(results)
        assert aggregate_mismatches(report, oracle_aggregate(rows_of(results))) == []

    def test_alpha_override_rereads_composites(self):
        results = random_results(random.Random(3), 40)
        report = aggregate(results, alpha_report=0.9)
        expected = oracle_aggregate(rows_of(results), alpha_override=0.9)
        assert aggregate_mismatches(report, expected) == []

    def test_accounting_override_rereads_ledgers(self):
        results = random_results(random.Random(4), 40)
        report = aggregate(results, accounting_mode=AccountingMode.NATIVE)
        expected = oracle_aggregate(rows_of(results), mode_override="native")
        assert aggregate_mismatches(report, expected) == []

    def test_per_result_alpha_is_honored(self):
        results = [
            synth_result(prompt_id="a", bias=1.0, utility=0.0, alpha_report=0.5),
            synth_result(prompt_id="b", model="m2", bias=1.0, utility=0.0, alpha_report=0.8),
        ]
        report = aggregate(results)
        key_a = ("m", "baseline", "english", ALL)
        key_b = ("m2", "baseline", "english", ALL)
        assert report.cells[key_a].mean_composite == 0.5
        assert report.cells[key_b].mean_composite == 0.8

    def test_empty_results_rejected(self):
        with pytest.raises(DomainError):
            aggregate([])

    def test_failures_never_pollute_quality_means(self):
        results = [
            synth_result(prompt_id="a", bias=0.4, utility=0.4),
            synth_result(prompt_id="b", status="failed",
                         steps=None, aborted=StepCost(fp_g=5, fp_j=2)),
        ]
        cell = aggregate(results).cells[("m", "baseline", "english", ALL)]
        assert cell.n_items == 1 and cell.n_failures == 1
        assert cell.mean_bias == 0.4
        assert cell.failed_fp_g == 5 and cell.failed_fp_j == 2

    def test_all_failed_cell_is_all_none(self):
        results = [synth_result(status="failed")]
        cell = aggregate(results).cells[("m", "baseline", "english", ALL)]
        assert cell.n_items == 0 and cell.n_failures == 1
        assert cell.mean_bias is None and cell.mean_r is None and cell.gate_phi is None

    def test_gate_phi_spans_items(self):
        results = [
            synth_result(prompt_id="a", scheme=Scheme.SELECT_OPT, words=10,
                         steps=[StepCost(fp_g=2)] * 10, gate_fires=3),
            synth_result(prompt_id="b", scheme=Scheme.SELECT_OPT, words=10,
                         steps=[StepCost(fp_g=2)] * 10, gate_fires=1),
        ]
        cell = aggregate(results).cells[("m", "select_opt", "english", ALL)]
        assert cell.gate_phi == 4 / 20


class TestRendering:
    def fixture_mean_bias_rounding(self):
        results = []
        for i in range(50):
            results.append(synth_result(prompt_id=f"a{i}", bias=0.5, utility=0.5))
            results.append(synth_result(prompt_id=f"b{i}", bias=0.544, utility=0.5))
        return results

    def test_csv_three_decimals(self):
        report = aggregate(self.fixture_mean_bias_rounding())
        csv_text = render_csv(report)
        lines = csv_text.splitlines()
        assert lines[0].split(",") == [
            "model", "scheme", "language", "category", "mean_bias", "mean_utility",
            "mean_composite", "mean_r_g", "mean_r_j", "mean_r", "gate_phi",
            "n_items", "n_failures", "failed_fp_g", "failed_fp_j",
        ]
        row = next(l for l in lines[1:] if ",all," in l)
        cells = row.split(",")
        assert cells[4] == "0.522"
        assert cells[11] == "100"

    def test_csv_has_category_and_rollup_rows(self):
        results = [
            synth_result(prompt_id="a"),
            synth_result(prompt_id="b", category=Category.AGE),
        ]
        lines = render_csv(aggregate(results)).splitlines()[1:]
        cats = [l.split(",")[3] for l in lines]
        assert sorted(cats) == ["age", "all", "gender"]

    def test_csv_empty_cells_for_none(self):
        lines = render_csv(aggregate([synth_result(status="failed")])).splitlines()
        row = lines[1].split(",")
        assert row[4:11] == [""] * 7

    def test_table_headline_only_and_dashes(self):
        results = [
            synth_result(prompt_id="a"),
            synth_result(prompt_id="b", category=Category.AGE),
            synth_result(prompt_id="c", model="m2", status="failed"),
        ]
        table = render_table(aggregate(results))
        lines = table.splitlines()
        assert lines[0].split() == [
            "model", "scheme", "language", "bias", "utility", "composite",
            "r_g", "r_j", "r", "phi", "n", "fail",
        ]
        assert set(lines[1]) <= {"-", " "}
        body = lines[2:]
        # one headline row per (model, scheme, language); no category rows
        assert len(body) == 2
        failed_row = next(l for l in body if l.startswith("m2"))
        assert " - " in failed_row

    def test_phi_column_rendered_for_gated(self):
        results = [synth_result(scheme=Scheme.SELECT_OPT, words=4,
                                steps=[StepCost(fp_g=2)] * 4, gate_fires=1)]
        table = render_table(aggregate(results))
        assert "0.250" in table


class TestPlotDocuments:
    def build_report(self):
        results = [
            synth_result(prompt_id="a", bias=0.5, utility=0.7),
            synth_result(prompt_id="b", scheme=Scheme.SELECT, bias=0.9, utility=0.6,
                         steps=[StepCost(fp_g=8, fp_j=8, candidate_batches=(8,))]),
            synth_result(prompt_id="c", scheme=Scheme.SELECT_OPT, words=5,
                         steps=[StepCost(fp_g=2)] * 5, gate_fires=2, bias=0.8, utility=0.65),
            synth_result(prompt_id="d", category=Category.RACE, bias=0.3, utility=0.7),
        ]
        return aggregate(results)

    def test_five_documents(self):
        docs = plot_documents(self.build_report())
        assert sorted(docs) == [
            "plot_bias_utility.json",
            "plot_category_heatmap.json",
            "plot_gate_firing.json",
            "plot_overhead_gain.json",
            "plot_scheme_bars.json",
        ]

    def test_gain_is_relative_to_baseline_composite(self):
        docs = plot_documents(self.build_report())
        points = {p["scheme"]: p for p in docs["plot_overhead_gain.json"]["points"]}
        assert points["baseline"]["gain"] == 0.0
        baseline_comp = 0.5 * (0.5 + 0.3) / 2 + 0.5 * (0.7 + 0.7) / 2
        select_comp = 0.5 * 0.9 + 0.5 * 0.6
        assert points["select"]["gain"] == pytest.approx(select_comp - baseline_comp, abs=1e-12)

    def test_firing_doc_lists_only_gated_cells(self):
        docs = plot_documents(self.build_report())
        bars = docs["plot_gate_firing.json"]["bars"]
        assert [b["scheme"] for b in bars] == ["select_opt"]
        assert bars[0]["phi"] == 2 / 5

    def test_heatmap_covers_categories_not_rollups(self):
        docs = plot_documents(self.build_report())
        cats = {c["category"] for c in docs["plot_category_heatmap.json"]["cells"]}
        assert ALL not in cats
        assert {"gender", "race"} <= cats


class TestEmission:
    def test_emit_each_format(self, tmp_path):
        report = aggregate([synth_result()])
        assert [p.name for p in emit_report(report, "table", tmp_path / "t")] == ["report.txt"]
        assert [p.name for p in emit_report(report, "csv", tmp_path / "c")] == ["report.csv"]
        plot_paths = emit_report(report, "plot-data", tmp_path / "p")
        assert sorted(p.name for p in plot_paths) == [
            "plot_bias_utility.json",
            "plot_category_heatmap.json",
            "plot_gate_firing.json",
            "plot_overhead_gain.json",
            "plot_scheme_bars.json",
        ]
        for p in plot_paths:
            json.loads(p.read_text())

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(DomainError):
            emit_report(aggregate([synth_result()]), "pdf", tmp_path)
        assert FORMATS == ("table", "csv", "plot-data")

    def test_emission_is_byte_stable(self, tmp_path):
        results = random_results(random.Random(7), 30)
        for fmt in FORMATS:
            first = emit_report(aggregate(results), fmt, tmp_path / "one" / fmt)
            second = emit_report(aggregate(results), fmt, tmp_path / "two" / fmt)
            for a, b in zip(first, second):
                assert a.read_bytes() == b.read_bytes()

    def test_languages_kept_apart(self):
        results = [
            synth_result(prompt_id="a", bias=0.2, utility=0.2),
            synth_result(prompt_id="b", language=Language.URDU, bias=0.8, utility=0.8),
        ]
        report = aggregate(results)
        assert report.cells[("m", "baseline", "english", ALL)].mean_bias == 0.2
        assert report.cells[("m", "baseline", "urdu", ALL)].mean_bias == 0.8
