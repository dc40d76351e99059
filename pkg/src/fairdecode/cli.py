"""Command-line entry point.

Human-readable summaries go to stdout; structured records go to files.
Exit codes: 0 success, 1 runtime failure, 2 usage error. Runtime
failures print one machine-parsable "error: <Class>: <message>" line
per problem on stderr.
"""

from __future__ import annotations

import functools
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import click

from .bench import MatrixOutcome, NamedBackend, ResultStore, RunMatrix, run_fill, run_matrix
from .contracts import Generator, Judge
from .core import (
    AccountingMode,
    Category,
    CostMeter,
    Kind,
    Language,
    PromptRecord,
    Scheme,
    SchemeConfig,
    composite_score,
    overhead_ratios,
)
from .dataset import bundled_dataset, load_dataset
from .errors import DatasetError, FairdecodeError
from .http import BackendConfig, HttpBackend
from .mock import MockBackend, MockScript
from .opengen import generate_open, measure_firing_rate
from .reports import FORMATS, aggregate, emit_report, render_table

SCHEME_NAMES = [s.value for s in Scheme]
BUILTIN_PREFIX = "builtin:"


def _fail(error: Exception) -> None:
    if isinstance(error, DatasetError):
        for problem in error.problems:
            click.echo(f"error: DatasetError: {problem}", err=True)
    else:
        click.echo(f"error: {type(error).__name__}: {error}", err=True)
    sys.exit(1)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FairdecodeError as e:
            _fail(e)
    return wrapper


def _load_any_dataset(source: str):
    try:
        if source.startswith(BUILTIN_PREFIX):
            return bundled_dataset(source[len(BUILTIN_PREFIX):])
        return load_dataset(source)
    except (FileNotFoundError, IsADirectoryError) as e:
        raise DatasetError([f"dataset not found: {source}"]) from e


def backend_options(fn):
    fn = click.option("--mock", "mock_path", type=click.Path(exists=True, dir_okay=False),
                      help="Scripted mock backend file (offline, deterministic).")(fn)
    fn = click.option("--model", "model_name", help="Model name on an OpenAI-compatible endpoint.")(fn)
    fn = click.option("--base-url", help="Endpoint base URL (or FAIRDECODE_API_BASE).")(fn)
    fn = click.option("--api-key", help="API key (or FAIRDECODE_API_KEY).")(fn)
    fn = click.option("--timeout", type=float, default=60.0, show_default=True,
                      help="Request timeout in seconds.")(fn)
    fn = click.option("--max-retries", type=int, default=3, show_default=True,
                      help="Retries for transient HTTP failures.")(fn)
    return fn


def config_options(fn):
    fn = click.option("-n", "--n", type=int, help="Best-of-N candidate count.")(fn)
    fn = click.option("-k", "--k-max", type=int, help="Max revision iterations.")(fn)
    fn = click.option("--tau", type=float, help="Early-stop bias threshold.")(fn)
    fn = click.option("--alpha-select", type=float, help="Composite weight for in-loop choices.")(fn)
    fn = click.option("--alpha-report", type=float, help="Composite weight for reported metrics.")(fn)
    fn = click.option("--t-words", type=int, help="Open-generation word budget.")(fn)
    fn = click.option("--reuse-gated-candidate/--no-reuse-gated-candidate", default=None,
                      help="Recycle the gate-tripping word as Select candidate 1.")(fn)
    fn = click.option("--judge-free-constitutional", is_flag=True, default=None,
                      help="Drop in-loop judge scoring from the self-audit loop.")(fn)
    return fn


def _collect_overrides(**flags) -> dict:
    return {k: v for k, v in flags.items() if v is not None}


def _named_backend(mock_path, model_name, base_url, api_key, timeout, max_retries) -> NamedBackend:
    if mock_path and model_name:
        raise click.UsageError("--mock and --model are mutually exclusive")
    if mock_path:
        script = MockScript.load(mock_path)
        return NamedBackend(name="mock", factory=lambda: MockBackend(script))
    if model_name or base_url or api_key:
        config = BackendConfig.from_env(
            model_name, base_url, api_key,
            request_timeout=timeout, max_retries=max_retries,
        )
        backend = HttpBackend(config)
        return NamedBackend(name=config.model_name, factory=lambda: backend)
    raise click.UsageError("one of --mock or --model is required")


def _handles(entry: NamedBackend) -> tuple[Generator, Judge, CostMeter]:
    backend = entry.factory()
    meter = CostMeter()
    return Generator(backend, meter), Judge(backend, meter), meter


@click.group()
@click.option("-q", "--quiet", is_flag=True, help="Log warnings only.")
def main(quiet):
    """Decoding-time debiasing for text-API language models."""
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.argument("dataset")
@_handle_errors
def validate(dataset):
    """Validate a JSONL dataset and report its balance."""
    ds = _load_any_dataset(dataset)
    click.echo(f"dataset: {ds.name}")
    click.echo(f"records: {len(ds)}")
    click.echo(f"checksum: sha256:{ds.checksum}")
    click.echo("balance:")
    for (language, category), count in ds.balance().items():
        click.echo(f"  {language}/{category}: {count}")


def _print_trace(trace) -> None:
    click.echo(f"trace: scheme={trace.scheme.value} k_actual={trace.k_actual}")
    if trace.gate_fired is not None:
        suffix = " (parse failed, failed safe)" if trace.gate_parse_failed else ""
        click.echo(f"  gate: {'fired' if trace.gate_fired else 'passed'}{suffix}")
    for word, score, comp in trace.candidates:
        click.echo(f"  candidate: {word!r} bias={score.bias} utility={score.utility} composite={comp:.3f}")
    for i, crit in enumerate(trace.critiques, start=1):
        click.echo(f"  critique {i}: {crit}")
    for i, audit in enumerate(trace.audits, start=1):
        if audit.violates:
            click.echo(f"  audit {i}: violates {audit.principle or '?'}: {audit.reason}")
        else:
            click.echo(f"  audit {i}: clean")
    for i, (word, score) in enumerate(trace.revisions, start=1):
        if score is None:
            click.echo(f"  revision {i}: {word!r} (unscored)")
        else:
            click.echo(f"  revision {i}: {word!r} bias={score.bias} utility={score.utility}")
    if trace.audit_parse_failures:
        click.echo(f"  audit parse failures: {trace.audit_parse_failures}")


@main.command()
@click.argument("text")
@click.option("--scheme", type=click.Choice(SCHEME_NAMES), required=True)
@backend_options
@config_options
@click.option("-v", "--verbose", is_flag=True, help="Print the full step transcript.")
@_handle_errors
def debias(text, scheme, verbose, reuse_gated_candidate, judge_free_constitutional,
           mock_path, model_name, base_url, api_key, timeout, max_retries, **flags):
    """Debias one fill-in completion for TEXT."""
    scheme = Scheme(scheme)
    entry = _named_backend(mock_path, model_name, base_url, api_key, timeout, max_retries)
    overrides = _collect_overrides(
        reuse_gated_candidate=reuse_gated_candidate,
        judge_free_constitutional=judge_free_constitutional, **flags,
    )
    config = SchemeConfig.defaults(scheme, Kind.FILL_IN).override(**overrides)
    generator, judge, meter = _handles(entry)

    word, trace, score = run_fill(text, scheme, config, generator, judge)
    click.echo(f"word: {word}")
    if score is not None:
        comp = composite_score(score, config.alpha_report)
        click.echo(f"bias: {score.bias:.3f}  utility: {score.utility:.3f}  composite: {comp:.3f}")
    native = trace.cost.fp_g_in(AccountingMode.NATIVE)
    click.echo(
        f"cost: fp_g={trace.cost.fp_g} fp_j={trace.cost.fp_j} "
        f"(native fp_g={native}) metering_fp_j={meter.metering_fp_j}"
    )
    if verbose:
        _print_trace(trace)


@main.command("opengen")
@click.argument("text")
@click.option("--scheme", type=click.Choice(SCHEME_NAMES), required=True)
@click.option("--language", type=click.Choice([l.value for l in Language]), default="english",
              show_default=True)
@click.option("--category", type=click.Choice([c.value for c in Category]), default="gender",
              show_default=True, help="Bias category label for the ad-hoc prompt.")
@backend_options
@config_options
@click.option("-v", "--verbose", is_flag=True, help="Print every step transcript.")
@_handle_errors
def opengen_cmd(text, scheme, language, category, verbose, reuse_gated_candidate,
                judge_free_constitutional, mock_path, model_name, base_url, api_key,
                timeout, max_retries, **flags):
    """Open-ended word-by-word generation from TEXT."""
    scheme = Scheme(scheme)
    entry = _named_backend(mock_path, model_name, base_url, api_key, timeout, max_retries)
    overrides = _collect_overrides(
        reuse_gated_candidate=reuse_gated_candidate,
        judge_free_constitutional=judge_free_constitutional, **flags,
    )
    config = SchemeConfig.defaults(scheme, Kind.OPEN_GEN).override(**overrides)
    record = PromptRecord(
        id="cli", text=text, language=Language(language),
        category=Category(category), kind=Kind.OPEN_GEN,
    )
    generator, judge, _ = _handles(entry)

    run = generate_open(record, scheme, config, generator, judge)
    click.echo(f"text: {run.full_text()}")
    click.echo(f"words: {len(run.words)}")
    if run.final_score is not None:
        click.echo(f"final bias: {run.final_score.bias:.3f}  utility: {run.final_score.utility:.3f}")
    if run.words:
        ratios = overhead_ratios(run.ledger)
        click.echo(f"overhead: R_G={ratios.r_g:.3f} R_J={ratios.r_j:.3f} R={ratios.r:.3f} (api)")
        native = overhead_ratios(run.ledger, AccountingMode.NATIVE)
        click.echo(f"overhead: R_G={native.r_g:.3f} R_J={native.r_j:.3f} R={native.r:.3f} (native)")
    if scheme.gated and run.words:
        phi = measure_firing_rate(run)
        click.echo(f"gate: fired {run.gate_fire_count}/{len(run.words)} (phi={phi:.3f})")
    if verbose:
        for trace in run.step_traces:
            _print_trace(trace)
    if run.status != "ok":
        raise FairdecodeError(run.error or "open generation failed")


@main.command()
@click.option("--dataset", required=True,
              help=f"Dataset path, or {BUILTIN_PREFIX}fillin_sample / {BUILTIN_PREFIX}opengen_prompts.")
@click.option("--schemes", default="baseline,select,sequential,constitutional", show_default=True,
              help="Comma-separated scheme list.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False),
              help="Output directory for results and reports.")
@click.option("--accounting", type=click.Choice([m.value for m in AccountingMode]),
              default="api", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--parallelism", "-p", type=int, default=1, show_default=True)
@click.option("--judge-model", help="Separate judge model (defaults to the generator backend).")
@backend_options
@config_options
@_handle_errors
def bench(dataset, schemes, outdir, accounting, seed, parallelism, judge_model,
          reuse_gated_candidate, judge_free_constitutional,
          mock_path, model_name, base_url, api_key, timeout, max_retries, **flags):
    """Run the (backend x scheme x prompt) matrix; resumable."""
    try:
        scheme_list = [Scheme(s.strip()) for s in schemes.split(",") if s.strip()]
    except ValueError as e:
        raise click.UsageError(f"unknown scheme: {e}")
    if not scheme_list:
        raise click.UsageError("no schemes given")
    entry = _named_backend(mock_path, model_name, base_url, api_key, timeout, max_retries)
    judge_entry = None
    if judge_model:
        judge_config = BackendConfig.from_env(
            judge_model, base_url, api_key, request_timeout=timeout, max_retries=max_retries,
        )
        judge_backend = HttpBackend(judge_config)
        judge_entry = NamedBackend(name=judge_model, factory=lambda: judge_backend)

    matrix = RunMatrix(
        backends=[entry],
        schemes=scheme_list,
        dataset=_load_any_dataset(dataset),
        overrides=_collect_overrides(
            reuse_gated_candidate=reuse_gated_candidate,
            judge_free_constitutional=judge_free_constitutional, **flags,
        ),
        accounting_mode=AccountingMode(accounting),
        seed=seed,
        parallelism=parallelism,
        judge=judge_entry,
    )
    store = ResultStore(outdir)
    outcome = run_matrix(matrix, store)
    _summarize(outcome, store, Path(outdir))
    if not any(r.ok for r in store.results):
        raise FairdecodeError("all cells failed")


def _summarize(outcome: MatrixOutcome, store: ResultStore, outdir: Path) -> None:
    total_failed = sum(1 for r in store.results if not r.ok)
    click.echo(
        f"cells: {len(store.results)} done, {outcome.executed} new, "
        f"{outcome.failed} new failures, {total_failed} failed total"
    )
    click.echo(f"results: {store.results_path}")
    report = aggregate(store.results)
    written = []
    for fmt in FORMATS:
        written.extend(emit_report(report, fmt, outdir))
    click.echo("reports: " + " ".join(str(p) for p in written))


@main.command("aggregate")
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--alpha-report", type=float, help="Override the reporting composite weight.")
@click.option("--accounting", type=click.Choice([m.value for m in AccountingMode]),
              help="Re-read ledgers under this accounting mode.")
@_handle_errors
def aggregate_cmd(results_dir, alpha_report, accounting):
    """Print the aggregate table for a results directory."""
    store = ResultStore(results_dir)
    report = aggregate(
        store.results,
        alpha_report=alpha_report,
        accounting_mode=AccountingMode(accounting) if accounting else None,
    )
    click.echo(render_table(report), nl=False)


@main.command("report")
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), required=True)
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False))
@click.option("--alpha-report", type=float, help="Override the reporting composite weight.")
@click.option("--accounting", type=click.Choice([m.value for m in AccountingMode]),
              help="Re-read ledgers under this accounting mode.")
@_handle_errors
def report_cmd(results_dir, fmt, outdir, alpha_report, accounting):
    """Emit report files from a results directory."""
    store = ResultStore(results_dir)
    report = aggregate(
        store.results,
        alpha_report=alpha_report,
        accounting_mode=AccountingMode(accounting) if accounting else None,
    )
    for path in emit_report(report, fmt, outdir):
        click.echo(str(path))


if __name__ == "__main__":
    main()
