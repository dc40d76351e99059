"""Run-matrix execution and result persistence.

Every (backend, scheme, prompt) cell becomes one RunResult line in an
append-only JSONL store. Completed cells are skipped on rerun, so a
crashed matrix resumes where it stopped; under a fixed seed the store
bytes are identical no matter how often or how parallel it ran.
"""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from .contracts import Backend, Generator, Judge
from .core import (
    AccountingMode,
    Category,
    CostMeter,
    JudgeScore,
    Kind,
    Language,
    Scheme,
    SchemeConfig,
    StepCost,
)
from .dataset import Dataset
from .errors import DomainError, FairdecodeError
from .opengen import debias_step, generate_open
from .parsing import AuditResult
from .schemes import StepTrace

log = logging.getLogger(__name__)

Key = tuple[str, str, str]  # (model, scheme, prompt_id)


# -- serialization -------------------------------------------------------------

def score_to_json(s: JudgeScore | None) -> list[float] | None:
    return None if s is None else [s.bias, s.utility]

def score_from_json(v) -> JudgeScore | None:
    return None if v is None else JudgeScore(bias=v[0], utility=v[1])

def cost_to_json(c: StepCost) -> dict:
    return {"fp_g": c.fp_g, "fp_j": c.fp_j, "batches": list(c.candidate_batches)}

def cost_from_json(d) -> StepCost:
    return StepCost(fp_g=d["fp_g"], fp_j=d["fp_j"], candidate_batches=tuple(d["batches"]))

def audit_to_json(a: AuditResult) -> dict:
    return {"violates": a.violates, "principle": a.principle, "reason": a.reason}

def audit_from_json(d) -> AuditResult:
    return AuditResult(violates=d["violates"], principle=d["principle"], reason=d["reason"])

def trace_to_json(t: StepTrace) -> dict:
    return {
        "scheme": t.scheme.value,
        "initial_word": t.initial_word,
        "chosen_word": t.chosen_word,
        "chosen_score": score_to_json(t.chosen_score),
        "k_actual": t.k_actual,
        "cost": cost_to_json(t.cost),
        "candidates": [[w, s.bias, s.utility, comp] for w, s, comp in t.candidates],
        "critiques": list(t.critiques),
        "audits": [audit_to_json(a) for a in t.audits],
        "revisions": [[w, score_to_json(s)] for w, s in t.revisions],
        "gate_fired": t.gate_fired,
        "gate_parse_failed": t.gate_parse_failed,
        "audit_parse_failures": t.audit_parse_failures,
    }

def trace_from_json(d) -> StepTrace:
    return StepTrace(
        scheme=Scheme(d["scheme"]),
        initial_word=d["initial_word"],
        chosen_word=d["chosen_word"],
        chosen_score=score_from_json(d["chosen_score"]),
        k_actual=d["k_actual"],
        cost=cost_from_json(d["cost"]),
        candidates=[(w, JudgeScore(b, u), comp) for w, b, u, comp in d["candidates"]],
        critiques=list(d["critiques"]),
        audits=[audit_from_json(a) for a in d["audits"]],
        revisions=[(w, score_from_json(s)) for w, s in d["revisions"]],
        gate_fired=d["gate_fired"],
        gate_parse_failed=d["gate_parse_failed"],
        audit_parse_failures=d["audit_parse_failures"],
    )


@dataclass
class RunResult:
    """Outcome of one (backend, scheme, prompt) cell, with full audit trail."""

    prompt_id: str
    model: str
    scheme: Scheme
    language: Language
    category: Category
    kind: Kind
    status: str
    error: str | None
    output: str | None
    bias: float | None
    utility: float | None
    words: int
    steps: list[StepCost]
    metering_fp_j: int
    aborted_cost: StepCost | None
    gate_fires: int | None
    traces: list[dict]
    config: dict
    accounting_mode: AccountingMode

    @property
    def key(self) -> Key:
        return (self.model, self.scheme.value, self.prompt_id)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def fp_g(self, mode: AccountingMode | None = None) -> int:
        mode = mode or self.accounting_mode
        return sum(s.fp_g_in(mode) for s in self.steps)

    @property
    def fp_j(self) -> int:
        return sum(s.fp_j for s in self.steps)

    def to_json(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "model": self.model,
            "scheme": self.scheme.value,
            "language": self.language.value,
            "category": self.category.value,
            "kind": self.kind.value,
            "status": self.status,
            "error": self.error,
            "output": self.output,
            "bias": self.bias,
            "utility": self.utility,
            "words": self.words,
            "steps": [cost_to_json(s) for s in self.steps],
            "metering_fp_j": self.metering_fp_j,
            "aborted_cost": cost_to_json(self.aborted_cost) if self.aborted_cost else None,
            "gate_fires": self.gate_fires,
            "traces": self.traces,
            "config": self.config,
            "accounting_mode": self.accounting_mode.value,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunResult":
        return cls(
            prompt_id=d["prompt_id"],
            model=d["model"],
            scheme=Scheme(d["scheme"]),
            language=Language(d["language"]),
            category=Category(d["category"]),
            kind=Kind(d["kind"]),
            status=d["status"],
            error=d["error"],
            output=d["output"],
            bias=d["bias"],
            utility=d["utility"],
            words=d["words"],
            steps=[cost_from_json(s) for s in d["steps"]],
            metering_fp_j=d["metering_fp_j"],
            aborted_cost=cost_from_json(d["aborted_cost"]) if d["aborted_cost"] else None,
            gate_fires=d["gate_fires"],
            traces=d["traces"],
            config=d["config"],
            accounting_mode=AccountingMode(d["accounting_mode"]),
        )


class ResultStore:
    """Append-only results.jsonl plus a plain-text key index.

    The JSONL file is the source of truth; the index is rebuilt from it
    on open so a crash between the two appends cannot corrupt anything.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.results_path = self.directory / "results.jsonl"
        self.index_path = self.directory / "index.txt"
        self.results: list[RunResult] = []
        self._keys: set[Key] = set()
        if self.results_path.exists():
            for line in self.results_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                result = RunResult.from_json(json.loads(line))
                self.results.append(result)
                self._keys.add(result.key)
            self._rewrite_index()

    def _rewrite_index(self) -> None:
        lines = ["\t".join(r.key) for r in self.results]
        self.index_path.write_text("".join(f"{l}\n" for l in lines), encoding="utf-8")

    def completed_keys(self) -> set[Key]:
        return set(self._keys)

    def __len__(self) -> int:
        return len(self.results)

    def append(self, result: RunResult) -> None:
        line = json.dumps(result.to_json(), sort_keys=True, ensure_ascii=False)
        with self.results_path.open("a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
        with self.index_path.open("a", encoding="utf-8") as f:
            f.write("\t".join(result.key) + "\n")
        self.results.append(result)
        self._keys.add(result.key)


@dataclass(frozen=True)
class NamedBackend:
    """A backend under a model name.

    ``factory`` is called once per cell so scripted backends get fresh
    reply cursors; for a shared live client, return the same instance.
    """

    name: str
    factory: Callable[[], Backend]


@dataclass
class RunMatrix:
    """One benchmark campaign.

    ``config`` pins one configuration for every cell; leaving it None
    gives each cell the stock defaults for its scheme and task
    shape, adjusted by ``overrides`` (e.g. {"tau": 0.9}).
    """

    backends: list[NamedBackend]
    schemes: list[Scheme]
    dataset: Dataset
    config: SchemeConfig | None = None
    overrides: dict = field(default_factory=dict)
    accounting_mode: AccountingMode = AccountingMode.API
    seed: int = 0
    parallelism: int = 1
    judge: NamedBackend | None = None

    def __post_init__(self):
        if not self.backends:
            raise DomainError("matrix needs at least one backend")
        if not self.schemes:
            raise DomainError("matrix needs at least one scheme")
        if self.parallelism < 1:
            raise DomainError(f"parallelism must be >= 1: {self.parallelism}")

    def config_for(self, scheme: Scheme, kind: Kind) -> SchemeConfig:
        base = self.config or SchemeConfig.defaults(scheme, kind)
        return base.override(**self.overrides) if self.overrides else base


@dataclass
class MatrixOutcome:
    results: list[RunResult]
    executed: int
    failed: int


def run_fill(
    text: str,
    scheme: Scheme,
    config: SchemeConfig,
    generator: Generator,
    judge: Judge,
) -> tuple[str, StepTrace, JudgeScore | None]:
    """One fill-in item under any scheme, plus a reported score.

    Schemes that never judged their final word (baseline is scored for
    reporting inside its own runner; gated pass-throughs are not) get a
    metering score so every successful item reports bias and utility.
    """
    word, trace = debias_step(text, scheme, config, generator, judge, score_for_report=True)
    score = trace.chosen_score
    if score is None:
        score = judge.score_word(text, word, metering=True)
    return word, trace, score


def run_cell(
    entry: NamedBackend,
    scheme: Scheme,
    record,
    matrix: RunMatrix,
) -> RunResult:
    """Execute one cell; failures become failed results, never raise."""
    gen_backend = entry.factory()
    judge_entry = matrix.judge or entry
    judge_backend = gen_backend if judge_entry is entry else judge_entry.factory()
    meter = CostMeter()
    generator = Generator(gen_backend, meter)
    judge = Judge(judge_backend, meter)
    config = matrix.config_for(scheme, record.kind)

    base = dict(
        prompt_id=record.id,
        model=entry.name,
        scheme=scheme,
        language=record.language,
        category=record.category,
        kind=record.kind,
        config=asdict(config),
        accounting_mode=matrix.accounting_mode,
    )

    if record.kind is Kind.FILL_IN:
        mark = meter.mark()
        try:
            word, trace, score = run_fill(record.text, scheme, config, generator, judge)
        except FairdecodeError as e:
            log.warning("cell %s/%s/%s failed: %s", entry.name, scheme.value, record.id, e)
            return RunResult(
                **base, status="failed", error=f"{type(e).__name__}: {e}",
                output=None, bias=None, utility=None, words=0, steps=[],
                metering_fp_j=meter.metering_fp_j,
                aborted_cost=meter.step_since(mark), gate_fires=None, traces=[],
            )
        return RunResult(
            **base, status="ok", error=None, output=word,
            bias=score.bias if score else None,
            utility=score.utility if score else None,
            words=1, steps=[trace.cost], metering_fp_j=meter.metering_fp_j,
            aborted_cost=None,
            gate_fires=(1 if trace.gate_fired else 0) if scheme.gated else None,
            traces=[trace_to_json(trace)],
        )

    run = generate_open(record, scheme, config, generator, judge)
    return RunResult(
        **base,
        status=run.status,
        error=run.error,
        output=run.full_text() if run.words else None,
        bias=run.final_score.bias if run.final_score else None,
        utility=run.final_score.utility if run.final_score else None,
        words=len(run.words),
        steps=list(run.ledger.steps),
        metering_fp_j=run.ledger.metering_fp_j,
        aborted_cost=run.aborted_step_cost,
        gate_fires=run.gate_fire_count if scheme.gated else None,
        traces=[trace_to_json(t) for t in run.step_traces],
    )


def run_matrix(matrix: RunMatrix, store: ResultStore) -> MatrixOutcome:
    """Execute all incomplete cells in seed-shuffled deterministic order.

    Results are flushed to the store in work order even when cells run
    in parallel, so the persisted bytes do not depend on parallelism.
    """
    cells = [
        (entry, scheme, record)
        for entry in matrix.backends
        for scheme in matrix.schemes
        for record in matrix.dataset
    ]
    random.Random(matrix.seed).shuffle(cells)
    done = store.completed_keys()
    todo = [
        c for c in cells
        if (c[0].name, c[1].value, c[2].id) not in done
    ]
    log.info("matrix: %d cells total, %d to run", len(cells), len(todo))

    failed = 0
    if matrix.parallelism == 1 or len(todo) <= 1:
        for entry, scheme, record in todo:
            result = run_cell(entry, scheme, record, matrix)
            failed += 0 if result.ok else 1
            store.append(result)
    else:
        with ThreadPoolExecutor(max_workers=matrix.parallelism) as pool:
            futures = [pool.submit(run_cell, e, s, r, matrix) for e, s, r in todo]
            for fut in futures:
                result = fut.result()
                failed += 0 if result.ok else 1
                store.append(result)

    return MatrixOutcome(results=list(store.results), executed=len(todo), failed=failed)
