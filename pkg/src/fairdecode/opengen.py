"""Word-by-word open generation with the Bias Guard gate.

The loop grows a context one word at a time, dispatching each step to a
scheme (gated or not), then scores the finished passage holistically.
Gated schemes pay one gate pass per word and run the full scheme only
when the gate fires; the expected-overhead calculator quantifies the
saving as a function of the firing rate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .contracts import Generator, Judge
from .core import (
    Kind,
    JudgeScore,
    OverheadLedger,
    PromptRecord,
    Scheme,
    SchemeConfig,
    StepCost,
)
from .errors import DomainError, FairdecodeError
from .schemes import (
    StepTrace,
    run_baseline,
    run_constitutional,
    run_select,
    run_sequential,
)

log = logging.getLogger(__name__)


@dataclass
class GenerationRun:
    """Everything produced by one open-generation run."""

    prompt: PromptRecord
    scheme: Scheme
    words: list[str] = field(default_factory=list)
    step_traces: list[StepTrace] = field(default_factory=list)
    ledger: OverheadLedger = field(default_factory=OverheadLedger)
    final_score: JudgeScore | None = None
    status: str = "ok"
    error: str | None = None
    aborted_step_cost: StepCost | None = None

    @property
    def gate_fire_count(self) -> int:
        return sum(1 for t in self.step_traces if t.gate_fired)

    def full_text(self) -> str:
        return join_context(self.prompt.text, self.words)


def join_context(prompt_text: str, words: list[str]) -> str:
    """c_i construction: prompt and words, single-space joined."""
    return " ".join([prompt_text, *words]) if words else prompt_text


def run_base_scheme(
    scheme: Scheme,
    context: str,
    generator: Generator,
    judge: Judge,
    config: SchemeConfig,
    *,
    score_for_report: bool = False,
    preset_candidates: list[str] | None = None,
) -> tuple[str, StepTrace]:
    """Dispatch to one of the four ungated procedures."""
    if scheme is Scheme.BASELINE:
        return run_baseline(context, generator, judge, score_for_report=score_for_report)
    if scheme is Scheme.SELECT:
        return run_select(
            context, generator, judge,
            n=config.n, alpha_select=config.alpha_select,
            preset_candidates=preset_candidates,
        )
    if scheme is Scheme.SEQUENTIAL:
        return run_sequential(
            context, generator, judge,
            k_max=config.k_max, alpha_select=config.alpha_select, tau=config.tau,
        )
    if scheme is Scheme.CONSTITUTIONAL:
        return run_constitutional(
            context, generator, judge,
            k_max=config.k_max, alpha_select=config.alpha_select,
            judge_free=config.judge_free_constitutional,
        )
    raise DomainError(f"not a base scheme: {scheme}")


def gated_step(
    context: str,
    candidate_word: str,
    scheme: Scheme,
    generator: Generator,
    judge: Judge,
    config: SchemeConfig,
) -> tuple[str, StepTrace]:
    """One gate check on an already-generated candidate.

    The candidate's generation pass is a precondition (already billed),
    so the returned cost starts from fp_g=1. Gate says NO: the word goes
    through at a flat two generator passes. Gate says YES (or cannot be
    parsed): the full scheme runs on the same context and its cost lands
    on top. For Select, the candidate is recycled as candidate 1 when
    the config says so.
    """
    if scheme.gated:
        raise DomainError(f"gated_step wants the base scheme, got {scheme}")
    mark = generator.meter.mark()
    fired, parse_failed = generator.gate(context, candidate_word)
    gated_scheme = Scheme(scheme.value + "_opt")
    if not fired:
        trace = StepTrace(
            scheme=gated_scheme,
            initial_word=candidate_word,
            chosen_word=candidate_word,
            chosen_score=None,
            k_actual=0,
            cost=StepCost(fp_g=1) + generator.meter.step_since(mark),
            gate_fired=False,
            gate_parse_failed=parse_failed,
        )
        return candidate_word, trace

    preset = None
    if scheme is Scheme.SELECT and config.reuse_gated_candidate:
        preset = [candidate_word]
    word, trace = run_base_scheme(
        scheme, context, generator, judge, config, preset_candidates=preset
    )
    trace.scheme = gated_scheme
    trace.gate_fired = True
    trace.gate_parse_failed = parse_failed
    trace.cost = StepCost(fp_g=1) + generator.meter.step_since(mark)
    return word, trace


def debias_step(
    context: str,
    scheme: Scheme,
    config: SchemeConfig,
    generator: Generator,
    judge: Judge,
    *,
    score_for_report: bool = False,
) -> tuple[str, StepTrace]:
    """Produce one word under any of the seven schemes."""
    if scheme.gated:
        candidate = generator.generate(context)
        return gated_step(context, candidate, scheme.base, generator, judge, config)
    return run_base_scheme(
        scheme, context, generator, judge, config, score_for_report=score_for_report
    )


def generate_open(
    prompt: PromptRecord,
    scheme: Scheme,
    config: SchemeConfig,
    generator: Generator,
    judge: Judge,
) -> GenerationRun:
    """Generate t_words words, then score the whole passage.

    A backend failure mid-run aborts with status=failed; the words and
    traces produced so far stay on the run, and the cost sunk into the
    broken step is kept separately so it is never mistaken for the cost
    of an emitted word.
    """
    if prompt.kind is not Kind.OPEN_GEN:
        raise DomainError(f"open generation wants an open_gen prompt, got {prompt.kind}")
    if not prompt.text.strip():
        raise DomainError("prompt text is empty")

    run = GenerationRun(prompt=prompt, scheme=scheme)
    context = prompt.text
    for _ in range(config.t_words):
        mark = generator.meter.mark()
        try:
            word, trace = debias_step(context, scheme, config, generator, judge)
        except FairdecodeError as e:
            run.status = "failed"
            run.error = f"{type(e).__name__}: {e}"
            run.aborted_step_cost = generator.meter.step_since(mark)
            log.warning("open generation aborted at word %d: %s", len(run.words) + 1, run.error)
            return run
        run.words.append(word)
        run.step_traces.append(trace)
        run.ledger.append(trace.cost)
        context = join_context(prompt.text, run.words)

    before = judge.meter.metering_fp_j
    try:
        run.final_score = judge.score_text(context, metering=True)
    except FairdecodeError as e:
        run.status = "failed"
        run.error = f"{type(e).__name__}: {e}"
    finally:
        run.ledger.charge_metering(judge.meter.metering_fp_j - before)
    return run


def expected_gated_overhead(phi: float, delta_r_g: float) -> float:
    """Expected generator overhead per word for a gated scheme.

    One pass generates the candidate, one pass asks the gate, and the
    scheme's extra cost is paid only on the firing fraction phi.
    """
    if math.isnan(phi) or not 0.0 <= phi <= 1.0:
        raise DomainError(f"phi out of [0,1]: {phi!r}")
    if delta_r_g < 0:
        raise DomainError(f"delta_r_g must be >= 0: {delta_r_g!r}")
    return 1.0 + 1.0 + phi * delta_r_g


def select_opt_delta(n: int, *, reuse_gated_candidate: bool = True) -> int:
    """Per-fire generator cost of gated Select under api accounting.

    With candidate recycling the fired word supplies candidate 1 and
    only n-1 fresh samples are drawn; without it the full n are. Both
    readings are legitimate, so both are offered.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1: {n}")
    return n - 1 if reuse_gated_candidate else n


def measure_firing_rate(run: GenerationRun) -> float:
    """Fraction of emitted words whose gate fired."""
    if not run.scheme.gated:
        raise DomainError(f"firing rate needs a gated run, got {run.scheme}")
    if not run.words:
        raise DomainError("run produced no words")
    return run.gate_fire_count / len(run.words)
