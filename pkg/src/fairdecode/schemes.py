"""The four single-step selection procedures.

Each run_* function produces one word for one context, plus a StepTrace
holding everything that happened: candidates, critiques, audits,
revisions, and the step's billable cost. Costs are measured off the
shared CostMeter, so parse re-asks are billed exactly as they happen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .contracts import Generator, Judge
from .core import JudgeScore, Scheme, StepCost, composite_score
from .errors import SelectionFailure
from .parsing import AuditResult


@dataclass
class StepTrace:
    """Audit record for one emitted word."""

    scheme: Scheme
    initial_word: str
    chosen_word: str
    chosen_score: JudgeScore | None
    k_actual: int
    cost: StepCost
    candidates: list[tuple[str, JudgeScore, float]] = field(default_factory=list)
    critiques: list[str] = field(default_factory=list)
    audits: list[AuditResult] = field(default_factory=list)
    revisions: list[tuple[str, JudgeScore | None]] = field(default_factory=list)
    gate_fired: bool | None = None
    gate_parse_failed: bool = False
    audit_parse_failures: int = 0


def run_baseline(
    context: str,
    generator: Generator,
    judge: Judge,
    *,
    score_for_report: bool = True,
) -> tuple[str, StepTrace]:
    """One greedy word, no intervention.

    The judge score, when requested, is reporting only: it goes to the
    metering channel, never the step cost, so baseline stays at (1, 0).
    """
    mark = generator.meter.mark()
    word = generator.generate(context)
    score = judge.score_word(context, word, metering=True) if score_for_report else None
    trace = StepTrace(
        scheme=Scheme.BASELINE,
        initial_word=word,
        chosen_word=word,
        chosen_score=score,
        k_actual=0,
        cost=generator.meter.step_since(mark),
    )
    return word, trace


def run_select(
    context: str,
    generator: Generator,
    judge: Judge,
    *,
    n: int = 8,
    alpha_select: float = 0.6,
    preset_candidates: list[str] | None = None,
) -> tuple[str, StepTrace]:
    """Best-of-N: sample candidates, judge each, keep the argmax composite.

    ``preset_candidates`` are already-generated (and already-billed)
    words prepended to the pool; the gated variant uses this to recycle
    the word that tripped the gate. Duplicates are scored as-is, ties go
    to the lowest index.
    """
    mark = generator.meter.mark()
    words = list(preset_candidates or [])
    remaining = n - len(words)
    if remaining > 0:
        words.extend(generator.generate_n(context, remaining))
    if not words:
        raise SelectionFailure(f"no usable candidates out of {n} for context {context!r}")

    scored: list[tuple[str, JudgeScore, float]] = []
    for w in words:
        s = judge.score_word(context, w)
        scored.append((w, s, composite_score(s, alpha_select)))

    best = 0
    for i in range(1, len(scored)):
        if scored[i][2] > scored[best][2]:
            best = i
    chosen, chosen_score, _ = scored[best]
    trace = StepTrace(
        scheme=Scheme.SELECT,
        initial_word=words[0],
        chosen_word=chosen,
        chosen_score=chosen_score,
        k_actual=0,
        cost=generator.meter.step_since(mark),
        candidates=scored,
    )
    return chosen, trace


def run_sequential(
    context: str,
    generator: Generator,
    judge: Judge,
    *,
    k_max: int = 5,
    alpha_select: float = 0.6,
    tau: float = 0.8,
) -> tuple[str, StepTrace]:
    """Critique-and-revise with early stop and best-so-far tracking.

    Stops before critiquing once the current word's bias reaches tau.
    The loop always continues from the latest revision, even one that
    scored worse; the best-so-far word is what gets returned.
    """
    mark = generator.meter.mark()
    word = generator.generate(context)
    score = judge.score_word(context, word)
    initial_word = word
    best_word, best_score = word, score
    best = composite_score(score, alpha_select)
    bias = score.bias

    critiques: list[str] = []
    revisions: list[tuple[str, JudgeScore | None]] = []
    k_actual = 0
    for _ in range(k_max):
        if bias >= tau:
            break
        crit = judge.critique(context, word)
        revised = generator.revise(context, word, crit)
        revised_score = judge.score_word(context, revised)
        k_actual += 1
        critiques.append(crit)
        revisions.append((revised, revised_score))
        s = composite_score(revised_score, alpha_select)
        if s > best:
            best_word, best_score, best = revised, revised_score, s
        word = revised
        bias = revised_score.bias

    trace = StepTrace(
        scheme=Scheme.SEQUENTIAL,
        initial_word=initial_word,
        chosen_word=best_word,
        chosen_score=best_score,
        k_actual=k_actual,
        cost=generator.meter.step_since(mark),
        critiques=critiques,
        revisions=revisions,
    )
    return best_word, trace


def run_constitutional(
    context: str,
    generator: Generator,
    judge: Judge,
    *,
    k_max: int = 4,
    alpha_select: float = 0.6,
    judge_free: bool = False,
) -> tuple[str, StepTrace]:
    """Self-audit against the constitution, revise on violations.

    A revision is adopted only when its composite strictly beats the
    current best; otherwise the old word stays and gets re-audited.
    ``judge_free`` drops all in-loop judge scoring and adopts every
    revision unconditionally. k_actual counts revisions; audits are
    recorded separately (the final clean audit still costs a pass).
    """
    mark = generator.meter.mark()
    word = generator.generate(context)
    current_score: JudgeScore | None = None
    best = float("-inf")
    if not judge_free:
        current_score = judge.score_word(context, word)
        best = composite_score(current_score, alpha_select)
    initial_word = word

    audits: list[AuditResult] = []
    revisions: list[tuple[str, JudgeScore | None]] = []
    k_actual = 0
    parse_failures = 0
    for _ in range(k_max):
        audit, gave_up = generator.audit(context, word)
        if gave_up:
            parse_failures += 1
        audits.append(audit)
        if not audit.violates:
            break
        revised = generator.revise(context, word, audit.reason or "")
        k_actual += 1
        if judge_free:
            revisions.append((revised, None))
            word = revised
            continue
        revised_score = judge.score_word(context, revised)
        revisions.append((revised, revised_score))
        s = composite_score(revised_score, alpha_select)
        if s > best:
            word, current_score, best = revised, revised_score, s

    trace = StepTrace(
        scheme=Scheme.CONSTITUTIONAL,
        initial_word=initial_word,
        chosen_word=word,
        chosen_score=current_score,
        k_actual=k_actual,
        cost=generator.meter.step_since(mark),
        audits=audits,
        revisions=revisions,
        audit_parse_failures=parse_failures,
    )
    return word, trace
