"""Generator and Judge behavioral contracts over a raw text backend.

A Backend is anything that turns a ChatRequest into a reply string. The
wrappers here own prompt construction, reply parsing, parse-retry
policy, and cost metering, so schemes never see raw text.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

from .core import CostMeter, JudgeScore
from .errors import GenerationEmpty, GateParseFailure, JudgeParseError, JudgeParseFailure
from .errors import AuditParseError
from .parsing import (
    AuditResult,
    extract_word,
    parse_audit_response,
    parse_gate_response,
    parse_judge_response,
)
from .prompts import (
    Constitution,
    DEFAULT_CONSTITUTION,
    build_audit_prompt,
    build_critique_prompt,
    build_gate_prompt,
    build_generate_prompt,
    build_judge_prompt,
    build_judge_text_prompt,
    build_revise_prompt,
)

log = logging.getLogger(__name__)

#: Sampling temperature for diverse candidate draws; everything else is greedy.
CANDIDATE_TEMPERATURE = 0.7

#: Re-asks after an unparseable judge or audit reply.
DEFAULT_PARSE_RETRIES = 2

JSON_REMINDER = "\n\nRespond with valid JSON only."


@dataclass(frozen=True)
class ChatRequest:
    """One model call.

    ``key`` carries the structured inputs that identify the call (the
    context, the word, ...) independently of prompt phrasing; scripted
    backends match on (role, key), live backends send ``prompt``.
    """

    role: str
    key: tuple[str, ...]
    prompt: str
    temperature: float = 0.0


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> str:
        """Return the model's reply text for one request."""
        ...


class Generator:
    """Generator-side roles: generate, candidates, revise, audit, gate.

    Every call bills one generator pass to the shared meter. The gate
    runs here, not on the judge: it is a self-check by the generating
    model and its pass is generator cost.
    """

    def __init__(
        self,
        backend: Backend,
        meter: CostMeter,
        constitution: Constitution = DEFAULT_CONSTITUTION,
        parse_retries: int = DEFAULT_PARSE_RETRIES,
    ):
        self.backend = backend
        self.meter = meter
        self.constitution = constitution
        self.parse_retries = parse_retries

    def _call(self, role: str, key: tuple[str, ...], prompt: str, temperature: float = 0.0) -> str:
        reply = self.backend.complete(ChatRequest(role, key, prompt, temperature))
        self.meter.add_generator()
        return reply

    def generate(self, context: str) -> str:
        reply = self._call("generate", (context,), build_generate_prompt(context))
        return extract_word(reply)

    def generate_n(self, context: str, n: int) -> list[str]:
        """Up to n candidate words, duplicates kept, empties dropped.

        Issued as n independent sampled requests; the batch is noted on
        the meter so native accounting can collapse it to one pass.
        """
        prompt = build_generate_prompt(context)
        words: list[str] = []
        issued = 0
        try:
            for _ in range(n):
                reply = self.backend.complete(
                    ChatRequest("generate_n", (context,), prompt, CANDIDATE_TEMPERATURE)
                )
                self.meter.add_generator()
                issued += 1
                try:
                    words.append(extract_word(reply))
                except GenerationEmpty:
                    log.debug("dropping empty candidate for context %r", context)
        finally:
            if issued > 1:
                self.meter.note_batch(issued)
        return words

    def revise(self, context: str, word: str, reason: str) -> str:
        reply = self._call(
            "revise", (context, word, reason), build_revise_prompt(context, word, reason)
        )
        return extract_word(reply)

    def audit(self, context: str, word: str) -> tuple[AuditResult, bool]:
        """Self-audit the word. Returns (result, gave_up).

        Unparseable replies are re-asked with a JSON reminder; when the
        budget runs out the audit is treated as clean (conservative
        stop) and gave_up is True so the trace can count it.
        """
        prompt = build_audit_prompt(context, word, self.constitution)
        last: AuditParseError | None = None
        for attempt in range(1 + self.parse_retries):
            asked = prompt if attempt == 0 else prompt + JSON_REMINDER
            reply = self._call("audit", (context, word), asked)
            try:
                return parse_audit_response(reply), False
            except AuditParseError as e:
                last = e
                log.debug("audit parse attempt %d failed: %s", attempt + 1, e)
        log.warning("audit unparseable after %d attempts, treating as clean: %s",
                    1 + self.parse_retries, last)
        return AuditResult(violates=False), True

    def gate(self, context: str, word: str) -> tuple[bool, bool]:
        """Binary stereotype check on a candidate word.

        Returns (fired, parse_failed). Garbage replies fire the gate:
        when in doubt, run the full scheme.
        """
        reply = self._call("gate", (context, word), build_gate_prompt(context, word))
        try:
            return parse_gate_response(reply), False
        except GateParseFailure:
            log.debug("gate reply unparseable, failing safe to fired: %r", reply)
            return True, True


class Judge:
    """Judge-side roles: score a word, score a passage, critique a word.

    Score calls re-ask on unparseable replies; every ask is a real
    forward pass and is billed, including the failed ones. ``metering``
    routes the bill to the reporting channel instead of the run ledger.
    """

    def __init__(self, backend: Backend, meter: CostMeter, parse_retries: int = DEFAULT_PARSE_RETRIES):
        self.backend = backend
        self.meter = meter
        self.parse_retries = parse_retries

    def _scored_call(self, role: str, key: tuple[str, ...], prompt: str, metering: bool) -> JudgeScore:
        last: JudgeParseError | None = None
        attempts = 0
        for attempt in range(1 + self.parse_retries):
            asked = prompt if attempt == 0 else prompt + JSON_REMINDER
            reply = self.backend.complete(ChatRequest(role, key, asked))
            self.meter.add_judge(metering=metering)
            attempts += 1
            try:
                return parse_judge_response(reply)
            except JudgeParseError as e:
                last = e
                log.debug("judge parse attempt %d failed: %s", attempts, e)
        raise JudgeParseFailure(last, attempts)

    def score_word(self, context: str, word: str, *, metering: bool = False) -> JudgeScore:
        return self._scored_call(
            "score_word", (context, word), build_judge_prompt(context, word), metering
        )

    def score_text(self, full_text: str, *, metering: bool = False) -> JudgeScore:
        return self._scored_call(
            "score_text", (full_text,), build_judge_text_prompt(full_text), metering
        )

    def critique(self, context: str, word: str) -> str:
        reply = self.backend.complete(
            ChatRequest("critique", (context, word), build_critique_prompt(context, word))
        )
        self.meter.add_judge()
        return reply.strip()
