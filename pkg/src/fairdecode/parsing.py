"""Parsers for model replies: judge JSON, gate YES/NO, audit JSON, words.

Models wrap answers in chatter, code fences, and loose casing; these
functions pin down exactly what survives that and what errors out.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass

from .core import JudgeScore
from .errors import (
    AuditParseError,
    DomainError,
    GateParseFailure,
    GenerationEmpty,
    MissingField,
    NoJsonFound,
    OutOfRange,
)

_DECODER = json.JSONDecoder()


@dataclass(frozen=True)
class AuditResult:
    """Outcome of a constitutional self-audit."""

    violates: bool
    principle: str | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.violates and not (self.reason or "").strip():
            raise DomainError("a violation needs a non-empty reason")


def first_json_object(raw: str) -> dict:
    """Return the first JSON object embedded anywhere in the reply.

    Scans forward from each '{' so leading chatter, markdown fences and
    trailing prose are all ignored.
    """
    for m in re.finditer(r"\{", raw):
        try:
            obj, _ = _DECODER.raw_decode(raw, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise NoJsonFound("no JSON object in reply")


def _numeric_field(obj: dict, field: str) -> float:
    v = obj.get(field)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MissingField(field)
    v = float(v)
    if math.isnan(v):
        raise MissingField(field)
    if not 0.0 <= v <= 1.0:
        raise OutOfRange(field, v)
    return v


def parse_judge_response(raw: str) -> JudgeScore:
    """Extract a bias/utility score pair from a judge reply.

    Raises NoJsonFound, MissingField or OutOfRange; all three are
    retryable via the judge wrapper's re-ask policy.
    """
    obj = first_json_object(raw)
    return JudgeScore(bias=_numeric_field(obj, "bias"), utility=_numeric_field(obj, "utility"))


def parse_gate_response(raw: str) -> bool:
    """Map a gate reply to fired (True) or pass (False).

    The first alphabetic token decides: "yes" fires, "no" passes,
    anything else raises GateParseFailure. Callers must treat the
    failure as fired, the fail-safe direction.
    """
    m = re.search(r"[^\W\d_]+", raw, re.UNICODE)
    if m:
        token = m.group(0).casefold()
        if token == "yes":
            return True
        if token == "no":
            return False
    raise GateParseFailure(f"gate reply not YES/NO: {raw!r}")


def parse_audit_response(raw: str) -> AuditResult:
    """Extract an AuditResult from a self-audit reply.

    "violates" accepts JSON booleans and the usual textual spellings.
    A claimed violation without a usable reason is a parse error, since
    the revision step needs the reason text.
    """
    try:
        obj = first_json_object(raw)
    except NoJsonFound as e:
        raise AuditParseError(str(e)) from e
    violates = _coerce_bool(obj.get("violates"))
    if violates is None:
        raise AuditParseError("cannot determine violates")
    principle = obj.get("principle")
    if principle is not None and not isinstance(principle, str):
        principle = None
    reason = obj.get("reason")
    if reason is not None and not isinstance(reason, str):
        reason = None
    if violates and not (reason or "").strip():
        if principle and principle.strip():
            reason = f"violates the {principle.strip()} principle"
        else:
            raise AuditParseError("violation reported without a reason")
    if not violates:
        return AuditResult(violates=False, principle=None, reason=None)
    return AuditResult(violates=True, principle=principle, reason=reason)


def _coerce_bool(v) -> bool | None:
    if isinstance(v, bool):
        return v
    if isinstance(v, str):
        t = v.strip().casefold()
        if t in ("true", "yes"):
            return True
        if t in ("false", "no"):
            return False
    return None


def _strippable(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def extract_word(raw: str) -> str:
    """First whitespace-delimited token, shorn of edge punctuation.

    Internal hyphens and apostrophes survive; wrapping quotes, fences
    and trailing stops do not. Nothing left means the model produced no
    usable word.
    """
    parts = raw.split()
    if not parts:
        raise GenerationEmpty("reply contained no word")
    token = parts[0]
    start, end = 0, len(token)
    while start < end and _strippable(token[start]):
        start += 1
    while end > start and _strippable(token[end - 1]):
        end -= 1
    word = token[start:end]
    if not word:
        raise GenerationEmpty(f"reply stripped to nothing: {raw!r}")
    return word
