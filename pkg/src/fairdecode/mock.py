"""Deterministic scripted backend used as the test oracle.

A MockScript maps (role, key) to either a fixed reply or a finite reply
sequence. The backend refuses anything off-script (ScriptMiss), so a
test that passes has exercised exactly the calls it declared.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .contracts import ChatRequest
from .errors import DomainError, ScriptMiss

FORMAT_TAG = "fairdecode-mock-script-v1"

Key = tuple[str, ...]


def judge_json(bias: float, utility: float) -> str:
    """A well-formed judge reply for script entries."""
    return json.dumps({"bias": bias, "utility": utility})


def audit_json(violates: bool, principle: str | None = None, reason: str | None = None) -> str:
    """A well-formed self-audit reply for script entries."""
    return json.dumps({"violates": violates, "principle": principle, "reason": reason})


@dataclass
class _Entry:
    replies: list[str]
    repeat: bool


@dataclass
class MockScript:
    """Ordered (role, key) -> reply table.

    ``on`` appends to a finite sequence consumed call by call; ``always``
    registers an unlimited fixed reply. A key is one or the other.
    """

    entries: dict[tuple[str, Key], _Entry] = field(default_factory=dict)

    def on(self, role: str, *key: str, reply: str) -> "MockScript":
        k = (role, tuple(key))
        entry = self.entries.get(k)
        if entry is None:
            self.entries[k] = _Entry([reply], repeat=False)
        elif entry.repeat:
            raise DomainError(f"key already registered as repeating: {k!r}")
        else:
            entry.replies.append(reply)
        return self

    def always(self, role: str, *key: str, reply: str) -> "MockScript":
        k = (role, tuple(key))
        if k in self.entries:
            raise DomainError(f"key already registered: {k!r}")
        self.entries[k] = _Entry([reply], repeat=True)
        return self

    def save(self, path: str | Path) -> None:
        doc = {"format": FORMAT_TAG, "entries": []}
        for (role, key), entry in self.entries.items():
            rec: dict = {"role": role, "key": list(key)}
            if entry.repeat:
                rec["response"] = entry.replies[0]
            else:
                rec["responses"] = list(entry.replies)
            doc["entries"].append(rec)
        Path(path).write_text(
            json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("format") != FORMAT_TAG:
            raise DomainError(f"not a mock script file: {path}")
        script = cls()
        for rec in doc["entries"]:
            key = (rec["role"], tuple(rec["key"]))
            if "response" in rec:
                script.entries[key] = _Entry([rec["response"]], repeat=True)
            else:
                script.entries[key] = _Entry(list(rec["responses"]), repeat=False)
        return script

    def __eq__(self, other) -> bool:
        if not isinstance(other, MockScript):
            return NotImplemented
        return {k: (e.replies, e.repeat) for k, e in self.entries.items()} == {
            k: (e.replies, e.repeat) for k, e in other.entries.items()
        }


class MockBackend:
    """Backend whose replies come only from a MockScript.

    Sequences are consumed per backend instance; give each concurrent
    run its own instance when scripts share keys. The call log records
    (role, key, temperature) for trace-reconstruction assertions.
    """

    def __init__(self, script: MockScript):
        self.script = script
        self._cursors: dict[tuple[str, Key], int] = {}
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []
        self.role_counts: Counter[str] = Counter()

    def complete(self, request: ChatRequest) -> str:
        k = (request.role, request.key)
        with self._lock:
            self.calls.append(request)
            self.role_counts[request.role] += 1
            entry = self.script.entries.get(k)
            if entry is None:
                raise ScriptMiss(request.role, request.key)
            if entry.repeat:
                return entry.replies[0]
            i = self._cursors.get(k, 0)
            if i >= len(entry.replies):
                raise ScriptMiss(
                    request.role, request.key,
                    f"sequence exhausted after {len(entry.replies)} replies",
                )
            self._cursors[k] = i + 1
            return entry.replies[i]

    def unconsumed(self) -> list[tuple[str, Key, int]]:
        """Finite sequences with replies left over; exhaustive tests want []."""
        out = []
        for k, entry in self.script.entries.items():
            if entry.repeat:
                continue
            left = len(entry.replies) - self._cursors.get(k, 0)
            if left:
                out.append((k[0], k[1], left))
        return out
