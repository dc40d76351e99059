"""Benchmark dataset ingestion and validation.

Datasets are UTF-8 JSONL, one record per line with fields id, text,
language, category, kind. Validation gathers every problem with its
line number before failing, so one pass over the report fixes the file.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import BLANK, Category, Kind, Language, PromptRecord
from .errors import DatasetError

REQUIRED_FIELDS = ("id", "text", "language", "category", "kind")


@dataclass(frozen=True)
class Dataset:
    records: tuple[PromptRecord, ...]
    name: str
    checksum: str

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def balance(self) -> dict[tuple[str, str], int]:
        """Record counts per (language, category); reported, not enforced."""
        counts: Counter[tuple[str, str]] = Counter()
        for r in self.records:
            counts[(r.language.value, r.category.value)] += 1
        return dict(sorted(counts.items()))


def _record_from_line(obj: dict, lineno: int, problems: list[str]) -> PromptRecord | None:
    if not isinstance(obj, dict):
        problems.append(f"line {lineno}: record is not a JSON object")
        return None
    missing = [f for f in REQUIRED_FIELDS if f not in obj]
    if missing:
        problems.append(f"line {lineno}: missing fields: {', '.join(missing)}")
        return None
    unknown = sorted(set(obj) - set(REQUIRED_FIELDS))
    if unknown:
        problems.append(f"line {lineno}: unknown fields: {', '.join(unknown)}")
        return None
    bad_type = [f for f in REQUIRED_FIELDS if not isinstance(obj[f], str)]
    if bad_type:
        problems.append(f"line {lineno}: non-string fields: {', '.join(bad_type)}")
        return None

    try:
        language = Language(obj["language"])
    except ValueError:
        problems.append(f"line {lineno}: unknown language: {obj['language']!r}")
        return None
    try:
        category = Category(obj["category"])
    except ValueError:
        problems.append(f"line {lineno}: unknown category: {obj['category']!r}")
        return None
    try:
        kind = Kind(obj["kind"])
    except ValueError:
        problems.append(f"line {lineno}: unknown kind: {obj['kind']!r}")
        return None

    if not obj["id"]:
        problems.append(f"line {lineno}: empty id")
        return None
    if not obj["text"].strip():
        problems.append(f"line {lineno}: empty text")
        return None

    record = PromptRecord(
        id=obj["id"], text=obj["text"], language=language, category=category, kind=kind
    )
    if kind is Kind.FILL_IN and record.blank_count() != 1:
        problems.append(
            f"line {lineno}: fill_in text must contain the marker {BLANK} exactly once "
            f"(found {record.blank_count()})"
        )
        return None
    return record


def parse_dataset(raw: bytes, name: str) -> Dataset:
    """Validate raw JSONL bytes into a Dataset. All problems or nothing."""
    problems: list[str] = []
    records: list[PromptRecord] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            problems.append(f"line {lineno}: invalid JSON: {e.msg}")
            continue
        record = _record_from_line(obj, lineno, problems)
        if record is None:
            continue
        if record.id in seen:
            problems.append(
                f"line {lineno}: duplicate id {record.id!r} (first seen on line {seen[record.id]})"
            )
            continue
        seen[record.id] = lineno
        records.append(record)

    if problems:
        raise DatasetError(problems)
    if not records:
        raise DatasetError(["dataset contains no records"])
    return Dataset(
        records=tuple(records),
        name=name,
        checksum=hashlib.sha256(raw).hexdigest(),
    )


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    return parse_dataset(path.read_bytes(), name=path.stem)


def bundled_dataset(name: str) -> Dataset:
    """Load a dataset shipped inside the package (data/<name>.jsonl)."""
    raw = resources.files("fairdecode.data").joinpath(f"{name}.jsonl").read_bytes()
    return parse_dataset(raw, name=name)
