"""
Corpus loading and gold label construction.

Corpus files hold one JSON record per line:

    {"tokens": [...], "entities": [{"start", "end", "type"}],
     "events": [{"trigger", "type", "args": [{"entity", "role"}]}],
     "pos": [...], "chunk": [...], "deps": [{"head", "rel"}]}

pos / chunk / deps are optional. A trigger may be given as a [start, end]
span; it is reduced to a single token on load (syntactic head when
dependencies exist, else the first token). When several events share a
trigger token only the first is kept.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from jointee.errors import AnnotationError, ContractError, CorpusFormatError, SchemaMismatchError
from jointee.models import (
    OTHER,
    OUTSIDE,
    ArgumentMatrix,
    EntityMention,
    GoldLabels,
    LabelSchema,
    Sentence,
)

logger = logging.getLogger(__name__)


# ==================================================
# VALIDATION
# ==================================================

def find_overlap(mentions: Sequence[EntityMention]) -> Optional[tuple[EntityMention, EntityMention]]:
    ordered = sorted(mentions, key=lambda m: (m.start, m.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start <= prev.end:
            return prev, cur
    return None


def validate_sentence(sentence: Sentence) -> tuple[bool, Optional[str]]:
    """
    Check spans, cross references and annotation lengths.
    Return (is_valid, error_message).
    """
    n = sentence.n
    if n < 1:
        return False, "sentence has no tokens"
    for m in sentence.entities:
        if m.end < m.start:
            return False, f"span error: end {m.end} < start {m.start} for {m.type}"
        if m.start < 0 or m.end >= n:
            return False, f"span out of bounds: [{m.start}, {m.end}] with {n} tokens"
    overlap = find_overlap(sentence.entities)
    if overlap is not None:
        a, b = overlap
        return False, f"overlapping mentions {a.type}@[{a.start},{a.end}] and {b.type}@[{b.start},{b.end}]"
    for ev in sentence.events:
        if not 0 <= ev.trigger < n:
            return False, f"trigger index {ev.trigger} out of bounds with {n} tokens"
        roles_at: dict[int, str] = {}
        for arg in ev.args:
            if not 0 <= arg.entity < len(sentence.entities):
                return False, f"argument refers to missing entity {arg.entity}"
            j = sentence.entities[arg.entity].start
            if j == ev.trigger:
                continue
            previous = roles_at.setdefault(j, arg.role)
            if previous != arg.role:
                return False, (f"argument conflict: two roles for trigger {ev.trigger} "
                               f"and mention begin {j}: {previous} and {arg.role}")
    for name in ("pos", "chunk", "deps"):
        values = getattr(sentence, name)
        if values is not None and len(values) != n:
            return False, f"{name} has {len(values)} entries for {n} tokens"
    if sentence.deps is not None:
        for k, d in enumerate(sentence.deps):
            if d.head != -1 and not 0 <= d.head < n:
                return False, f"dependency head {d.head} of token {k} out of bounds"
    return True, None


# ==================================================
# BIO / ARGUMENT MATRIX
# ==================================================

def encode_bio(sentence: Sentence, schema: Optional[LabelSchema] = None) -> tuple[str, ...]:
    """B-X at each mention start, I-X inside, O elsewhere."""
    overlap = find_overlap(sentence.entities)
    if overlap is not None:
        a, b = overlap
        raise AnnotationError(
            f"overlapping mentions {a.type}@[{a.start},{a.end}] and {b.type}@[{b.start},{b.end}]"
        )
    tags = [OUTSIDE] * sentence.n
    for m in sentence.entities:
        if schema is not None and m.type not in schema.entity_types:
            raise SchemaMismatchError(f"Unknown entity type: {m.type}")
        tags[m.start] = f"B-{m.type}"
        for k in range(m.start + 1, m.end + 1):
            tags[k] = f"I-{m.type}"
    return tuple(tags)


def decode_bio(tags: Sequence[str]) -> list[EntityMention]:
    """Maximal B-X (I-X)* runs as mentions; an orphan I tag is a contract violation."""
    mentions: list[EntityMention] = []
    start: Optional[int] = None
    current: Optional[str] = None
    for k, tag in enumerate(tags):
        if tag.startswith("I-"):
            if current != tag[2:]:
                raise ContractError(f"orphan tag {tag} at position {k}")
            continue
        if current is not None:
            mentions.append(EntityMention(start=start, end=k - 1, type=current))
            current, start = None, None
        if tag.startswith("B-"):
            current, start = tag[2:], k
        elif tag != OUTSIDE:
            raise ContractError(f"not a BIO tag: {tag}")
    if current is not None:
        mentions.append(EntityMention(start=start, end=len(tags) - 1, type=current))
    return mentions


def build_argument_matrix(sentence: Sentence, schema: LabelSchema) -> ArgumentMatrix:
    """
    a[trigger][mention begin] = role for each gold argument, Other elsewhere.
    The diagonal stays Other even when a trigger token begins a mention.
    """
    n = sentence.n
    roles = np.zeros((n, n), dtype=np.int64)
    for ev in sentence.events:
        i = ev.trigger
        for arg in ev.args:
            j = sentence.entities[arg.entity].start
            if i == j:
                continue
            r = schema.role_index(arg.role)
            if roles[i, j] != 0 and roles[i, j] != r:
                raise AnnotationError(
                    f"two roles for trigger {i} and mention begin {j}: "
                    f"{schema.roles[roles[i, j]]} and {arg.role}"
                )
            roles[i, j] = r
    return ArgumentMatrix(roles=roles, schema=schema)


def event_type_sequence(sentence: Sentence) -> tuple[str, ...]:
    types = [OTHER] * sentence.n
    for ev in sentence.events:
        types[ev.trigger] = ev.type
    return tuple(types)


def gold_labels(sentence: Sentence, schema: LabelSchema) -> GoldLabels:
    return GoldLabels(
        E=encode_bio(sentence, schema),
        T=event_type_sequence(sentence),
        A=build_argument_matrix(sentence, schema),
    )


# ==================================================
# RECORD PARSING
# ==================================================

def _span_head(start: int, end: int, deps: Optional[list]) -> int:
    """Token of [start, end] whose head lies outside the span, else the first token."""
    if deps:
        for k in range(start, end + 1):
            if k < len(deps):
                head = deps[k].get("head", -1) if isinstance(deps[k], dict) else -1
                if not start <= head <= end:
                    return k
    return start


def _normalize_events(record: dict, source: str) -> dict:
    """Reduce span triggers to one token and drop events sharing a trigger."""
    events = record.get("events") or []
    seen: set[int] = set()
    kept = []
    for ev in events:
        if not isinstance(ev, dict):
            kept.append(ev)
            continue
        ev = dict(ev)
        trig = ev.get("trigger")
        if isinstance(trig, (list, tuple)):
            if len(trig) != 2 or not all(isinstance(t, int) for t in trig):
                raise CorpusFormatError(f"trigger span must be [start, end], got {trig}")
            start, end = trig
            if end < start:
                raise AnnotationError(f"span error: trigger end {end} < start {start}")
            ev["trigger"] = _span_head(start, end, record.get("deps"))
            if end > start:
                logger.warning(f"{source}: multi-token trigger {trig} reduced to token {ev['trigger']}")
        if isinstance(ev.get("trigger"), int):
            if ev["trigger"] in seen:
                logger.warning(f"{source}: second event on trigger {ev['trigger']} dropped")
                continue
            seen.add(ev["trigger"])
        kept.append(ev)
    record = dict(record)
    record["events"] = kept
    return record


def parse_record(record: dict, schema: Optional[LabelSchema] = None, source: str = "<record>") -> Sentence:
    """Validate one decoded record and build a Sentence."""
    if not isinstance(record, dict):
        raise CorpusFormatError("record must be a JSON object")
    if "tokens" not in record:
        raise CorpusFormatError("record has no 'tokens' field")
    record = _normalize_events(record, source)
    try:
        sentence = Sentence.model_validate(record)
    except ValidationError as e:
        raise CorpusFormatError(f"malformed record: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}") from e
    ok, error = validate_sentence(sentence)
    if not ok:
        if error.startswith(("span", "overlapping", "argument", "trigger")):
            raise AnnotationError(error)
        raise CorpusFormatError(error)
    if schema is not None:
        unknown = schema.unknown_labels(sentence)
        if unknown:
            raise SchemaMismatchError(f"labels not in schema: {', '.join(unknown)}")
    return sentence


def load_corpus(path: str | Path, schema: Optional[LabelSchema] = None) -> list[Sentence]:
    """
    Parse a line-delimited corpus file. Blank lines are skipped; the first
    invalid record aborts the load with its line number.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Corpus file not found: {p}")
    sentences: list[Sentence] = []
    with open(p, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            source = f"{p}:{line_no}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(f"invalid JSON ({e.msg})", str(p), line_no) from e
            try:
                sentences.append(parse_record(record, schema, source))
            except SchemaMismatchError as e:
                raise SchemaMismatchError(f"{source}: {e}") from e
            except AnnotationError as e:
                raise AnnotationError(str(e), str(p), line_no) from e
            except CorpusFormatError as e:
                raise CorpusFormatError(str(e), str(p), line_no) from e
    logger.info(f"Loaded {len(sentences)} sentences from {p}")
    return sentences


def save_corpus(path: str | Path, sentences: Iterable[Sentence]) -> int:
    """Write sentences as line-delimited records. Returns the record count."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(s.to_record(), ensure_ascii=False))
            f.write("\n")
            count += 1
    return count


def split_corpus(sentences: Sequence[Sentence], sizes: Sequence[int]) -> list[list[Sentence]]:
    """Consecutive slices of the given sizes."""
    if sum(sizes) > len(sentences):
        raise ContractError(f"split sizes {list(sizes)} exceed corpus size {len(sentences)}")
    parts, offset = [], 0
    for size in sizes:
        parts.append(list(sentences[offset:offset + size]))
        offset += size
    return parts
