"""
Sentence records, label schema and the label structures E, T, A.

Corpus records map one-to-one onto Sentence; field names are the record
field names (tokens, entities, events, pos, chunk, deps). The last three
are optional linguistic annotations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from jointee.errors import SchemaMismatchError

OTHER = "Other"
OUTSIDE = "O"

# Values and time expressions are entity types in their own right.
VALUE_TIME_TYPES = ("TIME", "VALUE")


class EntityMention(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int
    end: int  # inclusive
    type: str


class Argument(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity: int  # index into Sentence.entities
    role: str


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    trigger: int  # single token
    type: str
    args: tuple[Argument, ...] = ()


class Dependency(BaseModel):
    model_config = ConfigDict(frozen=True)

    head: int  # -1 for the root
    rel: str


class Sentence(BaseModel):
    """
    One annotated sentence. Immutable after load.

    Bounds, overlap and cross-reference checks live in corpus.validate_sentence
    so that malformed input can be reported with its line number.
    """
    model_config = ConfigDict(frozen=True)

    tokens: tuple[str, ...]
    entities: tuple[EntityMention, ...] = ()
    events: tuple[Event, ...] = ()
    pos: Optional[tuple[str, ...]] = None
    chunk: Optional[tuple[str, ...]] = None
    deps: Optional[tuple[Dependency, ...]] = None

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def entity_mentions(self) -> tuple[EntityMention, ...]:
        return self.entities

    @property
    def has_linguistic(self) -> bool:
        return self.pos is not None or self.chunk is not None or self.deps is not None

    def trigger_indices(self) -> list[int]:
        return [ev.trigger for ev in self.events]

    def mention_begins(self) -> list[int]:
        return sorted(m.start for m in self.entities)

    def to_record(self) -> dict:
        record = self.model_dump(mode="json", exclude_none=True)
        return record


# --------------------------------------------------
# Label schema
# --------------------------------------------------

@dataclass(frozen=True)
class LabelSchema:
    """
    Closed label sets. Other is index 0 of event_types and roles; BIO tags are
    O followed by B-X, I-X for each entity type X in order.
    """
    entity_types: tuple[str, ...]
    event_types: tuple[str, ...]
    roles: tuple[str, ...]
    bio_tags: tuple[str, ...] = field(init=False)
    _bio_index: dict = field(init=False, repr=False, compare=False)
    _event_index: dict = field(init=False, repr=False, compare=False)
    _role_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.event_types or self.event_types[0] != OTHER:
            raise SchemaMismatchError(f"event_types must start with {OTHER!r}")
        if not self.roles or self.roles[0] != OTHER:
            raise SchemaMismatchError(f"roles must start with {OTHER!r}")
        tags = [OUTSIDE]
        for et in self.entity_types:
            tags.extend([f"B-{et}", f"I-{et}"])
        object.__setattr__(self, "bio_tags", tuple(tags))
        object.__setattr__(self, "_bio_index", {t: k for k, t in enumerate(tags)})
        object.__setattr__(self, "_event_index", {t: k for k, t in enumerate(self.event_types)})
        object.__setattr__(self, "_role_index", {t: k for k, t in enumerate(self.roles)})

    @classmethod
    def create(cls, entity_types: Iterable[str], event_types: Iterable[str], roles: Iterable[str]) -> "LabelSchema":
        """Build from unordered label sets; Other is prepended where missing."""
        events = [OTHER] + [e for e in event_types if e != OTHER]
        role_list = [OTHER] + [r for r in roles if r != OTHER]
        return cls(tuple(entity_types), tuple(events), tuple(role_list))

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sentence], include_value_time: bool = True) -> "LabelSchema":
        entity_types: set[str] = set(VALUE_TIME_TYPES) if include_value_time else set()
        event_types: set[str] = set()
        roles: set[str] = set()
        for s in sentences:
            entity_types.update(m.type for m in s.entities)
            for ev in s.events:
                event_types.add(ev.type)
                roles.update(a.role for a in ev.args)
        event_types.discard(OTHER)
        roles.discard(OTHER)
        return cls.create(sorted(entity_types), sorted(event_types), sorted(roles))

    def bio_index(self, tag: str) -> int:
        try:
            return self._bio_index[tag]
        except KeyError:
            raise SchemaMismatchError(f"Unknown BIO tag: {tag}") from None

    def event_index(self, event_type: str) -> int:
        try:
            return self._event_index[event_type]
        except KeyError:
            raise SchemaMismatchError(f"Unknown event type: {event_type}") from None

    def role_index(self, role: str) -> int:
        try:
            return self._role_index[role]
        except KeyError:
            raise SchemaMismatchError(f"Unknown argument role: {role}") from None

    def unknown_labels(self, sentence: Sentence) -> list[str]:
        """Labels used by a sentence that this schema does not know."""
        missing = []
        for m in sentence.entities:
            if m.type not in self.entity_types:
                missing.append(f"entity type {m.type!r}")
        for ev in sentence.events:
            if ev.type not in self._event_index or ev.type == OTHER:
                missing.append(f"event type {ev.type!r}")
            for a in ev.args:
                if a.role not in self._role_index or a.role == OTHER:
                    missing.append(f"role {a.role!r}")
        return missing

    def covers(self, other: "LabelSchema") -> bool:
        return (
            set(other.entity_types) <= set(self.entity_types)
            and set(other.event_types) <= set(self.event_types)
            and set(other.roles) <= set(self.roles)
        )

    def to_dict(self) -> dict:
        return {
            "entity_types": list(self.entity_types),
            "event_types": list(self.event_types),
            "roles": list(self.roles),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabelSchema":
        return cls(tuple(data["entity_types"]), tuple(data["event_types"]), tuple(data["roles"]))


# --------------------------------------------------
# Gold label structures
# --------------------------------------------------

@dataclass(frozen=True, eq=False)
class ArgumentMatrix:
    """n x n role indices; a[i][j] is the role mention-begin j plays for trigger i."""
    roles: np.ndarray
    schema: LabelSchema

    @property
    def n(self) -> int:
        return int(self.roles.shape[0])

    def label(self, i: int, j: int) -> str:
        return self.schema.roles[int(self.roles[i, j])]

    def row(self, i: int) -> list[str]:
        return [self.schema.roles[int(k)] for k in self.roles[i]]


@dataclass(frozen=True, eq=False)
class GoldLabels:
    E: tuple[str, ...]
    T: tuple[str, ...]
    A: ArgumentMatrix


# --------------------------------------------------
# Extraction output
# --------------------------------------------------

@dataclass(frozen=True)
class ExtractedEvent:
    trigger: int
    type: str
    arguments: tuple[tuple[int, str], ...] = ()  # (mention begin index, role)


@dataclass(frozen=True)
class Extraction:
    """Entities and events of one sentence, arguments anchored on mention begins."""
    tokens: tuple[str, ...]
    mentions: tuple[EntityMention, ...] = ()
    events: tuple[ExtractedEvent, ...] = ()

    @classmethod
    def from_sentence(cls, sentence: Sentence) -> "Extraction":
        events = []
        for ev in sentence.events:
            args = tuple((sentence.entities[a.entity].start, a.role) for a in ev.args)
            events.append(ExtractedEvent(ev.trigger, ev.type, args))
        return cls(sentence.tokens, tuple(sentence.entities), tuple(events))

    def mention_at(self, begin: int) -> Optional[EntityMention]:
        for m in self.mentions:
            if m.start == begin:
                return m
        return None

    def to_sentence(self, source: Optional[Sentence] = None) -> Sentence:
        """
        Convert to a corpus record. Linguistic annotations are copied from
        source when given, so predictions can be fed back to the loader.
        """
        mentions = sorted(self.mentions, key=lambda m: m.start)
        by_begin = {m.start: k for k, m in enumerate(mentions)}
        events = []
        for ev in self.events:
            args = tuple(Argument(entity=by_begin[b], role=r) for b, r in ev.arguments if b in by_begin)
            events.append(Event(trigger=ev.trigger, type=ev.type, args=args))
        return Sentence(
            tokens=self.tokens,
            entities=tuple(mentions),
            events=tuple(events),
            pos=source.pos if source is not None else None,
            chunk=source.chunk if source is not None else None,
            deps=source.deps if source is not None else None,
        )
