"""
Deterministic synthetic corpus built from sentence templates.

Entity type, trigger word and argument role are functions of the
vocabulary items and template slots, so the patterns are learnable. With
ambiguity > 0 some triggers are drawn from a pool of words shared between
event types ("fire" is Attack or End-Position, "took" is Transport or
Transfer-Ownership).
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from jointee.models import Argument, Dependency, EntityMention, Event, Sentence

logger = logging.getLogger(__name__)

# ==================================================
# LEXICONS
# ==================================================

ENTITY_PHRASES: dict[str, list[tuple[str, ...]]] = {
    "PER": [("soldiers",), ("john", "smith"), ("marines",), ("mary", "jones"), ("rebels",), ("the", "pilot")],
    "ORG": [("acme", "corp"), ("ge",), ("the", "ministry"), ("reuters",), ("boeing",)],
    "LOC": [("baghdad",), ("basra",), ("new", "york"), ("kabul",), ("the", "border")],
    "VEH": [("a-10", "warthog"), ("tank",), ("truck",), ("helicopter",), ("convoy",)],
    "WEA": [("missiles",), ("rifles",), ("bombs",), ("grenades",)],
    "TIME": [("today",), ("yesterday",), ("last", "week"), ("monday",)],
    "VALUE": [("five", "million", "dollars"), ("$200",), ("ten", "dollars")],
}

TRIGGER_WORDS: dict[str, list[str]] = {
    "Attack": ["hit", "attacked", "bombed", "struck"],
    "Transport": ["traveled", "moved", "went", "drove"],
    "Transfer-Ownership": ["bought", "acquired", "purchased"],
    "End-Position": ["fired", "dismissed", "sacked"],
}

AMBIGUOUS_TRIGGERS: dict[str, list[str]] = {
    "fire": ["Attack", "End-Position"],
    "took": ["Transport", "Transfer-Ownership"],
}

ENTITY_POS = {"PER": "NNP", "ORG": "NNP", "LOC": "NNP", "VEH": "NN", "WEA": "NNS", "TIME": "NN", "VALUE": "CD"}


# ==================================================
# TEMPLATES
# ==================================================

@dataclass(frozen=True)
class Slot:
    etype: str
    roles: dict = field(default_factory=dict)  # event index -> role
    rel: str = "dobj"  # pobj attaches to the preceding preposition


@dataclass(frozen=True)
class Word:
    text: str
    pos: str
    rel: str
    chunk: str = "O"


@dataclass(frozen=True)
class Trigger:
    event: int = 0


@dataclass(frozen=True)
class Template:
    name: str
    events: tuple[str, ...]
    items: tuple[Union[Slot, Word, Trigger], ...]
    weight: float = 1.0


TEMPLATES: tuple[Template, ...] = (
    Template("attack_agent", ("Attack",), (
        Slot("PER", {0: "Attacker"}, "nsubj"), Trigger(), Slot("VEH", {0: "Target"}, "dobj"),
        Slot("TIME", {0: "Time"}, "tmod"))),
    Template("attack_passive", ("Attack",), (
        Word("another", "DT", "det", "B-NP"), Slot("VEH", {0: "Target"}, "nsubjpass"),
        Word("was", "VBD", "auxpass", "B-VP"), Trigger(), Slot("TIME", {0: "Time"}, "tmod"))),
    Template("attack_instrument", ("Attack",), (
        Slot("PER", {0: "Attacker"}, "nsubj"), Trigger(), Slot("LOC", {0: "Target"}, "dobj"),
        Word("with", "IN", "prep", "B-PP"), Slot("WEA", {0: "Instrument"}, "pobj"))),
    Template("transport_full", ("Transport",), (
        Slot("PER", {0: "Artifact"}, "nsubj"), Trigger(), Word("from", "IN", "prep", "B-PP"),
        Slot("LOC", {0: "Origin"}, "pobj"), Word("to", "IN", "prep", "B-PP"),
        Slot("LOC", {0: "Destination"}, "pobj"), Slot("TIME", {0: "Time"}, "tmod"))),
    Template("transport_short", ("Transport",), (
        Slot("PER", {0: "Artifact"}, "nsubj"), Trigger(), Word("to", "IN", "prep", "B-PP"),
        Slot("LOC", {0: "Destination"}, "pobj"))),
    Template("transfer_ownership", ("Transfer-Ownership",), (
        Slot("ORG", {0: "Buyer"}, "nsubj"), Trigger(), Slot("VEH", {0: "Artifact"}, "dobj"),
        Word("from", "IN", "prep", "B-PP"), Slot("ORG", {0: "Seller"}, "pobj"),
        Word("for", "IN", "prep", "B-PP"), Slot("VALUE", {0: "Price"}, "pobj"))),
    Template("end_position", ("End-Position",), (
        Slot("ORG", {0: "Entity"}, "nsubj"), Trigger(), Slot("PER", {0: "Person"}, "dobj"),
        Slot("TIME", {0: "Time"}, "tmod"))),
    Template("transport_then_attack", ("Transport", "Attack"), (
        Slot("PER", {0: "Artifact", 1: "Attacker"}, "nsubj"), Trigger(0), Word("to", "IN", "prep", "B-PP"),
        Slot("LOC", {0: "Destination", 1: "Place"}, "pobj"), Word("and", "CC", "cc"), Trigger(1),
        Slot("VEH", {1: "Target"}, "dobj"))),
    Template("no_event_stay", (), (
        Slot("PER", {}, "nsubj"), Word("stayed", "VBD", "root", "B-VP"), Word("in", "IN", "prep", "B-PP"),
        Slot("LOC", {}, "pobj"), Slot("TIME", {}, "tmod"))),
    Template("no_event_parked", (), (
        Word("the", "DT", "det", "B-NP"), Slot("VEH", {}, "nsubjpass"), Word("was", "VBD", "auxpass", "B-VP"),
        Word("parked", "VBN", "root", "I-VP"), Word("near", "IN", "prep", "B-PP"), Slot("LOC", {}, "pobj"))),
)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    sentences: int = 50
    seed: int = 7
    ambiguity: float = 0.0
    with_linguistic: bool = True


@dataclass
class SyntheticCorpus:
    sentences: list[Sentence]
    template_counts: Counter

    def __len__(self) -> int:
        return len(self.sentences)


def _pick(rng: np.random.Generator, items: list):
    return items[int(rng.integers(len(items)))]


def _trigger_word(rng: np.random.Generator, event_type: str, ambiguity: float) -> str:
    if ambiguity > 0 and rng.random() < ambiguity:
        shared = [w for w, types in AMBIGUOUS_TRIGGERS.items() if event_type in types]
        if shared:
            return _pick(rng, shared)
    return _pick(rng, TRIGGER_WORDS[event_type])


def render_template(template: Template, rng: np.random.Generator, ambiguity: float = 0.0,
                    with_linguistic: bool = True) -> Sentence:
    tokens: list[str] = []
    pos: list[str] = []
    chunk: list[str] = []
    heads: list[Optional[int]] = []  # None = attach to root, resolved below
    rels: list[str] = []
    entities: list[EntityMention] = []
    slot_roles: list[dict] = []
    triggers: dict[int, int] = {}
    root: Optional[int] = None
    last_prep: Optional[int] = None

    for item in template.items:
        k = len(tokens)
        if isinstance(item, Trigger):
            tokens.append(_trigger_word(rng, template.events[item.event], ambiguity))
            pos.append("VBD")
            chunk.append("B-VP")
            triggers[item.event] = k
            if root is None:
                root = k
                heads.append(-1)
                rels.append("root")
            else:
                heads.append(None)
                rels.append("conj")
        elif isinstance(item, Word):
            tokens.append(item.text)
            pos.append(item.pos)
            chunk.append(item.chunk)
            if item.rel == "root":
                root = k
                heads.append(-1)
            else:
                heads.append(None)
            rels.append(item.rel)
            if item.rel == "prep":
                last_prep = k
        else:
            phrase = _pick(rng, ENTITY_PHRASES[item.etype])
            end = k + len(phrase) - 1
            for off, word in enumerate(phrase):
                tokens.append(word)
                pos.append("DT" if word == "the" else ENTITY_POS[item.etype])
                chunk.append("B-NP" if off == 0 else "I-NP")
                if k + off == end:
                    heads.append(last_prep if item.rel == "pobj" and last_prep is not None else None)
                    rels.append(item.rel)
                else:
                    heads.append(end)
                    rels.append("det" if word == "the" else "compound")
            entities.append(EntityMention(start=k, end=end, type=item.etype))
            slot_roles.append(item.roles)

    resolved = [root if h is None else h for h in heads]
    events = []
    for ev_idx, ev_type in enumerate(template.events):
        args = tuple(
            Argument(entity=m, role=roles[ev_idx])
            for m, roles in enumerate(slot_roles) if ev_idx in roles
        )
        events.append(Event(trigger=triggers[ev_idx], type=ev_type, args=args))

    return Sentence(
        tokens=tuple(tokens),
        entities=tuple(entities),
        events=tuple(events),
        pos=tuple(pos) if with_linguistic else None,
        chunk=tuple(chunk) if with_linguistic else None,
        deps=tuple(Dependency(head=h, rel=r) for h, r in zip(resolved, rels)) if with_linguistic else None,
    )


def generate_synthetic_corpus(spec: Optional[SyntheticCorpusSpec] = None, **kwargs) -> SyntheticCorpus:
    """
    Sample spec.sentences template instances under spec.seed.
    Same spec, same corpus.
    """
    spec = spec or SyntheticCorpusSpec(**kwargs)
    if not 0.0 <= spec.ambiguity <= 1.0:
        raise ValueError("ambiguity must be in [0, 1]")
    rng = np.random.default_rng(spec.seed)
    weights = np.array([t.weight for t in TEMPLATES], dtype=float)
    weights /= weights.sum()
    counts: Counter = Counter()
    sentences = []
    for _ in range(spec.sentences):
        template = TEMPLATES[int(rng.choice(len(TEMPLATES), p=weights))]
        counts[template.name] += 1
        sentences.append(render_template(template, rng, spec.ambiguity, spec.with_linguistic))
    logger.info(f"Generated {len(sentences)} synthetic sentences (seed={spec.seed}, ambiguity={spec.ambiguity})")
    return SyntheticCorpus(sentences=sentences, template_counts=counts)


def template_by_name(name: str) -> Template:
    for t in TEMPLATES:
        if t.name == name:
            return t
    raise KeyError(name)


def running_example() -> Sentence:
    """'another a-10 warthog was hit today': VEH@[1,2], TIME@[5,5], Attack on 'hit'."""
    return Sentence(
        tokens=("another", "a-10", "warthog", "was", "hit", "today"),
        entities=(
            EntityMention(start=1, end=2, type="VEH"),
            EntityMention(start=5, end=5, type="TIME"),
        ),
        events=(
            Event(trigger=4, type="Attack", args=(Argument(entity=0, role="Target"), Argument(entity=1, role="Time"))),
        ),
    )
