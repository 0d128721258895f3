"""
Trigger and argument role prediction.

Triggers are chosen greedily left to right from FF^ED over [h_i, D_i]. For
every trigger, each mention-begin token j gets a role from FF^ARP over

    R_ij = [h_i, D_i, h_j, D_j, V(entity label), V(event label), M_i, B_ij]

where the entity label is the BIO tag at j and the event label the type at
i (the literal indexing switch swaps these to the tag at i and the type at
j). M_i records the event types and roles assigned before step i.
"""
from __future__ import annotations

import hashlib
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from jointee.errors import ContractError, DimensionError
from jointee.layers import FeedForward
from jointee.models import OTHER, ExtractedEvent, LabelSchema, Sentence
from jointee.tensor import Tensor, concat

logger = logging.getLogger(__name__)


def one_hot(index: int, width: int) -> Tensor:
    v = np.zeros(width)
    v[index] = 1.0
    return Tensor.constant(v)


def arp_input_width(h_dim: int, d_dim: int, schema: LabelSchema, bij_width: int) -> int:
    memory = len(schema.event_types) + len(schema.roles)
    return 2 * h_dim + 2 * d_dim + len(schema.bio_tags) + len(schema.event_types) + memory + bij_width


# ==================================================
# MEMORY VECTOR
# ==================================================

class MemoryVector:
    """Event-type bits then role bits; Other bits are never set."""

    def __init__(self, schema: LabelSchema):
        self.schema = schema
        self.bits = np.zeros(len(schema.event_types) + len(schema.roles))

    @property
    def width(self) -> int:
        return int(self.bits.size)

    def update(self, event_type: str, roles: Sequence[str]) -> None:
        before = self.bits.copy()
        if event_type != OTHER:
            self.bits[self.schema.event_index(event_type)] = 1.0
        offset = len(self.schema.event_types)
        for role in roles:
            if role != OTHER:
                self.bits[offset + self.schema.role_index(role)] = 1.0
        assert np.all(self.bits >= before)

    def tensor(self) -> Tensor:
        return Tensor.constant(self.bits.copy())


# ==================================================
# B_ij DISCRETE FEATURES
# ==================================================

def distance_bucket(i: int, j: int) -> str:
    d = j - i
    if d <= -5:
        return "<=-5"
    if d <= -2:
        return "-4..-2"
    if d == -1:
        return "-1"
    if d == 1:
        return "+1"
    if d <= 4:
        return "+2..4"
    return ">=5"


def shortest_dependency_path(sentence: Sentence, i: int, j: int) -> Optional[list[str]]:
    """
    Edge labels from i to j over the undirected dependency tree; an
    upward step is marked "<rel", a downward step ">rel". None without
    dependencies or when no path exists.
    """
    if sentence.deps is None:
        return None
    edges: dict[int, list[tuple[int, str]]] = {k: [] for k in range(sentence.n)}
    for child, dep in enumerate(sentence.deps):
        if 0 <= dep.head < sentence.n:
            edges[child].append((dep.head, f"<{dep.rel}"))
            edges[dep.head].append((child, f">{dep.rel}"))
    previous: dict[int, tuple[int, str]] = {}
    seen = {i}
    queue = deque([i])
    while queue:
        node = queue.popleft()
        if node == j:
            break
        for nxt, label in edges[node]:
            if nxt not in seen:
                seen.add(nxt)
                previous[nxt] = (node, label)
                queue.append(nxt)
    if j not in seen:
        return None
    labels = []
    node = j
    while node != i:
        node, label = previous[node]
        labels.append(label)
    labels.reverse()
    return labels


class BijFeatures:
    """Hashed binary features of the token pair (i, j); width 0 when disabled."""

    def __init__(self, width: int = 1000, seed: int = 1, window: int = 2, enabled: bool = True,
                 lowercase: bool = True):
        self.enabled = enabled
        self._width = width
        self.seed = seed
        self.window = window
        self.lowercase = lowercase

    @property
    def width(self) -> int:
        return self._width if self.enabled else 0

    def feature_names(self, sentence: Sentence, i: int, j: int) -> list[str]:
        def word(k: int) -> str:
            w = sentence.tokens[k]
            return w.lower() if self.lowercase else w

        names = [f"dist={distance_bucket(i, j)}"]
        for off in range(-self.window, self.window + 1):
            for tag, center in (("i", i), ("j", j)):
                k = center + off
                if 0 <= k < sentence.n:
                    names.append(f"ctx_{tag}[{off}]={word(k)}")
        lo, hi = sorted((i, j))
        if hi - lo - 1 <= 2 * self.window:
            names.extend(f"between={word(k)}" for k in range(lo + 1, hi))
        path = shortest_dependency_path(sentence, i, j)
        if path is not None:
            names.append("path=" + " ".join(path))
            names.append(f"path_len={len(path)}")
            names.extend(f"path_edge={label}" for label in path)
        return names

    def _slot(self, name: str) -> int:
        digest = hashlib.blake2b(f"{self.seed}|{name}".encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self._width

    def encode(self, sentence: Sentence, i: int, j: int) -> np.ndarray:
        out = np.zeros(self.width)
        if not self.enabled:
            return out
        for name in self.feature_names(sentence, i, j):
            out[self._slot(name)] = 1.0
        return out

    def to_dict(self) -> dict:
        return {"width": self._width, "seed": self.seed, "window": self.window,
                "enabled": self.enabled, "lowercase": self.lowercase}

    @classmethod
    def from_dict(cls, data: dict) -> "BijFeatures":
        return cls(**data)


# ==================================================
# HEADS
# ==================================================

def ed_features(H: Sequence[Tensor], D: Sequence[Tensor], i: int) -> Tensor:
    return concat([H[i], D[i]])


def trigger_predict(head: FeedForward, H: Sequence[Tensor], D: Sequence[Tensor], i: int) -> tuple[Tensor, int]:
    """Event-type distribution for token i and its argmax (lowest index on ties)."""
    dist = head.distribution(ed_features(H, D, i))
    return dist, int(np.argmax(dist.values))


def build_arp_features(
    H: Sequence[Tensor],
    D: Sequence[Tensor],
    i: int,
    j: int,
    entity_label: str,
    event_label: str,
    memory: Tensor,
    bij: Optional[np.ndarray],
    schema: LabelSchema,
) -> Tensor:
    if i == j:
        raise ContractError(f"argument features need i != j (got {i})")
    parts = [
        H[i], D[i], H[j], D[j],
        one_hot(schema.bio_index(entity_label), len(schema.bio_tags)),
        one_hot(schema.event_index(event_label), len(schema.event_types)),
        memory,
    ]
    if bij is not None and bij.size:
        parts.append(Tensor.constant(bij))
    return concat(parts)


def argument_predict(head: FeedForward, features: Tensor) -> tuple[Tensor, int]:
    if features.size != head.in_dim:
        raise DimensionError("argument_predict", features.shape, (head.in_dim,))
    dist = head.distribution(features)
    return dist, int(np.argmax(dist.values))


# ==================================================
# SENTENCE DECODING
# ==================================================

@dataclass
class DecodeResult:
    events: list[ExtractedEvent] = field(default_factory=list)
    trigger_labels: list[str] = field(default_factory=list)
    arp_evaluations: int = 0


class EventExtractor:
    """FF^ED, FF^ARP and the B_ij encoder, plus the left-to-right decoder."""

    def __init__(self, schema: LabelSchema, ed_head: FeedForward, arp_head: FeedForward,
                 bij: BijFeatures, literal_indexing: bool = False):
        self.schema = schema
        self.ed_head = ed_head
        self.arp_head = arp_head
        self.bij = bij
        self.literal_indexing = literal_indexing

    def pair_labels(self, i: int, j: int, entity_tags: Sequence[str], event_types: Sequence[str]) -> tuple[str, str]:
        """(entity label, event label) fed to R_ij."""
        if self.literal_indexing:
            return entity_tags[i], event_types[j]
        return entity_tags[j], event_types[i]

    def pair_features(self, sentence: Sentence, H, D, i: int, j: int, entity_tags: Sequence[str],
                      event_types: Sequence[str], memory: MemoryVector) -> Tensor:
        e_label, t_label = self.pair_labels(i, j, entity_tags, event_types)
        bij = self.bij.encode(sentence, i, j) if self.bij.enabled else None
        return build_arp_features(H, D, i, j, e_label, t_label, memory.tensor(), bij, self.schema)

    def decode_sentence(self, sentence: Sentence, H: Sequence[Tensor], D: Sequence[Tensor],
                        entity_tags: Sequence[str]) -> DecodeResult:
        n = sentence.n
        if len(entity_tags) != n:
            raise ContractError(f"{len(entity_tags)} entity tags for {n} tokens")
        begins = [j for j, tag in enumerate(entity_tags) if tag.startswith("B-")]
        memory = MemoryVector(self.schema)
        # future positions stay Other under literal indexing
        predicted_types = [OTHER] * n
        result = DecodeResult()
        for i in range(n):
            _, t_idx = trigger_predict(self.ed_head, H, D, i)
            t_label = self.schema.event_types[t_idx]
            predicted_types[i] = t_label
            result.trigger_labels.append(t_label)
            if t_label == OTHER:
                continue
            arguments = []
            for j in begins:
                if j == i:
                    continue
                features = self.pair_features(sentence, H, D, i, j, entity_tags, predicted_types, memory)
                _, a_idx = argument_predict(self.arp_head, features)
                result.arp_evaluations += 1
                role = self.schema.roles[a_idx]
                if role != OTHER:
                    arguments.append((j, role))
            memory.update(t_label, [role for _, role in arguments])
            result.events.append(ExtractedEvent(i, t_label, tuple(arguments)))
        return result
