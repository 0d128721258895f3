"""
Token input vectors x_i and local contexts D_i.

x_i = [d_i ; POS one-hot ; chunk one-hot ; dependency-relation indicators]
when the binary encoder is enabled, else x_i = d_i. D_i concatenates the
embeddings in a window u around i with zero vectors past the sentence edges.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from jointee.errors import ConfigError, EmbeddingFormatError
from jointee.models import Sentence
from jointee.tensor import Tensor, concat, lookup

logger = logging.getLogger(__name__)

UNK = "<unk>"


# ==================================================
# VOCABULARY / EMBEDDINGS
# ==================================================

class Vocabulary:
    """word -> dense index, UNK at index 0."""

    def __init__(self, words: Sequence[str], counts: Optional[dict[str, int]] = None, lowercase: bool = True):
        self.lowercase = lowercase
        self.words: list[str] = [UNK] + [w for w in words if w != UNK]
        self.index: dict[str, int] = {w: k for k, w in enumerate(self.words)}
        self.counts: dict[str, int] = dict(counts or {})

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return self.normalize(word) in self.index

    @property
    def unk_index(self) -> int:
        return 0

    def normalize(self, word: str) -> str:
        return word.lower() if self.lowercase else word

    def lookup(self, word: str) -> int:
        return self.index.get(self.normalize(word), 0)

    def word_dropout_index(self, word: str, rng: Optional[np.random.Generator], prob: float) -> int:
        """Frequency-1 words become UNK with probability prob during training."""
        idx = self.lookup(word)
        if rng is None or prob <= 0.0 or idx == 0:
            return idx
        if self.counts.get(self.normalize(word), 0) == 1 and rng.random() < prob:
            return 0
        return idx

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sentence], lowercase: bool = True) -> "Vocabulary":
        counts: Counter = Counter()
        for s in sentences:
            counts.update(w.lower() if lowercase else w for w in s.tokens)
        words = sorted(counts)
        return cls(words, dict(counts), lowercase)

    def to_dict(self) -> dict:
        return {"words": self.words[1:], "counts": self.counts, "lowercase": self.lowercase}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(data["words"], data.get("counts"), data.get("lowercase", True))


class EmbeddingTable:
    """|V| x dim trainable matrix; updated during training."""

    trainable = True

    def __init__(self, matrix: np.ndarray, pretrained_rows: int = 0):
        self.table = Tensor(matrix, requires_grad=True, name="embeddings")
        self.pretrained_rows = pretrained_rows

    @property
    def dim(self) -> int:
        return int(self.table.shape[1])

    @classmethod
    def random(cls, vocab: Vocabulary, dim: int, rng: np.random.Generator, init_range: float = 0.25) -> "EmbeddingTable":
        return cls(rng.uniform(-init_range, init_range, size=(len(vocab), dim)))


def load_pretrained(
    path: str | Path,
    vocab: Vocabulary,
    dim: int = 300,
    rng: Optional[np.random.Generator] = None,
    init_range: float = 0.25,
) -> EmbeddingTable:
    """
    Read "word v1 ... v_dim" lines. Rows of matched words come from the file,
    the rest are uniform in [-init_range, init_range]. An optional
    word2vec-style "count dim" header line is skipped.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Embedding file not found: {p}")
    rng = rng if rng is not None else np.random.default_rng(0)
    matrix = rng.uniform(-init_range, init_range, size=(len(vocab), dim))
    matched: set[int] = set()
    file_dim: Optional[int] = None
    with open(p, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            items = line.rstrip("\n").split()
            if not items:
                continue
            if line_no == 1 and len(items) == 2 and all(x.isdigit() for x in items):
                continue
            values = items[1:]
            if file_dim is None:
                file_dim = len(values)
                if file_dim != dim:
                    raise EmbeddingFormatError(f"{p}:{line_no}: vectors have dimension {file_dim}, expected {dim}")
            elif len(values) != file_dim:
                raise EmbeddingFormatError(
                    f"{p}:{line_no}: dimension {len(values)} differs from earlier lines ({file_dim})"
                )
            word = vocab.normalize(items[0])
            idx = vocab.index.get(word)
            if idx is None or idx in matched:
                continue
            try:
                matrix[idx] = np.array(values, dtype=np.float64)
            except ValueError as e:
                raise EmbeddingFormatError(f"{p}:{line_no}: non-numeric vector value") from e
            matched.add(idx)
    if file_dim is None:
        raise EmbeddingFormatError(f"{p}: no vectors found")
    logger.info(f"Pre-trained embeddings: {len(matched)}/{len(vocab)} vocabulary rows matched from {p}")
    return EmbeddingTable(matrix, pretrained_rows=len(matched))


# ==================================================
# BINARY LINGUISTIC FEATURES
# ==================================================

def surrounding_relations(sentence: Sentence, i: int) -> set[str]:
    """Relation labels of the arcs touching token i (its own head arc and its dependents)."""
    if sentence.deps is None:
        return set()
    rels = set()
    if sentence.deps[i].head != -1:
        rels.add(sentence.deps[i].rel)
    for d in sentence.deps:
        if d.head == i:
            rels.add(d.rel)
    return rels


class BinaryFeatureEncoder:
    """One-hot POS, one-hot chunk tag and dependency-relation indicators."""

    def __init__(self, pos_tags: Sequence[str] = (), chunk_tags: Sequence[str] = (),
                 relations: Sequence[str] = (), enabled: bool = True):
        self.enabled = enabled
        self.pos_index = {t: k for k, t in enumerate(pos_tags)}
        self.chunk_index = {t: k for k, t in enumerate(chunk_tags)}
        self.rel_index = {t: k for k, t in enumerate(relations)}

    @classmethod
    def fit(cls, sentences: Iterable[Sentence], enabled: bool = True) -> "BinaryFeatureEncoder":
        pos, chunk, rels = set(), set(), set()
        if enabled:
            for s in sentences:
                if s.pos is not None:
                    pos.update(s.pos)
                if s.chunk is not None:
                    chunk.update(s.chunk)
                if s.deps is not None:
                    rels.update(d.rel for d in s.deps if d.head != -1)
        return cls(sorted(pos), sorted(chunk), sorted(rels), enabled)

    @property
    def width(self) -> int:
        if not self.enabled:
            return 0
        return len(self.pos_index) + len(self.chunk_index) + len(self.rel_index)

    def encode(self, sentence: Sentence, i: int) -> np.ndarray:
        """Binary block for token i; unseen tags leave their block at zero."""
        out = np.zeros(self.width)
        if not self.enabled:
            return out
        offset = 0
        if sentence.pos is not None and sentence.pos[i] in self.pos_index:
            out[offset + self.pos_index[sentence.pos[i]]] = 1.0
        offset += len(self.pos_index)
        if sentence.chunk is not None and sentence.chunk[i] in self.chunk_index:
            out[offset + self.chunk_index[sentence.chunk[i]]] = 1.0
        offset += len(self.chunk_index)
        for rel in surrounding_relations(sentence, i):
            if rel in self.rel_index:
                out[offset + self.rel_index[rel]] = 1.0
        return out

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "pos": list(self.pos_index),
            "chunk": list(self.chunk_index),
            "relations": list(self.rel_index),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BinaryFeatureEncoder":
        return cls(data["pos"], data["chunk"], data["relations"], data["enabled"])


@dataclass
class FeatureTables:
    vocab: Vocabulary
    embeddings: EmbeddingTable
    binary: BinaryFeatureEncoder

    @property
    def input_width(self) -> int:
        return self.embeddings.dim + self.binary.width


# ==================================================
# TOKEN ENCODING
# ==================================================

def token_embedding(sentence: Sentence, i: int, tables: FeatureTables,
                    rng: Optional[np.random.Generator] = None, unk_prob: float = 0.0) -> Tensor:
    """d_i, with training-time UNK replacement when rng is given."""
    idx = tables.vocab.word_dropout_index(sentence.tokens[i], rng, unk_prob)
    return lookup(tables.embeddings.table, idx)


def encode_token(sentence: Sentence, i: int, tables: FeatureTables, d_i: Optional[Tensor] = None) -> Tensor:
    """x_i = [d_i ; binary block]; x_i = d_i when the binary encoder is disabled."""
    if d_i is None:
        d_i = token_embedding(sentence, i, tables)
    if tables.binary.width == 0:
        return d_i
    return concat([d_i, Tensor.constant(tables.binary.encode(sentence, i))])


def local_context(embeddings: Sequence[Tensor], i: int, u: int) -> Tensor:
    """D_i = [d_{i-u}, ..., d_i, ..., d_{i+u}] with zero padding out of range."""
    if u < 0:
        raise ConfigError(f"window u must be >= 0, got {u}")
    if not embeddings:
        raise ConfigError("local_context needs at least one embedding")
    dim = embeddings[0].size
    zero = Tensor.constant(np.zeros(dim))
    parts = []
    for k in range(i - u, i + u + 1):
        parts.append(embeddings[k] if 0 <= k < len(embeddings) else zero)
    return concat(parts)
