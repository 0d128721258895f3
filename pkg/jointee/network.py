"""
Joint model: shared BiGRU encoder feeding the entity, trigger and argument
heads, the weighted joint loss C* and end-to-end prediction.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from jointee.config import ModelConfig, TrainConfig
from jointee.corpus import gold_labels
from jointee.encoder import GruParams, encode_bidirectional
from jointee.entity_detector import TransitionMatrix, decode_tags, emd_features, tags_to_mentions
from jointee.errors import ContractError, SchemaMismatchError
from jointee.event_extractor import (
    BijFeatures,
    DecodeResult,
    EventExtractor,
    MemoryVector,
    arp_input_width,
    ed_features,
)
from jointee.features import (
    BinaryFeatureEncoder,
    EmbeddingTable,
    FeatureTables,
    Vocabulary,
    encode_token,
    load_pretrained,
    local_context,
    token_embedding,
)
from jointee.layers import FeedForward, ParameterStore
from jointee.models import OTHER, Extraction, GoldLabels, LabelSchema, Sentence
from jointee.tensor import Tensor, add_n, dropout, log_softmax, pick, scale

logger = logging.getLogger(__name__)

EMBEDDING_PARAM = "embeddings"


@dataclass
class SentenceEncoding:
    embeddings: list[Tensor]  # d_i after dropout
    H: list[Tensor]
    D: list[Tensor]


@dataclass
class LossTerms:
    """Unweighted negative log-likelihoods and the weighted total C*."""
    emd: Tensor
    ed: Tensor
    arp: Tensor
    total: Tensor

    def as_floats(self) -> dict[str, float]:
        return {"emd": self.emd.item(), "ed": self.ed.item(), "arp": self.arp.item(), "total": self.total.item()}


@dataclass
class Prediction:
    entity_tags: tuple[str, ...]
    decode: DecodeResult
    extraction: Extraction


class JointModel:
    """
    Parameters live in one ParameterStore:

        embeddings, encoder.fw.*, encoder.bw.*, emd.*, ed.*, arp.*
    """

    def __init__(
        self,
        schema: LabelSchema,
        vocab: Vocabulary,
        binary: BinaryFeatureEncoder,
        config: ModelConfig,
        rng: np.random.Generator,
        embeddings: Optional[EmbeddingTable] = None,
    ):
        self.schema = schema
        self.config = config
        if embeddings is None:
            embeddings = EmbeddingTable.random(vocab, config.embedding_dim, rng, config.embedding_init_range)
        if embeddings.dim != config.embedding_dim:
            raise ContractError(f"embedding table has dim {embeddings.dim}, config says {config.embedding_dim}")
        if not config.use_external_features and binary.enabled:
            binary = BinaryFeatureEncoder(enabled=False)
        self.tables = FeatureTables(vocab=vocab, embeddings=embeddings, binary=binary)
        self.store = ParameterStore()
        self.store.register(embeddings.table)

        r = config.init_range
        h_dim = 2 * config.hidden_dim
        d_dim = (2 * config.window + 1) * config.embedding_dim
        self.forward_gru = GruParams.create(self.store, "encoder.fw", self.tables.input_width,
                                            config.hidden_dim, rng, r)
        self.backward_gru = GruParams.create(self.store, "encoder.bw", self.tables.input_width,
                                             config.hidden_dim, rng, r)
        self.emd_head = FeedForward(self.store, "emd", h_dim + d_dim, config.ff_hidden_dim,
                                    len(schema.bio_tags), rng, r)
        ed_head = FeedForward(self.store, "ed", h_dim + d_dim, config.ff_hidden_dim,
                              len(schema.event_types), rng, r)
        bij = BijFeatures(config.bij_width, config.bij_seed, config.window,
                          enabled=config.use_external_features, lowercase=config.lowercase)
        arp_head = FeedForward(self.store, "arp", arp_input_width(h_dim, d_dim, schema, bij.width),
                               config.ff_hidden_dim, len(schema.roles), rng, r)
        self.events = EventExtractor(schema, ed_head, arp_head, bij, config.literal_pair_indexing)
        self.transitions = TransitionMatrix.for_tags(schema.bio_tags)

    # --------------------------------------------------
    # Construction
    # --------------------------------------------------

    @classmethod
    def build(
        cls,
        sentences: Sequence[Sentence],
        config: ModelConfig,
        rng: np.random.Generator,
        schema: Optional[LabelSchema] = None,
        pretrained: Optional[str | Path] = None,
    ) -> "JointModel":
        """Derive schema, vocabulary and feature maps from a training corpus."""
        if not sentences:
            raise ContractError("cannot build a model from an empty corpus")
        schema = schema or LabelSchema.from_corpus(sentences)
        vocab = Vocabulary.from_corpus(sentences, lowercase=config.lowercase)
        binary = BinaryFeatureEncoder.fit(sentences, enabled=config.use_external_features)
        embeddings = None
        if pretrained is not None:
            embeddings = load_pretrained(pretrained, vocab, config.embedding_dim, rng, config.embedding_init_range)
        model = cls(schema, vocab, binary, config, rng, embeddings)
        logger.info(
            f"Built joint model: {len(vocab)} words, {len(schema.bio_tags)} BIO tags, "
            f"{len(schema.event_types)} event types, {len(schema.roles)} roles, "
            f"{model.store.count()} parameters"
        )
        return model

    @property
    def parameters(self) -> ParameterStore:
        return self.store

    @property
    def arp_width(self) -> int:
        return self.events.arp_head.in_dim

    def check_schema(self, sentences: Sequence[Sentence]) -> None:
        for k, s in enumerate(sentences):
            unknown = self.schema.unknown_labels(s)
            if unknown:
                raise SchemaMismatchError(f"sentence {k}: labels not in model schema: {', '.join(unknown)}")

    # --------------------------------------------------
    # Forward pass
    # --------------------------------------------------

    def encode(self, sentence: Sentence, rng: Optional[np.random.Generator] = None,
               dropout_rate: float = 0.0, unk_prob: float = 0.0) -> SentenceEncoding:
        if sentence.n < 1:
            raise ContractError("cannot encode an empty sentence")
        d = [
            dropout(token_embedding(sentence, i, self.tables, rng, unk_prob), dropout_rate, rng)
            for i in range(sentence.n)
        ]
        xs = [encode_token(sentence, i, self.tables, d[i]) for i in range(sentence.n)]
        H = encode_bidirectional(xs, self.forward_gru, self.backward_gru)
        D = [local_context(d, i, self.config.window) for i in range(sentence.n)]
        return SentenceEncoding(embeddings=d, H=H, D=D)

    def joint_loss(
        self,
        sentence: Sentence,
        gold: Optional[GoldLabels],
        train: TrainConfig,
        rng: Optional[np.random.Generator] = None,
    ) -> LossTerms:
        """
        C* = alpha * EMD NLL + beta * ED NLL + gamma * ARP NLL with gold labels
        fed to every conditioning feature. The ARP term covers (gold trigger,
        gold mention begin) pairs only. Terms with a zero coefficient are not
        computed.
        """
        if gold is None:
            gold = gold_labels(sentence, self.schema)
        rate = train.dropout if rng is not None else 0.0
        unk = train.unk_replace_prob if rng is not None else 0.0
        enc = self.encode(sentence, rng, rate, unk)
        H, D = enc.H, enc.D
        zero = Tensor(np.zeros(()))

        emd = zero
        if train.alpha > 0:
            terms = []
            for i in range(sentence.n):
                logp = self.emd_head.log_distribution(emd_features(H, D, i), rate, rng)
                terms.append(pick(logp, self.schema.bio_index(gold.E[i])))
            emd = scale(add_n(terms), -1.0)

        ed = zero
        if train.beta > 0:
            terms = []
            for i in range(sentence.n):
                logp = self.events.ed_head.log_distribution(ed_features(H, D, i), rate, rng)
                terms.append(pick(logp, self.schema.event_index(gold.T[i])))
            ed = scale(add_n(terms), -1.0)

        arp = zero
        if train.gamma > 0:
            arp = self._argument_loss(sentence, gold, H, D, rate, rng)

        total = add_n([scale(emd, train.alpha), scale(ed, train.beta), scale(arp, train.gamma)])
        return LossTerms(emd=emd, ed=ed, arp=arp, total=total)

    def _argument_loss(self, sentence: Sentence, gold: GoldLabels, H, D, rate: float,
                       rng: Optional[np.random.Generator]) -> Tensor:
        begins = [j for j, tag in enumerate(gold.E) if tag.startswith("B-")]
        memory = MemoryVector(self.schema)
        terms = []
        for i in range(sentence.n):
            if gold.T[i] == OTHER:
                continue
            for j in begins:
                if j == i:
                    continue
                features = self.events.pair_features(sentence, H, D, i, j, gold.E, gold.T, memory)
                logp = log_softmax(self.events.arp_head.logits(features, rate, rng))
                terms.append(pick(logp, int(gold.A.roles[i, j])))
            memory.update(gold.T[i], [r for r in gold.A.row(i) if r != OTHER])
        return scale(add_n(terms), -1.0)

    # --------------------------------------------------
    # Inference
    # --------------------------------------------------

    def emission_log_probs(self, enc: SentenceEncoding) -> np.ndarray:
        rows = [log_softmax(self.emd_head.logits(emd_features(enc.H, enc.D, i))).values
                for i in range(len(enc.H))]
        return np.vstack(rows)

    def decode_entities(self, sentence: Sentence) -> tuple[str, ...]:
        enc = self.encode(sentence)
        return decode_tags(self.emission_log_probs(enc), self.transitions)

    def decode(self, sentence: Sentence, entity_tags: Optional[Sequence[str]] = None) -> Prediction:
        """
        Viterbi entity tags, then the left-to-right event scan anchored on
        them. entity_tags overrides the model's own tags (pipelined use).
        """
        enc = self.encode(sentence)
        if entity_tags is None:
            entity_tags = decode_tags(self.emission_log_probs(enc), self.transitions)
        entity_tags = tuple(entity_tags)
        result = self.events.decode_sentence(sentence, enc.H, enc.D, entity_tags)
        extraction = Extraction(
            tokens=sentence.tokens,
            mentions=tuple(tags_to_mentions(entity_tags)),
            events=tuple(result.events),
        )
        return Prediction(entity_tags=entity_tags, decode=result, extraction=extraction)

    def predict(self, sentence: Sentence, entity_tags: Optional[Sequence[str]] = None) -> Extraction:
        return self.decode(sentence, entity_tags).extraction
