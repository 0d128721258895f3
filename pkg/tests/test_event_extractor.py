import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from jointee.config import ModelConfig
from jointee.corpus import encode_bio, gold_labels
from jointee.errors import ContractError
from jointee.event_extractor import (
    BijFeatures,
    MemoryVector,
    arp_input_width,
    argument_predict,
    build_arp_features,
    distance_bucket,
    shortest_dependency_path,
    trigger_predict,
)
from jointee.models import OTHER, Dependency, LabelSchema, Sentence
from jointee.network import JointModel
from jointee.synthetic import ENTITY_PHRASES
from jointee.tensor import Tensor
from jointee.training import model_rng

from .conftest import zero_head


@pytest.fixture
def parsed():
    return Sentence(
        tokens=("rebels", "attacked", "the", "city"),
        deps=(Dependency(head=1, rel="nsubj"), Dependency(head=-1, rel="root"),
              Dependency(head=3, rel="det"), Dependency(head=1, rel="dobj")),
    )


# ==================================================
# B_ij
# ==================================================

class TestBij:
    @pytest.mark.parametrize("i,j,bucket", [
        (10, 0, "<=-5"), (10, 5, "<=-5"), (10, 6, "-4..-2"), (10, 8, "-4..-2"), (10, 9, "-1"),
        (10, 11, "+1"), (10, 12, "+2..4"), (10, 14, "+2..4"), (10, 15, ">=5"),
    ])
    def test_distance_buckets(self, i, j, bucket):
        assert distance_bucket(i, j) == bucket

    def test_shortest_path(self, parsed):
        assert shortest_dependency_path(parsed, 0, 3) == ["<nsubj", ">dobj"]
        assert shortest_dependency_path(parsed, 2, 0) == ["<det", "<dobj", ">nsubj"]

    def test_no_path_without_dependencies(self):
        assert shortest_dependency_path(Sentence(tokens=("a", "b")), 0, 1) is None

    def test_path_features_absent_without_dependencies(self):
        names = BijFeatures(width=64).feature_names(Sentence(tokens=("a", "b", "c")), 0, 2)
        assert names
        assert not [n for n in names if n.startswith("path")]

    def test_disabled_block_is_empty(self, parsed):
        bij = BijFeatures(width=64, enabled=False)
        assert bij.width == 0
        assert bij.encode(parsed, 0, 3).shape == (0,)

    def test_binary_and_deterministic(self, parsed):
        bij = BijFeatures(width=64, seed=3)
        v = bij.encode(parsed, 1, 3)
        assert v.shape == (64,)
        assert set(np.unique(v)) <= {0.0, 1.0}
        assert v.sum() >= 1
        assert_array_equal(v, BijFeatures(width=64, seed=3).encode(parsed, 1, 3))

    def test_no_entity_type_features(self, synthetic_small):
        entity_types = {t.lower() for t in ENTITY_PHRASES}
        bij = BijFeatures(width=128)
        for s in synthetic_small:
            for i in range(s.n):
                for j in range(s.n):
                    if i != j:
                        for name in bij.feature_names(s, i, j):
                            key = name.split("=", 1)[0]
                            assert not any(t in key.lower() for t in entity_types)


# ==================================================
# Memory vector
# ==================================================

class TestMemory:
    def test_starts_empty_and_is_monotone(self):
        schema = LabelSchema.create(["VEH"], ["Attack", "Transport"], ["Target", "Time"])
        m = MemoryVector(schema)
        assert m.width == 3 + 3
        assert not m.bits.any()
        m.update("Attack", ["Target", OTHER])
        first = m.bits.copy()
        m.update(OTHER, [])
        m.update("Transport", ["Time"])
        assert np.all(m.bits >= first)
        assert m.bits[0] == 0 and m.bits[3] == 0  # Other bits
        assert m.bits.sum() == 4


# ==================================================
# Feature assembly / heads
# ==================================================

class TestArgumentFeatures:
    def test_width_formula_at_default_dimensions(self):
        schema = LabelSchema.create(["PER", "VEH"], ["Attack"], ["Target"])
        width = arp_input_width(600, 5 * 300, schema, 1000)
        assert width == 2 * 600 + 2 * 1500 + 5 + 2 + (2 + 2) + 1000

    def test_model_width_matches_formula(self, running_model):
        c = running_model.config
        h, d = 2 * c.hidden_dim, (2 * c.window + 1) * c.embedding_dim
        assert running_model.arp_width == arp_input_width(h, d, running_model.schema, c.bij_width)

    def test_ablation_removes_block(self, running):
        config = ModelConfig.reduced(use_external_features=False)
        model = JointModel.build([running], config, model_rng(0))
        h, d = 2 * config.hidden_dim, (2 * config.window + 1) * config.embedding_dim
        assert model.arp_width == arp_input_width(h, d, model.schema, 0)
        assert model.tables.input_width == config.embedding_dim

    def test_memory_block_zero_at_sentence_start(self, running, running_model):
        schema = running_model.schema
        enc = running_model.encode(running)
        m = MemoryVector(schema)
        r = build_arp_features(enc.H, enc.D, 4, 1, "B-VEH", "Attack", m.tensor(), None, schema)
        h, d = enc.H[0].size, enc.D[0].size
        start = 2 * h + 2 * d + len(schema.bio_tags) + len(schema.event_types)
        assert not r.values[start:start + m.width].any()
        assert r.values[2 * h + 2 * d + schema.bio_index("B-VEH")] == 1.0

    def test_diagonal_rejected(self, running, running_model):
        enc = running_model.encode(running)
        with pytest.raises(ContractError):
            build_arp_features(enc.H, enc.D, 2, 2, "O", OTHER,
                               MemoryVector(running_model.schema).tensor(), None, running_model.schema)

    def test_gold_conditioned_features_ignore_head_weights(self, running, running_model):
        gold = gold_labels(running, running_model.schema)
        enc = running_model.encode(running)
        ev = running_model.events
        memory = MemoryVector(running_model.schema)
        before = ev.pair_features(running, enc.H, enc.D, 4, 1, gold.E, gold.T, memory).values.copy()
        for head in (ev.ed_head, ev.arp_head):
            head.W1.values[...] = head.W1.values[::-1].copy()
            head.W2.values[...] = np.random.default_rng(0).normal(size=head.W2.shape)
        after = ev.pair_features(running, enc.H, enc.D, 4, 1, gold.E, gold.T, memory).values
        assert before.tobytes() == after.tobytes()

    def test_literal_indexing_swaps_labels(self, running):
        model = JointModel.build([running], ModelConfig.reduced(literal_pair_indexing=True), model_rng(0))
        E = encode_bio(running)
        T = (OTHER,) * 4 + ("Attack", OTHER)
        assert model.events.pair_labels(4, 1, E, T) == ("O", OTHER)
        default = JointModel.build([running], ModelConfig.reduced(), model_rng(0))
        assert default.events.pair_labels(4, 1, E, T) == ("B-VEH", "Attack")


class TestHeads:
    def test_zero_trigger_head_predicts_other(self, running, running_model):
        zero_head(running_model.events.ed_head)
        enc = running_model.encode(running)
        dist, label = trigger_predict(running_model.events.ed_head, enc.H, enc.D, 0)
        n = len(running_model.schema.event_types)
        assert_allclose(dist.values, np.full(n, 1 / n))
        assert label == 0

    def test_zero_argument_head_predicts_other(self, running_model):
        head = running_model.events.arp_head
        zero_head(head)
        dist, label = argument_predict(head, Tensor(np.ones(head.in_dim)))
        assert label == 0
        assert dist.values.sum() == pytest.approx(1.0)


# ==================================================
# Sentence decoding
# ==================================================

def force_trigger(model, event_type):
    head = model.events.ed_head
    zero_head(head)
    head.b2.values[model.schema.event_index(event_type)] = 10.0


class TestDecodeSentence:
    def test_all_outside_means_no_argument_evaluations(self, running, running_model):
        force_trigger(running_model, "Attack")
        result = running_model.decode(running, entity_tags=("O",) * running.n).decode
        assert result.arp_evaluations == 0
        assert all(ev.arguments == () for ev in result.events)
        assert len(result.events) == running.n

    def test_no_triggers_no_events(self, running, running_model):
        force_trigger(running_model, OTHER)
        result = running_model.decode(running, entity_tags=encode_bio(running)).decode
        assert result.events == []
        assert result.arp_evaluations == 0

    def test_skip_rule_count(self, running, running_model):
        force_trigger(running_model, "Attack")
        tags = encode_bio(running)  # begins at 1 and 5
        result = running_model.decode(running, entity_tags=tags).decode
        assert result.arp_evaluations == running.n * 2 - 2

    def test_argmax_invariant_to_logit_shift(self, synthetic_small, synthetic_model):
        s = synthetic_small[0]
        tags = encode_bio(s)
        before = synthetic_model.decode(s, entity_tags=tags).decode
        synthetic_model.events.ed_head.b2.values += 3.0
        synthetic_model.events.arp_head.b2.values += 3.0
        after = synthetic_model.decode(s, entity_tags=tags).decode
        assert before.trigger_labels == after.trigger_labels
        assert before.events == after.events

    def test_wrong_tag_count(self, running, running_model):
        with pytest.raises(ContractError):
            running_model.decode(running, entity_tags=("O",))
