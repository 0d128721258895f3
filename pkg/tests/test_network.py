import math

import numpy as np
import pytest

from jointee.config import ModelConfig, TrainConfig
from jointee.corpus import gold_labels
from jointee.errors import ContractError, SchemaMismatchError
from jointee.models import Event, Sentence
from jointee.network import JointModel
from jointee.tensor import Tape
from jointee.training import model_rng

from .conftest import schema_one_type, zero_head


def weights(alpha=0.5, beta=1.0, gamma=0.5):
    return TrainConfig(alpha=alpha, beta=beta, gamma=gamma, dropout=0.0, unk_replace_prob=0.0)


@pytest.fixture
def empty_pair():
    """Two tokens, no mentions, no events."""
    return Sentence(tokens=("quiet", "day"))


# ==================================================
# Joint loss
# ==================================================

class TestJointLoss:
    def test_uniform_heads(self, empty_pair):
        model = JointModel.build([empty_pair], ModelConfig.reduced(), model_rng(0), schema=schema_one_type())
        zero_head(model.emd_head)
        zero_head(model.events.ed_head)
        terms = model.joint_loss(empty_pair, None, weights())
        assert terms.emd.item() == pytest.approx(2 * math.log(3))
        assert terms.ed.item() == pytest.approx(2 * math.log(2))
        assert terms.arp.item() == 0.0
        assert terms.total.item() == pytest.approx(0.5 * 2 * math.log(3) + 2 * math.log(2))

    def test_confident_correct_heads_give_zero(self):
        s = Sentence(tokens=("nothing",))
        model = JointModel.build([s], ModelConfig.reduced(), model_rng(0), schema=schema_one_type())
        for head, index in ((model.emd_head, model.schema.bio_index("O")), (model.events.ed_head, 0)):
            zero_head(head)
            head.b2.values[index] = 1e3
        assert model.joint_loss(s, None, weights()).total.item() == 0.0

    def test_decomposition(self, running, running_model):
        train = weights(alpha=0.3, beta=0.7, gamma=1.9)
        terms = running_model.joint_loss(running, None, train)
        expected = 0.3 * terms.emd.item() + 0.7 * terms.ed.item() + 1.9 * terms.arp.item()
        assert terms.total.item() == pytest.approx(expected, rel=1e-12)
        assert terms.arp.item() > 0

    def test_linear_in_argument_weight(self, running, running_model):
        low = running_model.joint_loss(running, None, weights(gamma=0.5)).as_floats()
        high = running_model.joint_loss(running, None, weights(gamma=1.0)).as_floats()
        assert high["total"] - low["total"] == pytest.approx(0.5 * low["arp"], rel=1e-9)

    def test_zero_weights_skip_terms(self, running, running_model):
        terms = running_model.joint_loss(running, None, weights(alpha=0.0, gamma=0.0))
        assert terms.emd.item() == 0.0
        assert terms.arp.item() == 0.0
        assert terms.total.item() == pytest.approx(terms.ed.item())

    def test_explicit_gold_matches_derived(self, running, running_model):
        gold = gold_labels(running, running_model.schema)
        a = running_model.joint_loss(running, gold, weights()).total.item()
        b = running_model.joint_loss(running, None, weights()).total.item()
        assert a == b

    def test_deterministic_without_rng(self, running, running_model):
        train = TrainConfig()  # dropout 0.5, but no rng means evaluation mode
        a = running_model.joint_loss(running, None, train).total.item()
        b = running_model.joint_loss(running, None, train).total.item()
        assert a == b

    def test_dropout_noise_with_rng(self, running, running_model):
        train = TrainConfig(dropout=0.5, unk_replace_prob=0.0)
        a = running_model.joint_loss(running, None, train, np.random.default_rng(1)).total.item()
        b = running_model.joint_loss(running, None, train, np.random.default_rng(2)).total.item()
        assert a != b

    def test_gradients_reach_every_parameter(self, running, running_model):
        running_model.store.zero_grad()
        with Tape() as tape:
            terms = running_model.joint_loss(running, None, weights())
            tape.backward(terms.total)
        for name, p in running_model.store.items():
            assert np.all(np.isfinite(p.grad)), name
        for name in ("emd.W2", "ed.W2", "arp.W2", "encoder.fw.W_h", "encoder.bw.W_r"):
            assert np.any(running_model.store[name].grad), name


# ==================================================
# Inference
# ==================================================

class TestPredict:
    def test_output_is_well_formed(self, synthetic_small, synthetic_model):
        for s in synthetic_small:
            pred = synthetic_model.decode(s)
            assert len(pred.entity_tags) == s.n
            assert synthetic_model.transitions.is_valid(
                [synthetic_model.schema.bio_index(t) for t in pred.entity_tags])
            begins = {m.start for m in pred.extraction.mentions}
            ends = sorted((m.start, m.end) for m in pred.extraction.mentions)
            for (_, end), (start, _) in zip(ends, ends[1:]):
                assert end < start
            for ev in pred.extraction.events:
                assert ev.type in synthetic_model.schema.event_types
                for j, role in ev.arguments:
                    assert j in begins and j != ev.trigger
                    assert role != "Other"

    def test_predict_is_deterministic(self, synthetic_small, synthetic_model):
        s = synthetic_small[1]
        assert synthetic_model.predict(s) == synthetic_model.predict(s)

    def test_extraction_converts_back_to_a_sentence(self, synthetic_small, synthetic_model):
        s = synthetic_small[2]
        back = synthetic_model.predict(s).to_sentence(s)
        assert back.tokens == s.tokens
        assert back.deps == s.deps

    def test_empty_sentence(self, running_model):
        with pytest.raises(ContractError):
            running_model.predict(Sentence(tokens=()))


class TestSchema:
    def test_unknown_event_type(self, running, running_model):
        stranger = Sentence(tokens=("he", "died"), events=(Event(trigger=1, type="Die"),))
        running_model.check_schema([running])
        with pytest.raises(SchemaMismatchError):
            running_model.check_schema([stranger])

    def test_parameter_names(self, running_model):
        names = running_model.store.names()
        assert names[0] == "embeddings"
        for prefix in ("encoder.fw.", "encoder.bw.", "emd.", "ed.", "arp."):
            assert any(n.startswith(prefix) for n in names), prefix

    def test_empty_corpus(self, reduced_config):
        with pytest.raises(ContractError):
            JointModel.build([], reduced_config, model_rng(0))
