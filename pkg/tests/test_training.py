import numpy as np
import pytest
from numpy.testing import assert_array_equal

from jointee.config import ExperimentConfig, ModelConfig, TrainConfig
from jointee.errors import ContractError, SchemaMismatchError
from jointee.layers import ParameterStore
from jointee.models import Event, Extraction, Sentence
from jointee.network import JointModel
from jointee.training import (
    Trainer,
    adadelta_update,
    apply_frobenius,
    constrained_matrices,
    model_rng,
    rescale_frobenius,
    train,
)


def overfit_config(epochs):
    return ExperimentConfig(
        model=ModelConfig(embedding_dim=16, hidden_dim=16, ff_hidden_dim=32, window=1, bij_width=32),
        train=TrainConfig(epochs=epochs, batch_size=1, dropout=0.0, unk_replace_prob=0.0, seed=3),
    )


# ==================================================
# Adadelta
# ==================================================

class TestAdadelta:
    def test_zero_gradient_is_a_no_op(self):
        p = np.array([1.0, -2.0])
        new, eg, ex = adadelta_update(p, np.zeros(2), np.zeros(2), np.zeros(2))
        assert_array_equal(new, p)
        assert not eg.any() and not ex.any()

    def test_first_step_value(self):
        new, _, _ = adadelta_update(np.zeros(1), np.ones(1), np.zeros(1), np.zeros(1), rho=0.95, epsilon=1e-6)
        assert new[0] == pytest.approx(-0.004472, abs=1e-6)

    def test_first_step_ignores_gradient_scale(self):
        small, _, _ = adadelta_update(np.zeros(1), np.ones(1), np.zeros(1), np.zeros(1), epsilon=1e-12)
        large, _, _ = adadelta_update(np.zeros(1), np.full(1, 100.0), np.zeros(1), np.zeros(1), epsilon=1e-12)
        assert large[0] == pytest.approx(small[0], rel=1e-6)

    def test_state_accumulates(self):
        p, eg, ex = np.zeros(1), np.zeros(1), np.zeros(1)
        steps = []
        for _ in range(5):
            before = p.copy()
            p, eg, ex = adadelta_update(p, np.ones(1), eg, ex)
            steps.append(abs(p[0] - before[0]))
        assert all(b > a for a, b in zip(steps, steps[1:]))


# ==================================================
# Frobenius constraint
# ==================================================

class TestFrobenius:
    def test_rescales_to_cap(self):
        out = rescale_frobenius(np.diag([4.0, 3.0]), 3.0)
        np.testing.assert_allclose(out, np.diag([2.4, 1.8]))

    def test_on_the_boundary_unchanged(self):
        W = np.diag([3.0, 0.0])
        assert_array_equal(rescale_frobenius(W, 3.0), W)

    def test_non_positive_cap(self):
        with pytest.raises(ContractError):
            rescale_frobenius(np.eye(2), 0.0)

    def test_embeddings_and_vectors_exempt(self, running_model):
        names = constrained_matrices(running_model.store)
        assert "embeddings" not in names
        assert "emd.W1" in names and "encoder.fw.U_z" in names
        assert not [n for n in names if n.endswith((".b1", ".b2", ".b_z"))]

    def test_apply_leaves_embeddings_alone(self):
        store = ParameterStore()
        store.add("embeddings", np.full((3, 3), 10.0))
        store.add("ff.W1", np.full((3, 3), 10.0))
        store.add("ff.b1", np.full(3, 10.0))
        apply_frobenius(store, 3.0)
        assert np.linalg.norm(store["ff.W1"].values) == pytest.approx(3.0)
        assert_array_equal(store["embeddings"].values, np.full((3, 3), 10.0))
        assert_array_equal(store["ff.b1"].values, np.full(3, 10.0))


# ==================================================
# Trainer
# ==================================================

class TestTrainer:
    def test_same_seed_same_model(self, synthetic_small, tiny_experiment):
        a = train(synthetic_small, tiny_experiment)
        b = train(synthetic_small, tiny_experiment)
        assert a.losses == b.losses
        for name, p in a.model.store.items():
            assert_array_equal(p.values, b.model.store[name].values)

    def test_constraint_holds_after_training(self, synthetic_small, tiny_experiment):
        result = train(synthetic_small, tiny_experiment)
        cap = tiny_experiment.train.frobenius_cap
        for name in constrained_matrices(result.model.store):
            assert np.linalg.norm(result.model.store[name].values) <= cap + 1e-9, name

    def test_batch_larger_than_corpus(self, synthetic_small, reduced_config):
        sentences = synthetic_small[:3]
        model = JointModel.build(sentences, reduced_config, model_rng(0))
        trainer = Trainer(model, TrainConfig(batch_size=50, epochs=2))
        calls = []
        original = trainer.train_batch
        trainer.train_batch = lambda batch: calls.append(len(batch)) or original(batch)
        result = trainer.fit(sentences)
        assert calls == [3, 3]
        assert len(result.losses) == 2

    def test_loss_decreases_on_one_sentence(self, running):
        result = train([running], overfit_config(30))
        assert result.losses[-1] < result.losses[0]

    def test_patience_and_best_state(self, synthetic_small, reduced_config):
        model = JointModel.build(synthetic_small, reduced_config, model_rng(0))
        scripted = iter([0.1, 0.5, 0.3, 0.2, 0.9])
        snapshots = []

        def scorer(m, dev):
            snapshots.append(m.store.state())
            return next(scripted), None

        trainer = Trainer(model, TrainConfig(epochs=5, patience=2, batch_size=6))
        result = trainer.fit(synthetic_small, dev=synthetic_small[:2], dev_scorer=scorer)
        assert len(result.epochs) == 4
        assert result.best_epoch == 2
        assert result.best_score == 0.5
        for name, p in model.store.items():
            assert_array_equal(p.values, snapshots[1][name])

    def test_without_dev_keeps_last_epoch(self, synthetic_small, tiny_experiment):
        result = train(synthetic_small, tiny_experiment)
        assert result.best_epoch == 2
        assert result.best_score is None

    def test_dev_with_unknown_labels(self, synthetic_small, tiny_experiment):
        dev = [Sentence(tokens=("he", "died"), events=(Event(trigger=1, type="Die"),))]
        with pytest.raises(SchemaMismatchError):
            train(synthetic_small, tiny_experiment, dev=dev)

    def test_empty_corpus(self, tiny_experiment):
        with pytest.raises(ContractError):
            train([], tiny_experiment)


@pytest.mark.slow
class TestOverfit:
    def test_recovers_the_running_example(self, running):
        result = train([running], overfit_config(400))
        assert result.losses[-1] < result.losses[0] / 10
        assert result.model.predict(running) == Extraction.from_sentence(running)
