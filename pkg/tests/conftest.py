import numpy as np
import pytest

from jointee.config import ExperimentConfig, ModelConfig, TrainConfig
from jointee.models import LabelSchema
from jointee.network import JointModel
from jointee.synthetic import generate_synthetic_corpus, running_example
from jointee.training import model_rng


@pytest.fixture
def running():
    """'another a-10 warthog was hit today'"""
    return running_example()


@pytest.fixture
def synthetic_small():
    return generate_synthetic_corpus(sentences=12, seed=3).sentences


@pytest.fixture
def reduced_config():
    return ModelConfig.reduced()


@pytest.fixture
def quiet_train():
    """No dropout, no UNK replacement."""
    return TrainConfig(dropout=0.0, unk_replace_prob=0.0)


@pytest.fixture
def tiny_experiment():
    return ExperimentConfig(
        model=ModelConfig.reduced(),
        train=TrainConfig(epochs=2, batch_size=4, seed=5),
    )


@pytest.fixture
def running_model(running, reduced_config):
    return JointModel.build([running], reduced_config, model_rng(1))


@pytest.fixture
def synthetic_model(synthetic_small, reduced_config):
    return JointModel.build(synthetic_small, reduced_config, model_rng(2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def zero_head(head):
    """Zero the output layer so every logit is 0."""
    head.W2.values[...] = 0.0
    head.b2.values[...] = 0.0


def schema_one_type():
    return LabelSchema.create(["PER"], ["Attack"], ["Attacker"])
