"""
Pipelined baseline: an entity model and a separate event model, each with
its own encoder, so nothing is shared between entity detection and event
extraction. Entity tags from the first feed the second at prediction time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from jointee.config import ExperimentConfig
from jointee.corpus import encode_bio
from jointee.errors import ContractError
from jointee.evaluation import ComparisonReport, EvalReport, predict_corpus, score
from jointee.models import Extraction, LabelSchema, Sentence
from jointee.network import JointModel
from jointee.training import TrainResult, model_rng, train

logger = logging.getLogger(__name__)


@dataclass
class PipelinedModel:
    entity_model: JointModel
    event_model: JointModel

    @property
    def schema(self) -> LabelSchema:
        return self.event_model.schema

    def predict(self, sentence: Sentence) -> Extraction:
        tags = self.entity_model.decode_entities(sentence)
        return self.event_model.predict(sentence, entity_tags=tags)


def _entity_dev_scorer(model: JointModel, dev: Sequence[Sentence]):
    preds = [Extraction(s.tokens, tuple(model.predict(s).mentions), ()) for s in dev]
    report = score(preds, dev)
    return report.entity.f1, report


def _event_dev_scorer(model: JointModel, dev: Sequence[Sentence]):
    # gold entity tags, so the score reflects the event heads alone
    preds = [model.predict(s, entity_tags=encode_bio(s)) for s in dev]
    report = score(preds, dev)
    return report.trigger_classification.f1 + report.role_classification.f1, report


def train_pipelined(
    sentences: Sequence[Sentence],
    config: ExperimentConfig,
    dev: Optional[Sequence[Sentence]] = None,
) -> tuple[PipelinedModel, TrainResult, TrainResult]:
    """Train the entity stage (beta = gamma = 0) and the event stage (alpha = 0)."""
    if not sentences:
        raise ContractError("training corpus is empty")
    schema = LabelSchema.from_corpus(sentences)
    t = config.train

    entity_config = config.model_copy(update={"train": t.model_copy(update={"beta": 0.0, "gamma": 0.0})})
    entity_model = JointModel.build(sentences, config.model, model_rng(t.seed), schema=schema)
    logger.info("Training pipelined entity stage")
    entity_result = train(sentences, entity_config, dev, model=entity_model, dev_scorer=_entity_dev_scorer)

    event_config = config.model_copy(update={"train": t.model_copy(update={"alpha": 0.0, "seed": t.seed + 1})})
    event_model = JointModel.build(sentences, config.model, model_rng(t.seed + 1), schema=schema)
    logger.info("Training pipelined event stage")
    event_result = train(sentences, event_config, dev, model=event_model, dev_scorer=_event_dev_scorer)

    return PipelinedModel(entity_model, event_model), entity_result, event_result


def compare_joint_and_pipelined(
    sentences: Sequence[Sentence],
    test: Sequence[Sentence],
    config: ExperimentConfig,
    dev: Optional[Sequence[Sentence]] = None,
    workers: int = 1,
) -> ComparisonReport:
    """Train both systems on the same data and score them on the same test set."""
    joint = train(sentences, config, dev).model
    pipelined, _, _ = train_pipelined(sentences, config, dev)
    joint_report: EvalReport = score(predict_corpus(joint, test, workers), test)
    pipelined_report: EvalReport = score(predict_corpus(pipelined, test, workers), test)
    logger.info(
        f"Role classification F1: joint {joint_report.role_classification.f1:.3f}, "
        f"pipelined {pipelined_report.role_classification.f1:.3f}"
    )
    return ComparisonReport(joint=joint_report, pipelined=pipelined_report)
