"""
Mini-batch training of the joint model with Adadelta and Frobenius-norm
rescaling.

Per batch: gradients of C* are accumulated sentence by sentence in batch
order, divided by the batch size, applied with one Adadelta step, then
every 2-D weight matrix except the embedding table is projected back onto
the Frobenius ball of radius frobenius_cap.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from jointee.config import ExperimentConfig, TrainConfig
from jointee.corpus import gold_labels
from jointee.errors import ContractError
from jointee.evaluation import EvalReport, predict_corpus, score
from jointee.layers import ParameterStore
from jointee.models import Sentence
from jointee.network import EMBEDDING_PARAM, JointModel
from jointee.tensor import Tape

logger = logging.getLogger(__name__)

DevScorer = Callable[[JointModel, Sequence[Sentence]], tuple[float, Optional[EvalReport]]]


# ==================================================
# OPTIMIZER
# ==================================================

def adadelta_update(
    param: np.ndarray,
    grad: np.ndarray,
    eg: np.ndarray,
    ex: np.ndarray,
    rho: float = 0.95,
    epsilon: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One Adadelta step. Returns (new param, new E[g^2], new E[dx^2])."""
    eg = rho * eg + (1.0 - rho) * grad * grad
    delta = -(np.sqrt(ex + epsilon) / np.sqrt(eg + epsilon)) * grad
    ex = rho * ex + (1.0 - rho) * delta * delta
    return param + delta, eg, ex


@dataclass
class AdadeltaState:
    """Running averages of squared gradients and squared updates per parameter."""
    eg: dict[str, np.ndarray] = field(default_factory=dict)
    ex: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_store(cls, store: ParameterStore) -> "AdadeltaState":
        return cls(
            eg={name: np.zeros_like(p.values) for name, p in store.items()},
            ex={name: np.zeros_like(p.values) for name, p in store.items()},
        )

    def step(self, store: ParameterStore, rho: float, epsilon: float, divisor: float = 1.0) -> None:
        for name, p in store.items():
            new, self.eg[name], self.ex[name] = adadelta_update(
                p.values, p.grad / divisor, self.eg[name], self.ex[name], rho, epsilon
            )
            p.values[...] = new


def rescale_frobenius(W: np.ndarray, cap: float) -> np.ndarray:
    """W scaled onto the norm ball when ||W||_F > cap, else W unchanged."""
    if cap <= 0:
        raise ContractError(f"frobenius cap must be positive, got {cap}")
    norm = float(np.linalg.norm(W))
    if norm > cap:
        return W * (cap / norm)
    return W


def constrained_matrices(store: ParameterStore) -> list[str]:
    return [name for name, p in store.items() if p.values.ndim == 2 and name != EMBEDDING_PARAM]


def apply_frobenius(store: ParameterStore, cap: float) -> None:
    for name in constrained_matrices(store):
        p = store[name]
        p.values[...] = rescale_frobenius(p.values, cap)


# ==================================================
# TRAINER
# ==================================================

@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    dev_score: Optional[float] = None
    dev_report: Optional[EvalReport] = None


@dataclass
class TrainResult:
    model: JointModel
    epochs: list[EpochRecord]
    best_epoch: int
    best_score: Optional[float] = None

    @property
    def losses(self) -> list[float]:
        return [e.mean_loss for e in self.epochs]


def joint_dev_scorer(workers: int = 1) -> DevScorer:
    """Entity F1 + trigger classification F1 + role classification F1."""
    def _score(model: JointModel, dev: Sequence[Sentence]) -> tuple[float, Optional[EvalReport]]:
        report = score(predict_corpus(model, dev, workers), dev)
        return report.selection_score, report
    return _score


class Trainer:
    def __init__(self, model: JointModel, config: TrainConfig):
        self.model = model
        self.config = config
        self.state = AdadeltaState.for_store(model.store)
        seeds = np.random.SeedSequence(config.seed).spawn(2)
        self.shuffle_rng = np.random.default_rng(seeds[0])
        self.noise_rng = np.random.default_rng(seeds[1])  # dropout masks, UNK replacement

    def train_batch(self, batch: Sequence[tuple[Sentence, object]]) -> float:
        store = self.model.store
        store.zero_grad()
        batch_loss = 0.0
        for sentence, gold in batch:
            with Tape() as tape:
                terms = self.model.joint_loss(sentence, gold, self.config, self.noise_rng)
                if terms.total.tape_node is tape:
                    tape.backward(terms.total)
            batch_loss += terms.total.item()
        self.state.step(store, self.config.rho, self.config.epsilon, divisor=float(len(batch)))
        apply_frobenius(store, self.config.frobenius_cap)
        store.zero_grad()
        return batch_loss

    def train_epoch(self, examples: Sequence[tuple[Sentence, object]]) -> float:
        order = self.shuffle_rng.permutation(len(examples))
        size = min(self.config.batch_size, len(examples))
        total = 0.0
        for start in range(0, len(order), size):
            batch = [examples[k] for k in order[start:start + size]]
            total += self.train_batch(batch)
        return total / len(examples)

    def fit(
        self,
        sentences: Sequence[Sentence],
        dev: Optional[Sequence[Sentence]] = None,
        dev_scorer: Optional[DevScorer] = None,
        epochs: Optional[int] = None,
    ) -> TrainResult:
        if not sentences:
            raise ContractError("training corpus is empty")
        epochs = epochs or self.config.epochs
        examples = [(s, gold_labels(s, self.model.schema)) for s in sentences]
        dev_scorer = dev_scorer or joint_dev_scorer()
        records: list[EpochRecord] = []
        best_score: Optional[float] = None
        best_epoch = epochs
        best_state = None
        stale = 0

        for epoch in range(1, epochs + 1):
            mean_loss = self.train_epoch(examples)
            record = EpochRecord(epoch=epoch, mean_loss=mean_loss)
            if dev:
                record.dev_score, record.dev_report = dev_scorer(self.model, dev)
                line = f"Epoch {epoch}/{epochs}: mean C* {mean_loss:.4f}, dev score {record.dev_score:.4f}"
                if record.dev_report is not None:
                    r = record.dev_report
                    line += (f" (entity F1 {r.entity.f1:.3f}, trigger F1 {r.trigger_classification.f1:.3f}, "
                             f"role F1 {r.role_classification.f1:.3f})")
                logger.info(line)
                if best_score is None or record.dev_score > best_score:
                    best_score, best_epoch = record.dev_score, epoch
                    best_state = self.model.store.state()
                    stale = 0
                else:
                    stale += 1
            else:
                logger.info(f"Epoch {epoch}/{epochs}: mean C* {mean_loss:.4f}")
            records.append(record)
            if self.config.patience is not None and dev and stale >= self.config.patience:
                logger.info(f"No dev improvement for {stale} epochs; stopping at epoch {epoch}")
                break

        if best_state is not None:
            self.model.store.load_state(best_state)
            logger.info(f"Restored parameters from epoch {best_epoch} (dev score {best_score:.4f})")
        else:
            best_epoch = records[-1].epoch
        return TrainResult(model=self.model, epochs=records, best_epoch=best_epoch, best_score=best_score)


def model_rng(seed: int) -> np.random.Generator:
    """Parameter initialisation stream, independent of the trainer's streams."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])


def train(
    sentences: Sequence[Sentence],
    config: ExperimentConfig,
    dev: Optional[Sequence[Sentence]] = None,
    pretrained: Optional[str | Path] = None,
    model: Optional[JointModel] = None,
    dev_scorer: Optional[DevScorer] = None,
) -> TrainResult:
    """Build (unless given) and train a joint model; deterministic under config.train.seed."""
    if not sentences:
        raise ContractError("training corpus is empty")
    if model is None:
        model = JointModel.build(sentences, config.model, model_rng(config.train.seed), pretrained=pretrained)
    model.check_schema(sentences)
    if dev:
        model.check_schema(dev)
    logger.info(
        f"Training on {len(sentences)} sentences for {config.train.epochs} epochs "
        f"(batch {config.train.batch_size}, seed {config.train.seed})"
    )
    return Trainer(model, config.train).fit(sentences, dev, dev_scorer)
