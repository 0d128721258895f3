"""
Self-checks run by `jointee diag`: the end-to-end finite-difference check of
C* and the brute-force Viterbi oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from jointee.config import ModelConfig, TrainConfig
from jointee.corpus import gold_labels
from jointee.entity_detector import TransitionMatrix, brute_force_decode, viterbi_decode
from jointee.errors import ConfigError
from jointee.models import Argument, Dependency, EntityMention, Event, LabelSchema, Sentence
from jointee.network import JointModel
from jointee.gradcheck import gradient_report
from jointee.training import model_rng

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4


# ==================================================
# GRADIENT CHECK
# ==================================================

def gradcheck_sentence() -> Sentence:
    """Three tokens, two mentions, one event with two arguments, full annotations."""
    return Sentence(
        tokens=("rebels", "attacked", "baghdad"),
        entities=(EntityMention(start=0, end=0, type="PER"), EntityMention(start=2, end=2, type="LOC")),
        events=(Event(trigger=1, type="Attack",
                      args=(Argument(entity=0, role="Attacker"), Argument(entity=1, role="Target"))),),
        pos=("NNS", "VBD", "NNP"),
        chunk=("B-NP", "B-VP", "B-NP"),
        deps=(Dependency(head=1, rel="nsubj"), Dependency(head=-1, rel="root"), Dependency(head=1, rel="dobj")),
    )


@dataclass
class GradcheckResult:
    errors: dict[str, float]
    tolerance: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)


def run_gradcheck(
    seed: int = 13,
    corrupt_param: Optional[str] = None,
    tolerance: float = GRADCHECK_TOLERANCE,
    max_coords: Optional[int] = 20,
    model_config: Optional[ModelConfig] = None,
) -> GradcheckResult:
    """
    Compare analytic and central-difference gradients of C* for every
    parameter at reduced dimensions with dropout off. corrupt_param adds a
    bias to that parameter's analytic gradient (negative control).
    """
    sentence = gradcheck_sentence()
    config = model_config or ModelConfig.reduced()
    model = JointModel.build([sentence], config, model_rng(seed))
    gold = gold_labels(sentence, model.schema)
    train = TrainConfig(dropout=0.0, unk_replace_prob=0.0, alpha=0.5, beta=1.0, gamma=0.5)

    if corrupt_param is not None and corrupt_param not in model.store:
        raise ConfigError(f"unknown parameter: {corrupt_param}")

    def hook(name: str, grad: np.ndarray) -> np.ndarray:
        if name == corrupt_param:
            return grad + 0.5
        return grad

    errors = gradient_report(
        lambda: model.joint_loss(sentence, gold, train).total,
        dict(model.store.items()),
        max_coords=max_coords,
        rng=np.random.default_rng(seed),
        analytic_hook=hook if corrupt_param is not None else None,
    )
    failures = [name for name, err in errors.items() if err >= tolerance]
    for name in failures:
        logger.error(f"Gradient check failed for {name}: relative error {errors[name]:.3e}")
    logger.info(f"Gradient check over {len(errors)} parameters: max relative error "
                f"{max(errors.values(), default=0.0):.3e}")
    return GradcheckResult(errors=errors, tolerance=tolerance, failures=failures)


# ==================================================
# VITERBI ORACLE
# ==================================================

def random_instance(rng: np.random.Generator, max_len: int = 6, max_entity_types: int = 3,
                    normalized: bool = True) -> tuple[np.ndarray, TransitionMatrix]:
    """Random emissions over a BIO tag set of up to 2 * max_entity_types + 1 tags."""
    n = int(rng.integers(1, max_len + 1))
    types = [f"T{k}" for k in range(int(rng.integers(1, max_entity_types + 1)))]
    tags = LabelSchema.create(types, [], []).bio_tags
    scores = rng.normal(0.0, 3.0, size=(n, len(tags)))
    if normalized:
        scores = scores - np.log(np.sum(np.exp(scores), axis=1, keepdims=True))
    return scores, TransitionMatrix.for_tags(tags)


@dataclass
class ViterbiOracleResult:
    exact_trials: int
    exact_matches: int
    validity_trials: int
    invalid_sequences: int
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.exact_matches == self.exact_trials and self.invalid_sequences == 0


def run_viterbi_oracle(seed: int = 13, exact_trials: int = 100, validity_trials: int = 10_000) -> ViterbiOracleResult:
    rng = np.random.default_rng(seed)
    matches = 0
    failures: list[str] = []
    for trial in range(exact_trials):
        scores, transitions = random_instance(rng)
        _, best = viterbi_decode(scores, transitions)
        _, oracle = brute_force_decode(scores, transitions)
        if best == oracle:
            matches += 1
        else:
            failures.append(f"trial {trial}: viterbi {best!r} vs exhaustive {oracle!r}")
            logger.error(failures[-1])

    invalid = 0
    for trial in range(validity_trials):
        scores, transitions = random_instance(rng, normalized=False)
        path, _ = viterbi_decode(scores, transitions)
        if not transitions.is_valid(path):
            invalid += 1
            failures.append(f"validity trial {trial}: forbidden transition in {path}")
            logger.error(failures[-1])
    logger.info(f"Viterbi oracle: {matches}/{exact_trials} exact, {invalid} invalid of {validity_trials}")
    return ViterbiOracleResult(exact_trials, matches, validity_trials, invalid, failures)
