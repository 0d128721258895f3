"""
Entity mention detection: FF^EMD over R_i = [h_i, D_i] gives per-token BIO
distributions, and a Viterbi pass under a fixed transition matrix picks
the best valid tag sequence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from jointee.corpus import decode_bio
from jointee.errors import ContractError, DimensionError
from jointee.models import OUTSIDE, EntityMention
from jointee.tensor import Tensor, concat

FORBIDDEN = -1e9


# ==================================================
# TRANSITIONS
# ==================================================

def transition_allowed(prev: str | None, cur: str) -> bool:
    """prev None is the sentence start. I-X only follows B-X or I-X."""
    if not cur.startswith("I-"):
        return True
    if prev is None or prev == OUTSIDE:
        return False
    return prev[2:] == cur[2:]


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """
    matrix[p, c] scores tag p followed by tag c; start[c] scores c at
    position 0. Entries are 0 or FORBIDDEN.
    """
    tags: tuple[str, ...]
    start: np.ndarray
    matrix: np.ndarray

    @classmethod
    def for_tags(cls, tags: Sequence[str]) -> "TransitionMatrix":
        k = len(tags)
        start = np.array([0.0 if transition_allowed(None, c) else FORBIDDEN for c in tags])
        matrix = np.zeros((k, k))
        for p, prev in enumerate(tags):
            for c, cur in enumerate(tags):
                if not transition_allowed(prev, cur):
                    matrix[p, c] = FORBIDDEN
        return cls(tuple(tags), start, matrix)

    @property
    def size(self) -> int:
        return len(self.tags)

    def is_valid(self, path: Sequence[int]) -> bool:
        if not len(path):
            return True
        if self.start[path[0]] == FORBIDDEN:
            return False
        return all(self.matrix[p, c] != FORBIDDEN for p, c in zip(path, path[1:]))

    def sequence_score(self, log_probs: np.ndarray, path: Sequence[int]) -> float:
        # same summation order as viterbi_decode, so equal paths give equal floats
        score = self.start[path[0]] + log_probs[0, path[0]]
        for k in range(1, len(path)):
            score = (score + self.matrix[path[k - 1], path[k]]) + log_probs[k, path[k]]
        return float(score)


# ==================================================
# SCORING / DECODING
# ==================================================

def emd_features(H: Sequence[Tensor], D: Sequence[Tensor], i: int) -> Tensor:
    return concat([H[i], D[i]])


def emd_scores(head, H: Sequence[Tensor], D: Sequence[Tensor], i: int) -> Tensor:
    """Distribution over BIO tags for token i."""
    return head.distribution(emd_features(H, D, i))


def _check_emissions(log_probs: np.ndarray, transitions: TransitionMatrix) -> None:
    if log_probs.ndim != 2 or log_probs.shape[0] < 1:
        raise ContractError(f"viterbi needs an (n >= 1, tags) score matrix, got {log_probs.shape}")
    if log_probs.shape[1] != transitions.size:
        raise DimensionError("viterbi", log_probs.shape, transitions.matrix.shape)
    if not np.all(np.isfinite(log_probs)):
        raise ContractError("viterbi emission scores must be finite")


def viterbi_decode(log_probs: np.ndarray, transitions: TransitionMatrix) -> tuple[list[int], float]:
    """
    Best path under sum of emissions and transitions.
    Ties go to the lowest tag index. Returns (tag indices, path score).
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    _check_emissions(log_probs, transitions)
    n, k = log_probs.shape
    delta = transitions.start + log_probs[0]
    back = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + transitions.matrix  # [prev, cur]
        best_prev = np.argmax(cand, axis=0)
        delta = cand[best_prev, np.arange(k)] + log_probs[t]
        back[t] = best_prev
    last = int(np.argmax(delta))
    path = [last]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(delta[last])


def brute_force_decode(log_probs: np.ndarray, transitions: TransitionMatrix) -> tuple[list[int], float]:
    """Exhaustive search over all tags^n paths; only for small n."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    _check_emissions(log_probs, transitions)
    n, k = log_probs.shape
    paths = np.indices((k,) * n).reshape(n, -1).T
    scores = transitions.start[paths[:, 0]] + log_probs[0, paths[:, 0]]
    for t in range(1, n):
        scores = (scores + transitions.matrix[paths[:, t - 1], paths[:, t]]) + log_probs[t, paths[:, t]]
    best = int(np.argmax(scores))
    return [int(x) for x in paths[best]], float(scores[best])


def decode_tags(log_probs: np.ndarray, transitions: TransitionMatrix) -> tuple[str, ...]:
    path, _ = viterbi_decode(log_probs, transitions)
    return tuple(transitions.tags[p] for p in path)


def tags_to_mentions(tags: Sequence[str]) -> list[EntityMention]:
    return decode_bio(tags)
