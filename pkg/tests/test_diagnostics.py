import numpy as np
import pytest

from jointee.corpus import validate_sentence
from jointee.diagnostics import (
    GRADCHECK_TOLERANCE,
    gradcheck_sentence,
    random_instance,
    run_gradcheck,
    run_viterbi_oracle,
)
from jointee.errors import ConfigError


class TestGradcheck:
    def test_every_parameter_passes(self):
        result = run_gradcheck(seed=13)
        assert result.passed, result.failures
        assert result.max_error < GRADCHECK_TOLERANCE
        assert "embeddings" in result.errors
        assert "arp.W1" in result.errors

    def test_corrupted_gradient_is_caught(self):
        result = run_gradcheck(seed=13, corrupt_param="ed.W2", max_coords=5)
        assert not result.passed
        assert result.failures == ["ed.W2"]

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            run_gradcheck(corrupt_param="no.such.param")

    def test_sentence_is_valid(self):
        assert validate_sentence(gradcheck_sentence()) == (True, None)


class TestViterbiOracle:
    def test_passes(self):
        result = run_viterbi_oracle(seed=5, exact_trials=50, validity_trials=500)
        assert result.passed, result.failures[:3]
        assert result.exact_matches == 50

    def test_random_instances_are_normalized(self, rng):
        for _ in range(10):
            scores, transitions = random_instance(rng)
            assert scores.shape[1] == transitions.size
            np.testing.assert_allclose(np.exp(scores).sum(axis=1), 1.0)


@pytest.mark.slow
def test_full_oracle_run():
    assert run_viterbi_oracle(seed=13).passed
