import numpy as np
import pytest
from numpy.testing import assert_allclose

from jointee.config import TrainConfig
from jointee.encoder import GruParams, encode_bidirectional, gru_cell
from jointee.errors import ContractError, DimensionError
from jointee.layers import ParameterStore
from jointee.tensor import Tape, Tensor


def random_params(input_dim=3, hidden_dim=4, seed=0, prefix="gru"):
    return GruParams.create(ParameterStore(), prefix, input_dim, hidden_dim, np.random.default_rng(seed), 0.5)


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


class TestGruCell:
    def test_zero_params_halve_the_state(self):
        h = gru_cell(Tensor([1.0, 2.0, 3.0]), Tensor([1.0, -2.0]), GruParams.zeros(3, 2))
        assert_allclose(h.values, [0.5, -1.0])

    def test_zero_everything_stays_zero(self):
        h = gru_cell(Tensor(np.zeros(3)), Tensor(np.zeros(2)), GruParams.zeros(3, 2))
        assert_allclose(h.values, [0.0, 0.0])

    def test_matches_gate_formulas(self, rng):
        p = random_params()
        for b in (p.b_z, p.b_r, p.b_h):
            b.values[...] = rng.normal(size=b.shape)
        x = rng.normal(size=3)
        h_prev = rng.normal(size=4)
        v = lambda t: t.values  # noqa: E731
        z = sigmoid(v(p.W_z) @ x + v(p.U_z) @ h_prev + v(p.b_z))
        r = sigmoid(v(p.W_r) @ x + v(p.U_r) @ h_prev + v(p.b_r))
        h_tilde = np.tanh(v(p.W_h) @ x + v(p.U_h) @ (r * h_prev) + v(p.b_h))
        expected = (1 - z) * h_prev + z * h_tilde
        assert_allclose(gru_cell(Tensor(x), Tensor(h_prev), p).values, expected, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            gru_cell(Tensor(np.zeros(5)), Tensor(np.zeros(2)), GruParams.zeros(3, 2))


class TestBidirectional:
    def test_single_token(self, rng):
        fw, bw = random_params(seed=1), random_params(seed=2)
        x = Tensor(rng.normal(size=3))
        zero = Tensor(np.zeros(4))
        (h,) = encode_bidirectional([x], fw, bw)
        expected = np.concatenate([gru_cell(x, zero, fw).values, gru_cell(x, zero, bw).values])
        assert_allclose(h.values, expected)

    def test_reversal_with_tied_directions(self, rng):
        p = random_params(seed=3)
        xs = [Tensor(rng.normal(size=3)) for _ in range(5)]
        H = encode_bidirectional(xs, p, p)
        H_rev = encode_bidirectional(list(reversed(xs)), p, p)
        forward_half = np.array([h.values[:4] for h in H])
        backward_half_rev = np.array([h.values[4:] for h in H_rev])[::-1]
        assert_allclose(forward_half, backward_half_rev, atol=1e-12)

    def test_zero_params_give_zero_states(self, rng):
        xs = [Tensor(rng.normal(size=3)) for _ in range(4)]
        for h in encode_bidirectional(xs, GruParams.zeros(3, 2), GruParams.zeros(3, 2)):
            assert_allclose(h.values, np.zeros(4))

    def test_every_state_sees_every_token(self, rng):
        fw, bw = random_params(seed=4), random_params(seed=5)
        xs = [Tensor(rng.normal(size=3)) for _ in range(5)]
        base = [h.values for h in encode_bidirectional(xs, fw, bw)]
        for j in range(5):
            moved = list(xs)
            moved[j] = Tensor(xs[j].values + 0.5)
            after = [h.values for h in encode_bidirectional(moved, fw, bw)]
            for i in range(5):
                if i != j:
                    assert not np.allclose(base[i], after[i], atol=1e-12)

    def test_empty_sentence(self):
        with pytest.raises(ContractError):
            encode_bidirectional([], GruParams.zeros(3, 2), GruParams.zeros(3, 2))


class TestSharedRepresentation:
    def test_argument_loss_alone_reaches_the_encoder(self, running, running_model):
        train = TrainConfig(alpha=0.0, beta=0.0, gamma=1.0, dropout=0.0, unk_replace_prob=0.0)
        running_model.store.zero_grad()
        with Tape() as tape:
            terms = running_model.joint_loss(running, None, train)
            tape.backward(terms.total)
        for name in ("encoder.fw.W_z", "encoder.bw.U_h", "embeddings", "arp.W1"):
            assert np.any(running_model.store[name].grad != 0.0), name
        assert not np.any(running_model.store["emd.W1"].grad)
        assert not np.any(running_model.store["ed.W1"].grad)
