"""
Bidirectional GRU sentence encoder.

Gate convention (fixed and tested):
    z  = sigmoid(W_z x + U_z h + b_z)
    r  = sigmoid(W_r x + U_r h + b_r)
    h~ = tanh(W_h x + U_h (r * h) + b_h)
    h' = (1 - z) * h + z * h~

Both directions start from a zero state; h_i = [forward_i ; backward_i].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from jointee.errors import ContractError, DimensionError
from jointee.layers import ParameterStore, uniform
from jointee.tensor import Tensor, add, affine, concat, mul, sigmoid, sub, tanh


@dataclass
class GruParams:
    W_z: Tensor
    U_z: Tensor
    b_z: Tensor
    W_r: Tensor
    U_r: Tensor
    b_r: Tensor
    W_h: Tensor
    U_h: Tensor
    b_h: Tensor

    @property
    def hidden_dim(self) -> int:
        return int(self.U_z.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.W_z.shape[1])

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, input_dim: int, hidden_dim: int,
               rng: np.random.Generator, init_range: float) -> "GruParams":
        values = {}
        for gate in ("z", "r", "h"):
            values[f"W_{gate}"] = store.add(f"{prefix}.W_{gate}", uniform(rng, (hidden_dim, input_dim), init_range))
            values[f"U_{gate}"] = store.add(f"{prefix}.U_{gate}", uniform(rng, (hidden_dim, hidden_dim), init_range))
            values[f"b_{gate}"] = store.add(f"{prefix}.b_{gate}", np.zeros(hidden_dim))
        return cls(**values)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruParams":
        """All-zero parameters (not registered anywhere); used by tests and checks."""
        def z(*shape):
            return Tensor(np.zeros(shape), requires_grad=True)
        return cls(z(hidden_dim, input_dim), z(hidden_dim, hidden_dim), z(hidden_dim),
                   z(hidden_dim, input_dim), z(hidden_dim, hidden_dim), z(hidden_dim),
                   z(hidden_dim, input_dim), z(hidden_dim, hidden_dim), z(hidden_dim))


def gru_cell(x: Tensor, h_prev: Tensor, params: GruParams) -> Tensor:
    if x.shape != (params.input_dim,):
        raise DimensionError("gru_cell input", x.shape, (params.input_dim,))
    if h_prev.shape != (params.hidden_dim,):
        raise DimensionError("gru_cell state", h_prev.shape, (params.hidden_dim,))
    z = sigmoid(add(affine(x, params.W_z, params.b_z), affine(h_prev, params.U_z)))
    r = sigmoid(add(affine(x, params.W_r, params.b_r), affine(h_prev, params.U_r)))
    h_tilde = tanh(add(affine(x, params.W_h, params.b_h), affine(mul(r, h_prev), params.U_h)))
    # (1 - z) * h + z * h~  ==  h + z * (h~ - h)
    return add(h_prev, mul(z, sub(h_tilde, h_prev)))


def run_direction(xs: Sequence[Tensor], params: GruParams, reverse: bool = False) -> list[Tensor]:
    """States aligned with xs; a reverse pass reads right to left."""
    h = Tensor.constant(np.zeros(params.hidden_dim))
    states: list[Optional[Tensor]] = [None] * len(xs)
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    for k in order:
        h = gru_cell(xs[k], h, params)
        states[k] = h
    return states  # type: ignore[return-value]


def encode_bidirectional(xs: Sequence[Tensor], forward: GruParams, backward: GruParams) -> list[Tensor]:
    """H = h_1..h_n with h_i = [forward state at i ; backward state at i]."""
    if len(xs) < 1:
        raise ContractError("encode_bidirectional needs at least one token")
    fw = run_direction(xs, forward)
    bw = run_direction(xs, backward, reverse=True)
    return [concat([f, b]) for f, b in zip(fw, bw)]
