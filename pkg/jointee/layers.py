"""
Parameter registry and the one-hidden-layer feed-forward head shared by the
three task classifiers.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Iterator, Optional

import numpy as np

from jointee.tensor import Tensor, affine, dropout, log_softmax, softmax, tanh


class ParameterStore:
    """Ordered name -> Tensor map of every trainable array."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name: {name}")
        t = Tensor(values, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def register(self, tensor: Tensor) -> Tensor:
        if tensor.name is None or tensor.name in self._params:
            raise KeyError(f"cannot register parameter {tensor.name!r}")
        self._params[tensor.name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def count(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def state(self) -> dict[str, np.ndarray]:
        return {name: p.values.copy() for name, p in self._params.items()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name, p in self._params.items():
            if arrays[name].shape != p.shape:
                raise ValueError(f"{name}: shape {arrays[name].shape} != {p.shape}")
            p.values[...] = arrays[name]


def uniform(rng: np.random.Generator, shape: tuple, scale: float) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


class FeedForward:
    """tanh hidden layer, then logits; softmax gives the label distribution."""

    def __init__(self, store: ParameterStore, prefix: str, in_dim: int, hidden_dim: int,
                 out_dim: int, rng: np.random.Generator, init_range: float):
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.out_dim = out_dim
        self.W1 = store.add(f"{prefix}.W1", uniform(rng, (hidden_dim, in_dim), init_range))
        self.b1 = store.add(f"{prefix}.b1", np.zeros(hidden_dim))
        self.W2 = store.add(f"{prefix}.W2", uniform(rng, (out_dim, hidden_dim), init_range))
        self.b2 = store.add(f"{prefix}.b2", np.zeros(out_dim))

    def logits(self, x: Tensor, dropout_rate: float = 0.0, rng: Optional[np.random.Generator] = None) -> Tensor:
        hidden = tanh(affine(x, self.W1, self.b1))
        hidden = dropout(hidden, dropout_rate, rng)
        return affine(hidden, self.W2, self.b2)

    def distribution(self, x: Tensor) -> Tensor:
        return softmax(self.logits(x))

    def log_distribution(self, x: Tensor, dropout_rate: float = 0.0,
                         rng: Optional[np.random.Generator] = None) -> Tensor:
        return log_softmax(self.logits(x, dropout_rate, rng))
