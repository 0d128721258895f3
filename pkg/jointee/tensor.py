"""
Minimal dense tensor engine with reverse-mode differentiation.

Tensors wrap float64 numpy arrays (vectors and matrices only). Operations
are recorded on the active Tape when one is open and at least one input
takes part in differentiation; outside a tape nothing is recorded, which is
how inference runs.

    with Tape():
        loss = model.joint_loss(sentence, gold)
        backward(loss)

The tape replays in exact reverse order of recording, so gradients are
deterministic for a fixed forward order. A tape belongs to the thread that
opened it.
"""
from __future__ import annotations

import threading
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from jointee.errors import ContractError, DimensionError

DTYPE = np.float64

_local = threading.local()


class Tensor:
    """Dense real array with an optional gradient buffer."""

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.asarray(values, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.name = name
        self._grad: Optional[np.ndarray] = None
        # tape that produced this tensor (None for leaves and constants)
        self.tape_node: Optional["Tape"] = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape}>"

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def grad(self) -> np.ndarray:
        """Gradient buffer; zeros when nothing has flowed into this tensor."""
        if self._grad is None:
            return np.zeros_like(self.values)
        return self._grad

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self._grad is None:
            self._grad = np.array(g, dtype=DTYPE, copy=True)
        else:
            self._grad += g

    def zero_grad(self) -> None:
        self._grad = None

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.values.reshape(()))

    @classmethod
    def constant(cls, values) -> "Tensor":
        return cls(values, requires_grad=False)

    @classmethod
    def zeros(cls, shape, requires_grad: bool = False, name: Optional[str] = None) -> "Tensor":
        return cls(np.zeros(shape, dtype=DTYPE), requires_grad=requires_grad, name=name)


class _Node:
    __slots__ = ("output", "inputs", "backward_fn")

    def __init__(self, output: Tensor, inputs: Sequence[Tensor], backward_fn: Callable[[np.ndarray], None]):
        self.output = output
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive operations for one forward pass."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self._previous: Optional[Tape] = None

    def __enter__(self) -> "Tape":
        self._previous = getattr(_local, "tape", None)
        _local.tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _local.tape = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward_fn: Callable[[np.ndarray], None]) -> None:
        output.requires_grad = True
        output.tape_node = self
        self.nodes.append(_Node(output, inputs, backward_fn))

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if loss.tape_node is not self:
            raise ContractError("loss was not recorded on this tape")
        loss.accumulate_grad(np.ones_like(loss.values))
        for node in reversed(self.nodes):
            g = node.output._grad
            if g is None:
                continue
            node.backward_fn(g)
        # intermediate buffers are dropped; leaves keep their gradients
        for node in self.nodes:
            node.output._grad = None
        self.nodes = []


def active_tape() -> Optional[Tape]:
    return getattr(_local, "tape", None)


def backward(loss: Tensor) -> None:
    """Populate gradients of every tensor reachable from a scalar loss."""
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if loss.tape_node is None:
        raise ContractError("loss is not connected to a tape")
    loss.tape_node.backward(loss)


def _recording(*inputs: Tensor) -> Optional[Tape]:
    tape = active_tape()
    if tape is None:
        return None
    if any(t.requires_grad for t in inputs):
        return tape
    return None


def _push(g: np.ndarray, t: Tensor) -> None:
    if t.requires_grad:
        t.accumulate_grad(g)


def _check_vector(op: str, x: Tensor) -> None:
    if x.values.ndim != 1:
        raise DimensionError(op, x.shape, ("vector",))


# --------------------------------------------------
# Primitives
# --------------------------------------------------

def affine(x: Tensor, W: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """W.x + b for a vector x and matrix W (bias optional)."""
    if W.values.ndim != 2 or x.values.ndim != 1 or W.shape[1] != x.shape[0]:
        raise DimensionError("affine", W.shape, x.shape)
    if b is not None and b.shape != (W.shape[0],):
        raise DimensionError("affine bias", W.shape, b.shape)
    out_values = W.values @ x.values
    if b is not None:
        out_values = out_values + b.values
    out = Tensor(out_values)
    inputs = (x, W) if b is None else (x, W, b)
    tape = _recording(*inputs)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            if W.requires_grad:
                W.accumulate_grad(np.outer(g, x.values))
            if x.requires_grad:
                x.accumulate_grad(W.values.T @ g)
            if b is not None:
                _push(g, b)
        tape.record(out, inputs, _bw)
    return out


def _sigmoid(v: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def elementwise(x: Tensor, kind: str) -> Tensor:
    """Pointwise sigmoid, tanh or relu."""
    if kind == "sigmoid":
        y = _sigmoid(x.values)
        local = lambda: y * (1.0 - y)  # noqa: E731
    elif kind == "tanh":
        y = np.tanh(x.values)
        local = lambda: 1.0 - y * y  # noqa: E731
    elif kind == "relu":
        y = np.maximum(x.values, 0.0)
        local = lambda: (x.values > 0).astype(DTYPE)  # noqa: E731
    else:
        raise ContractError(f"unknown elementwise kind: {kind}")
    out = Tensor(y)
    tape = _recording(x)
    if tape is not None:
        tape.record(out, (x,), lambda g: _push(g * local(), x))
    return out


def sigmoid(x: Tensor) -> Tensor:
    return elementwise(x, "sigmoid")


def tanh(x: Tensor) -> Tensor:
    return elementwise(x, "tanh")


def _binary(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(op, a.shape, b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _binary("add", a, b)
    out = Tensor(a.values + b.values)
    tape = _recording(a, b)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            _push(g, a)
            _push(g, b)
        tape.record(out, (a, b), _bw)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _binary("sub", a, b)
    out = Tensor(a.values - b.values)
    tape = _recording(a, b)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            _push(g, a)
            _push(-g, b)
        tape.record(out, (a, b), _bw)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    _binary("mul", a, b)
    out = Tensor(a.values * b.values)
    tape = _recording(a, b)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            _push(g * b.values, a)
            _push(g * a.values, b)
        tape.record(out, (a, b), _bw)
    return out


def scale(x: Tensor, factor) -> Tensor:
    """Multiply by a constant scalar or same-shape constant array (not differentiated)."""
    factor = np.asarray(factor, dtype=DTYPE)
    if factor.ndim and factor.shape != x.shape:
        raise DimensionError("scale", x.shape, factor.shape)
    out = Tensor(x.values * factor)
    tape = _recording(x)
    if tape is not None:
        tape.record(out, (x,), lambda g: _push(g * factor, x))
    return out


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """
    Inverted dropout: kept activations are divided by the keep probability.
    The mask is sampled from rng outside the tape; rate 0 or rng None is identity.
    """
    if rate <= 0.0 or rng is None:
        return x
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(DTYPE) / keep
    return scale(x, mask)


def softmax(logits: Tensor) -> Tensor:
    _check_vector("softmax", logits)
    if logits.size < 1:
        raise ContractError("softmax over an empty vector")
    z = logits.values - np.max(logits.values)
    e = np.exp(z)
    y = e / np.sum(e)
    out = Tensor(y)
    tape = _recording(logits)
    if tape is not None:
        tape.record(out, (logits,), lambda g: _push(y * (g - np.dot(g, y)), logits))
    return out


def log_softmax(logits: Tensor) -> Tensor:
    _check_vector("log_softmax", logits)
    z = logits.values - np.max(logits.values)
    lse = np.log(np.sum(np.exp(z)))
    y = z - lse
    out = Tensor(y)
    tape = _recording(logits)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            _push(g - np.exp(y) * np.sum(g), logits)
        tape.record(out, (logits,), _bw)
    return out


def pick(x: Tensor, index: int) -> Tensor:
    """Select one coordinate of a vector as a scalar tensor."""
    _check_vector("pick", x)
    out = Tensor(x.values[index])
    tape = _recording(x)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            full = np.zeros_like(x.values)
            full[index] = g
            _push(full, x)
        tape.record(out, (x,), _bw)
    return out


def concat(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate vectors; the gradient is split back to the parts."""
    for p in parts:
        _check_vector("concat", p)
    if not parts:
        return Tensor(np.zeros(0))
    out = Tensor(np.concatenate([p.values for p in parts]))
    tape = _recording(*parts)
    if tape is not None:
        bounds = np.cumsum([0] + [p.size for p in parts])

        def _bw(g: np.ndarray) -> None:
            for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
                _push(g[lo:hi], p)
        tape.record(out, tuple(parts), _bw)
    return out


def total(x: Tensor) -> Tensor:
    """Sum of all entries as a scalar."""
    out = Tensor(np.sum(x.values))
    tape = _recording(x)
    if tape is not None:
        tape.record(out, (x,), lambda g: _push(np.full_like(x.values, g), x))
    return out


def add_n(scalars: Iterable[Tensor]) -> Tensor:
    """Sum a sequence of scalar tensors in order (zero when empty)."""
    items = list(scalars)
    if not items:
        return Tensor(np.zeros(()))
    for s in items:
        if s.size != 1:
            raise DimensionError("add_n", s.shape, ())
    acc = 0.0
    for s in items:
        acc = acc + s.values.reshape(())
    out = Tensor(acc)
    tape = _recording(*items)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            for s in items:
                _push(np.broadcast_to(g, s.shape).copy(), s)
        tape.record(out, tuple(items), _bw)
    return out


def lookup(table: Tensor, index: int) -> Tensor:
    """Row gather from an embedding matrix; the gradient lands on that row only."""
    if table.values.ndim != 2:
        raise DimensionError("lookup", table.shape, ("matrix",))
    out = Tensor(table.values[index].copy())
    tape = _recording(table)
    if tape is not None:
        def _bw(g: np.ndarray) -> None:
            if table._grad is None:
                table._grad = np.zeros_like(table.values)
            table._grad[index] += g
        tape.record(out, (table,), _bw)
    return out
