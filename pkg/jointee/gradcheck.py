"""
Finite-difference gradient checking.

The scalar function must be deterministic (dropout disabled) and must build
its own forward pass each call; check_gradients opens the tape itself.
"""
from __future__ import annotations

import logging
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from jointee.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

GradHook = Callable[[str, np.ndarray], np.ndarray]


def _named(params: Sequence[Tensor] | Mapping[str, Tensor]) -> list[tuple[str, Tensor]]:
    if isinstance(params, Mapping):
        return list(params.items())
    return [(p.name or f"param{k}", p) for k, p in enumerate(params)]


def _relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def gradient_report(
    f: Callable[[], Tensor],
    params: Sequence[Tensor] | Mapping[str, Tensor],
    h: float = 1e-5,
    max_coords: Optional[int] = 20,
    rng: Optional[np.random.Generator] = None,
    analytic_hook: Optional[GradHook] = None,
) -> dict[str, float]:
    """
    Max relative error per named parameter.

    Up to max_coords coordinates per parameter are sampled (all of them when
    max_coords is None or the parameter is smaller). analytic_hook may
    rewrite a parameter's analytic gradient before comparison.
    """
    named = _named(params)
    if not named:
        return {}
    rng = rng if rng is not None else np.random.default_rng(0)

    for _, p in named:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
        tape.backward(loss)
    analytic = {name: p.grad.copy() for name, p in named}
    if analytic_hook is not None:
        analytic = {name: analytic_hook(name, g) for name, g in analytic.items()}

    report: dict[str, float] = {}
    for name, p in named:
        flat = p.values.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        worst = 0.0
        g_flat = analytic[name].reshape(-1)
        for c in coords:
            original = flat[c]
            flat[c] = original + h
            plus = f().item()
            flat[c] = original - h
            minus = f().item()
            flat[c] = original
            numeric = (plus - minus) / (2.0 * h)
            worst = max(worst, _relative_error(float(g_flat[c]), numeric))
        report[name] = worst
        p.zero_grad()
    return report


def check_gradients(
    f: Callable[[], Tensor],
    params: Sequence[Tensor] | Mapping[str, Tensor],
    h: float = 1e-5,
    max_coords: Optional[int] = 20,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Max over sampled coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|)."""
    report = gradient_report(f, params, h=h, max_coords=max_coords, rng=rng)
    return max(report.values(), default=0.0)
