"""Adam over the model's named parameter tensors.

Moment updates run in place through a shared scratch buffer, so a step does
no per-tensor allocation; that matters because the first dense layer on
realistic feature counts holds tens of millions of parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, ModelParams


@dataclass
class AdamState:
    """First/second moment tensors mirroring the parameter dict."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    _scratch: np.ndarray | None = None

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={k: np.zeros_like(t) for k, t in params.tensors.items()},
            v={k: np.zeros_like(t) for k, t in params.tensors.items()},
            _scratch=np.empty(max(t.size for t in params.tensors.values())),
        )


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: ModelConfig | None = None,
) -> None:
    """One in-place Adam update. Iteration order is fixed (sorted keys)."""
    cfg = config or params.config
    state.step += 1
    bc1 = 1.0 - cfg.beta1 ** state.step
    bc2 = 1.0 - cfg.beta2 ** state.step
    if state._scratch is None:
        state._scratch = np.empty(max(t.size for t in params.tensors.values()))
    for key in sorted(params.tensors):
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        s = state._scratch[: g.size].reshape(g.shape)

        m *= cfg.beta1
        np.multiply(g, 1.0 - cfg.beta1, out=s)
        m += s
        v *= cfg.beta2
        np.multiply(g, g, out=s)
        s *= 1.0 - cfg.beta2
        v += s

        np.multiply(v, 1.0 / bc2, out=s)
        np.sqrt(s, out=s)
        s += cfg.epsilon
        np.divide(m, s, out=s)
        s *= cfg.learning_rate / bc1
        params.tensors[key] -= s
