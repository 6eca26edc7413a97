"""Single-step AdamW for the two prompt vectors, written out longhand.

Weight decay is decoupled: it shrinks the parameters directly instead of
being folded into the gradient, so the adaptive moments never see it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .objectives import GradPair
from .prompts import PromptPair


@dataclass(frozen=True)
class OptimHypers:
    lr: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self):
        # lr = 0 is allowed: it turns the step into the identity, which the
        # no-adaptation recovery checks rely on
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr!r}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1): {self.beta1}, {self.beta2}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps!r}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay!r}")


@dataclass(frozen=True)
class AdamWState:
    m_t: np.ndarray
    v_t: np.ndarray
    m_v: np.ndarray
    v_v: np.ndarray
    step_count: int

    @classmethod
    def zeros(cls, dim: int) -> "AdamWState":
        return cls(
            m_t=np.zeros(dim),
            v_t=np.zeros(dim),
            m_v=np.zeros(dim),
            v_v=np.zeros(dim),
            step_count=0,
        )


def _update(p, g, m, v, step, hp: OptimHypers):
    m_new = hp.beta1 * m + (1.0 - hp.beta1) * g
    v_new = hp.beta2 * v + (1.0 - hp.beta2) * g * g
    bias1 = 1.0 - hp.beta1 ** step
    bias2 = 1.0 - hp.beta2 ** step
    m_hat = m_new / bias1
    v_hat = v_new / bias2
    p_new = p * (1.0 - hp.lr * hp.weight_decay)
    p_new = p_new - hp.lr * m_hat / (np.sqrt(v_hat) + hp.eps)
    return p_new, m_new, v_new


def adamw_step(
    prompts: PromptPair, grads: GradPair, state: AdamWState, hypers: OptimHypers
) -> tuple[PromptPair, AdamWState]:
    """One bias-corrected moment update of both prompts. Pure: inputs untouched."""
    if grads.g_t.shape != prompts.p_t.shape or grads.g_v.shape != prompts.p_v.shape:
        raise ShapeMismatch("gradient shapes do not match the prompts")
    step = state.step_count + 1
    p_t, m_t, v_t = _update(prompts.p_t, grads.g_t, state.m_t, state.v_t, step, hypers)
    p_v, m_v, v_v = _update(prompts.p_v, grads.g_v, state.m_v, state.v_v, step, hypers)
    return (
        PromptPair(p_t=p_t, p_v=p_v),
        AdamWState(m_t=m_t, v_t=v_t, m_v=m_v, v_v=v_v, step_count=step),
    )
