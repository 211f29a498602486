"""
Adam optimizer over ModelParams
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.services.network import Gradients, ModelParams
from app.utils.exceptions import ShapeMismatchError


@dataclass
class AdamState:
    first: List[np.ndarray] = field(default_factory=list)
    second: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        arrays = params.arrays()
        return cls(first=[np.zeros_like(a) for a in arrays], second=[np.zeros_like(a) for a in arrays])


def adam_step(
    params: ModelParams,
    grads: Gradients,
    state: Optional[AdamState],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[ModelParams, AdamState]:
    """
    One bias-corrected Adam update, applied to params in place

    Raises:
        ShapeMismatchError: If grads do not match params
    """
    if state is None:
        state = AdamState.for_params(params)
    targets, updates = params.arrays(), grads.arrays()
    if len(targets) != len(updates) or any(t.shape != u.shape for t, u in zip(targets, updates)):
        raise ShapeMismatchError(message="Gradient shapes do not match parameters")

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for k, (param, grad) in enumerate(zip(targets, updates)):
        state.first[k] = beta1 * state.first[k] + (1.0 - beta1) * grad
        state.second[k] = beta2 * state.second[k] + (1.0 - beta2) * grad * grad
        m_hat = state.first[k] / correction1
        v_hat = state.second[k] / correction2
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state
