"""
Finite-difference verification of analytic gradients
"""
from typing import Callable, Optional, Tuple

import numpy as np

from app.services.network import Gradients, ModelParams

LossFn = Callable[[ModelParams], Tuple[float, Gradients]]


def grad_check(
    params: ModelParams,
    loss_fn: LossFn,
    h: float = 1e-4,
    samples_per_array: int = 20,
    rng: Optional[np.random.Generator] = None,
    denominator_floor: float = 1e-2,
) -> float:
    """
    Compare analytic gradients with central differences on a parameter subsample

    Args:
        params: Parameters to perturb (restored afterwards)
        loss_fn: Returns (loss, analytic gradients) for the current params
        h: Finite-difference step
        samples_per_array: Coordinates checked per weight/bias array
        rng: Generator selecting the coordinates
        denominator_floor: Lower bound on the error denominator

    Returns:
        Max of |analytic - numeric| / max(|analytic|, |numeric|, floor)
    """
    rng = rng or np.random.default_rng(0)
    _, grads = loss_fn(params)
    analytic_arrays = [g.copy() for g in grads.arrays()]
    worst = 0.0
    for array, analytic in zip(params.arrays(), analytic_arrays):
        flat = array.reshape(-1)
        count = min(samples_per_array, flat.size)
        for j in rng.choice(flat.size, size=count, replace=False):
            original = flat[j]
            flat[j] = original + h
            plus, _ = loss_fn(params)
            flat[j] = original - h
            minus, _ = loss_fn(params)
            flat[j] = original
            numeric = (plus - minus) / (2.0 * h)
            a = analytic.reshape(-1)[j]
            error = abs(a - numeric) / max(abs(a), abs(numeric), denominator_floor)
            worst = max(worst, error)
    return worst
